#ifndef COGA_ENCODING_HPP
#define COGA_ENCODING_HPP

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace coga {

// Fixed-length binary string holding a production rule. Bit k (1 = least
// significant) corresponds to position L-k+1 in the written-out string, so
// to_string() prints most significant bit first.
class Chromosome {
 public:
  Chromosome() = default;
  Chromosome(std::uint32_t value, int length);

  static Chromosome from_string(std::string_view bits);

  std::uint32_t value() const { return value_; }
  int length() const { return length_; }

  bool bit(int k) const;                    // k in [1, length]
  Chromosome with_bit_flipped(int k) const;
  Chromosome complement() const;

  std::string to_string() const;

  bool operator==(const Chromosome&) const = default;

 private:
  std::uint32_t value_ = 0;
  int length_ = 0;
};

// Number of differing bit positions. Lengths must match.
int hamming(const Chromosome& a, const Chromosome& b);

// One player's pool of candidate rules.
struct Population {
  std::vector<Chromosome> members;
  int owner = -1;
};

// Mean Hamming distance to `target` over every member of every population.
double avg_hamming_to(const std::vector<Population>& pops,
                      const Chromosome& target);

// Maps chromosomes to quantities on [0, q_max]:
//   q = q_max * V / (2^bits - 1)
// where V is the chromosome's integer value.
struct QuantityCodec {
  int bits = 0;
  double q_max = 0.0;

  QuantityCodec() = default;
  QuantityCodec(int bits, double q_max);

  // q_max = 3 * q_hat puts the equilibrium exactly one third up the range.
  static QuantityCodec for_equilibrium(double q_hat, int bits);

  double decode(const Chromosome& c) const;

  // With q_max = 3*q_hat and even length, (2^L - 1)/3 decodes to q_hat
  // exactly; its bit pattern is 0101...01. Throws on odd length.
  Chromosome equilibrium_chromosome() const;

  // Bitwise complement of the equilibrium rule; decodes to 2*q_hat.
  Chromosome anti_equilibrium_chromosome() const;
};

}  // namespace coga

#endif
