#include "coga/encoding.hpp"

#include <bit>
#include <stdexcept>

namespace coga {

namespace {

constexpr int kMaxLength = 30;

std::uint32_t full_mask(int length) {
  return (std::uint32_t{1} << length) - 1u;
}

}  // namespace

Chromosome::Chromosome(std::uint32_t value, int length)
    : value_(value), length_(length) {
  if (length < 1 || length > kMaxLength)
    throw std::invalid_argument("Chromosome: length must be in [1, 30]");
  if (value > full_mask(length))
    throw std::invalid_argument("Chromosome: value exceeds bit length");
}

Chromosome Chromosome::from_string(std::string_view bits) {
  if (bits.empty() || bits.size() > kMaxLength)
    throw std::invalid_argument("Chromosome: string length must be in [1, 30]");
  std::uint32_t v = 0;
  for (char c : bits) {
    if (c != '0' && c != '1')
      throw std::invalid_argument("Chromosome: string must be 0s and 1s");
    v = (v << 1) | static_cast<std::uint32_t>(c - '0');
  }
  return Chromosome(v, static_cast<int>(bits.size()));
}

bool Chromosome::bit(int k) const {
  if (k < 1 || k > length_)
    throw std::invalid_argument("Chromosome: bit index out of range");
  return (value_ >> (k - 1)) & 1u;
}

Chromosome Chromosome::with_bit_flipped(int k) const {
  if (k < 1 || k > length_)
    throw std::invalid_argument("Chromosome: bit index out of range");
  return Chromosome(value_ ^ (std::uint32_t{1} << (k - 1)), length_);
}

Chromosome Chromosome::complement() const {
  return Chromosome(value_ ^ full_mask(length_), length_);
}

std::string Chromosome::to_string() const {
  std::string s(static_cast<std::size_t>(length_), '0');
  for (int k = 1; k <= length_; ++k)
    if (bit(k)) s[static_cast<std::size_t>(length_ - k)] = '1';
  return s;
}

int hamming(const Chromosome& a, const Chromosome& b) {
  if (a.length() != b.length())
    throw std::invalid_argument("hamming: lengths differ");
  return std::popcount(a.value() ^ b.value());
}

double avg_hamming_to(const std::vector<Population>& pops,
                      const Chromosome& target) {
  long long total = 0, count = 0;
  for (const auto& p : pops)
    for (const auto& c : p.members) {
      total += hamming(c, target);
      ++count;
    }
  if (count == 0)
    throw std::invalid_argument("avg_hamming_to: no chromosomes");
  return static_cast<double>(total) / static_cast<double>(count);
}

QuantityCodec::QuantityCodec(int bits, double q_max) : bits(bits), q_max(q_max) {
  if (bits < 1 || bits > kMaxLength)
    throw std::invalid_argument("QuantityCodec: bits must be in [1, 30]");
  if (!(q_max > 0.0))
    throw std::invalid_argument("QuantityCodec: q_max must be > 0");
}

QuantityCodec QuantityCodec::for_equilibrium(double q_hat, int bits) {
  if (!(q_hat > 0.0))
    throw std::invalid_argument("QuantityCodec: q_hat must be > 0");
  return QuantityCodec(bits, 3.0 * q_hat);
}

double QuantityCodec::decode(const Chromosome& c) const {
  if (c.length() != bits)
    throw std::invalid_argument("decode: chromosome length does not match codec");
  return q_max * (static_cast<double>(c.value()) /
                  static_cast<double>(full_mask(bits)));
}

Chromosome QuantityCodec::equilibrium_chromosome() const {
  if (bits % 2 != 0)
    throw std::invalid_argument(
        "equilibrium_chromosome: needs an even bit length");
  return Chromosome(full_mask(bits) / 3u, bits);
}

Chromosome QuantityCodec::anti_equilibrium_chromosome() const {
  return equilibrium_chromosome().complement();
}

}  // namespace coga
