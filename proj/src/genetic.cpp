#include "coga/genetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace coga {

void validate(const GAParams& p) {
  if (!(p.p_cross >= 0.0 && p.p_cross <= 1.0))
    throw std::invalid_argument("GAParams: p_cross must be in [0, 1]");
  if (!(p.p_mut >= 0.0 && p.p_mut <= 1.0))
    throw std::invalid_argument("GAParams: p_mut must be in [0, 1]");
}

Eigen::VectorXd profits_to_fitness(
    const Eigen::Ref<const Eigen::VectorXd>& profits) {
  if (profits.size() == 0)
    throw std::invalid_argument("profits_to_fitness: empty input");
  if (!profits.allFinite())
    throw std::invalid_argument("profits_to_fitness: profits must be finite");
  const double lo = profits.minCoeff();
  const double hi = profits.maxCoeff();
  const double spread = hi > lo ? hi - lo : 1.0;
  return profits.array() - lo + 1e-6 * spread;
}

namespace {

// Cumulative-weight table; one binary search per draw.
class RouletteWheel {
 public:
  explicit RouletteWheel(const Eigen::Ref<const Eigen::VectorXd>& fitness) {
    if (fitness.size() == 0)
      throw std::invalid_argument("roulette_select: empty fitness");
    cum_.resize(static_cast<std::size_t>(fitness.size()));
    double acc = 0.0;
    for (Eigen::Index i = 0; i < fitness.size(); ++i) {
      const double f = fitness[i];
      if (!(f >= 0.0) || !std::isfinite(f))
        throw std::invalid_argument(
            "roulette_select: fitness must be finite and non-negative");
      acc += f;
      cum_[static_cast<std::size_t>(i)] = acc;
    }
    if (!(acc > 0.0))
      throw std::invalid_argument("roulette_select: total fitness must be > 0");
  }

  int draw(Rng& rng) const {
    const double u = uniform01(rng) * cum_.back();
    const auto it = std::upper_bound(cum_.begin(), cum_.end(), u);
    const auto idx = static_cast<std::size_t>(it - cum_.begin());
    return static_cast<int>(std::min(idx, cum_.size() - 1));
  }

 private:
  std::vector<double> cum_;
};

}  // namespace

std::vector<int> roulette_select(const Eigen::Ref<const Eigen::VectorXd>& fitness,
                                 int count, Rng& rng) {
  if (count < 0) throw std::invalid_argument("roulette_select: count < 0");
  const RouletteWheel wheel(fitness);
  std::vector<int> out(static_cast<std::size_t>(count));
  for (auto& i : out) i = wheel.draw(rng);
  return out;
}

std::pair<Chromosome, Chromosome> single_point_crossover(const Chromosome& a,
                                                         const Chromosome& b,
                                                         Rng& rng) {
  if (a.length() != b.length())
    throw std::invalid_argument("single_point_crossover: lengths differ");
  if (a.length() < 2)
    throw std::invalid_argument("single_point_crossover: need length >= 2");
  const int len = a.length();
  // Cut in [1, len-1]: the low `cut` bits swap owners.
  const int cut = 1 + static_cast<int>(uniform_below(rng, static_cast<std::uint32_t>(len - 1)));
  const std::uint32_t low = (std::uint32_t{1} << cut) - 1u;
  const std::uint32_t va = a.value(), vb = b.value();
  return {Chromosome((vb & ~low) | (va & low), len),
          Chromosome((va & ~low) | (vb & low), len)};
}

Chromosome mutate(const Chromosome& c, double p_mut, Rng& rng) {
  if (!(p_mut >= 0.0 && p_mut <= 1.0))
    throw std::invalid_argument("mutate: p_mut must be in [0, 1]");
  std::uint32_t v = c.value();
  for (int k = 0; k < c.length(); ++k)
    if (uniform01(rng) < p_mut) v ^= std::uint32_t{1} << k;
  return Chromosome(v, c.length());
}

Population next_generation(const Population& pop,
                           const Eigen::Ref<const Eigen::VectorXd>& fitness,
                           const GAParams& params, Rng& rng) {
  validate(params);
  const auto size = static_cast<Eigen::Index>(pop.members.size());
  if (size == 0 || size % 2 != 0)
    throw std::invalid_argument("next_generation: population size must be even");
  if (fitness.size() != size)
    throw std::invalid_argument("next_generation: fitness size mismatch");

  const RouletteWheel wheel(fitness);
  Population next;
  next.owner = pop.owner;
  next.members.reserve(pop.members.size());
  for (Eigen::Index pair = 0; pair < size / 2; ++pair) {
    const Chromosome& pa = pop.members[static_cast<std::size_t>(wheel.draw(rng))];
    const Chromosome& pb = pop.members[static_cast<std::size_t>(wheel.draw(rng))];
    auto [ca, cb] = params.p_cross >= 1.0 || uniform01(rng) < params.p_cross
                        ? single_point_crossover(pa, pb, rng)
                        : std::pair{pa, pb};
    next.members.push_back(mutate(ca, params.p_mut, rng));
    next.members.push_back(mutate(cb, params.p_mut, rng));
  }
  return next;
}

}  // namespace coga
