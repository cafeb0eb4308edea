#ifndef COGA_GENETIC_HPP
#define COGA_GENETIC_HPP

#include <Eigen/Dense>

#include <utility>
#include <vector>

#include "coga/encoding.hpp"
#include "coga/rng.hpp"

namespace coga {

struct GAParams {
  double p_cross = 1.0;  // probability a mating pair is crossed
  double p_mut = 0.0;    // independent flip probability per bit
};

void validate(const GAParams& p);

// Shifts profits into usable selection weights:
//   fitness_i = profit_i - min(profit) + eps,  eps = 1e-6 * spread
// with spread = max - min, or 1 when all profits are equal. Keeps weights
// strictly positive so the worst member retains a sliver of probability and
// roulette selection is invariant to adding a constant to all profits.
Eigen::VectorXd profits_to_fitness(const Eigen::Ref<const Eigen::VectorXd>& profits);

// Fitness-proportional sampling with replacement; returns `count` indices.
// Weights must be non-negative with a positive sum.
std::vector<int> roulette_select(const Eigen::Ref<const Eigen::VectorXd>& fitness,
                                 int count, Rng& rng);

// Swaps the tails below a uniformly drawn cut point in [1, L-1]. Both
// children are produced from the same cut.
std::pair<Chromosome, Chromosome> single_point_crossover(const Chromosome& a,
                                                         const Chromosome& b,
                                                         Rng& rng);

// Flips each bit independently with probability p_mut. Always consumes one
// uniform draw per bit, so the draw pattern does not depend on outcomes.
Chromosome mutate(const Chromosome& c, double p_mut, Rng& rng);

// One canonical generation: repeatedly pick two parents by roulette (a member
// may be picked twice), cross them, mutate both children, and keep all
// offspring. No elitism, so the population size must be even.
Population next_generation(const Population& pop,
                           const Eigen::Ref<const Eigen::VectorXd>& fitness,
                           const GAParams& params, Rng& rng);

}  // namespace coga

#endif
