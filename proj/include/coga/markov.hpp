#ifndef COGA_MARKOV_HPP
#define COGA_MARKOV_HPP

#include <Eigen/Dense>

#include <optional>
#include <vector>

#include "coga/sim.hpp"

namespace coga {

// Lumped convergence states S_0 .. S_bits over the average Hamming distance
// d of all rules to the equilibrium rule: S_0 holds exactly when every rule
// equals it (d == 0); S_i holds when i-1 < d <= i. Computed in integer
// arithmetic (ceiling of total/count), so boundaries are exact.
int lumped_state_from_total(long long total_hamming, long long rule_count);
int lumped_state_of(const std::vector<Population>& pops, const Chromosome& eq);
int lumped_state_of(const std::vector<PlayerState>& players,
                    const Chromosome& eq);

// Occupation frequency of each lumped state over the trace, after dropping
// the first `burn_in` generations. Length bits+1. burn_in must leave at
// least one generation.
Eigen::VectorXd limiting_frequencies(const std::vector<GenerationTrace>& gens,
                                     int bits, long burn_in = 0);

// First generation (1-based) whose post-update state is S_0, or 0 when the
// run starts there, or nullopt when the chain never reaches S_0 (censored).
// Censored runs must be reported as censored, never folded into averages.
std::optional<long> generations_to_equilibrium(
    int initial_state, const std::vector<GenerationTrace>& gens);

// Gaps between consecutive S_0 visits within the trace (1 = stayed put).
std::vector<long> interarrival_times(const std::vector<GenerationTrace>& gens);

// Share of all games in which every player used the equilibrium rule.
double eq_game_fraction(const std::vector<GenerationTrace>& gens);

struct ChainStats {
  Eigen::VectorXi state_counts;  // length bits+1
  Eigen::VectorXd frequencies;   // state_counts / generations kept
  std::optional<long> gens_to_eq;
  long s0_visits = 0;
  std::vector<long> interarrival;
  long long games = 0;
  long long eq_games = 0;
  double eq_fraction = 0.0;
  // Play after the chain first sat in S_0: a generation's games count once
  // the preceding update left the populations fully converged. NaN fraction
  // when the chain never got there.
  long long games_after_first = 0;
  long long eq_games_after_first = 0;
  double eq_fraction_after_first = 0.0;
};

ChainStats chain_stats(int initial_state,
                       const std::vector<GenerationTrace>& gens, int bits,
                       long burn_in = 0);

}  // namespace coga

#endif
