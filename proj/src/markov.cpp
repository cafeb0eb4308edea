#include "coga/markov.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace coga {

int lumped_state_from_total(long long total_hamming, long long rule_count) {
  if (rule_count <= 0)
    throw std::invalid_argument("lumped_state: rule count must be > 0");
  if (total_hamming < 0)
    throw std::invalid_argument("lumped_state: negative Hamming total");
  return static_cast<int>((total_hamming + rule_count - 1) / rule_count);
}

int lumped_state_of(const std::vector<Population>& pops, const Chromosome& eq) {
  long long total = 0, count = 0;
  for (const auto& p : pops)
    for (const auto& c : p.members) {
      total += hamming(c, eq);
      ++count;
    }
  return lumped_state_from_total(total, count);
}

int lumped_state_of(const std::vector<PlayerState>& players,
                    const Chromosome& eq) {
  long long total = 0, count = 0;
  for (const auto& pl : players)
    for (const auto& c : pl.pop.members) {
      total += hamming(c, eq);
      ++count;
    }
  return lumped_state_from_total(total, count);
}

namespace {

void check_trace(const std::vector<GenerationTrace>& gens, int bits,
                 long burn_in) {
  if (gens.empty()) throw std::invalid_argument("empty trace");
  if (burn_in < 0 || burn_in >= static_cast<long>(gens.size()))
    throw std::invalid_argument("burn-in must leave at least one generation");
  for (const auto& g : gens)
    if (g.lumped_state < 0 || g.lumped_state > bits)
      throw std::invalid_argument("trace state outside [0, bits]");
}

}  // namespace

Eigen::VectorXd limiting_frequencies(const std::vector<GenerationTrace>& gens,
                                     int bits, long burn_in) {
  check_trace(gens, bits, burn_in);
  Eigen::VectorXd freq = Eigen::VectorXd::Zero(bits + 1);
  const auto kept = static_cast<long>(gens.size()) - burn_in;
  for (std::size_t i = static_cast<std::size_t>(burn_in); i < gens.size(); ++i)
    freq[gens[i].lumped_state] += 1.0;
  return freq / static_cast<double>(kept);
}

std::optional<long> generations_to_equilibrium(
    int initial_state, const std::vector<GenerationTrace>& gens) {
  if (initial_state == 0) return 0;
  for (const auto& g : gens)
    if (g.lumped_state == 0) return g.generation;
  return std::nullopt;
}

std::vector<long> interarrival_times(const std::vector<GenerationTrace>& gens) {
  std::vector<long> gaps;
  long last = -1;
  for (const auto& g : gens) {
    if (g.lumped_state != 0) continue;
    if (last >= 0) gaps.push_back(g.generation - last);
    last = g.generation;
  }
  return gaps;
}

double eq_game_fraction(const std::vector<GenerationTrace>& gens) {
  long long games = 0, eq = 0;
  for (const auto& g : gens) {
    games += g.games;
    eq += g.eq_games;
  }
  if (games == 0) throw std::invalid_argument("trace contains no games");
  return static_cast<double>(eq) / static_cast<double>(games);
}

ChainStats chain_stats(int initial_state,
                       const std::vector<GenerationTrace>& gens, int bits,
                       long burn_in) {
  check_trace(gens, bits, burn_in);
  ChainStats out;
  out.state_counts = Eigen::VectorXi::Zero(bits + 1);
  for (std::size_t i = static_cast<std::size_t>(burn_in); i < gens.size(); ++i)
    out.state_counts[gens[i].lumped_state] += 1;
  out.frequencies = out.state_counts.cast<double>() /
                    static_cast<double>(static_cast<long>(gens.size()) - burn_in);

  out.gens_to_eq = generations_to_equilibrium(initial_state, gens);
  out.interarrival = interarrival_times(gens);

  // A generation's games precede its update, so they count as post-S_0 play
  // only when the chain was already at S_0 before the generation started.
  bool reached = initial_state == 0;
  for (const auto& g : gens) {
    out.games += g.games;
    out.eq_games += g.eq_games;
    if (reached) {
      out.games_after_first += g.games;
      out.eq_games_after_first += g.eq_games;
    }
    if (g.lumped_state == 0) {
      ++out.s0_visits;
      reached = true;
    }
  }
  out.eq_fraction = out.games > 0 ? static_cast<double>(out.eq_games) /
                                        static_cast<double>(out.games)
                                  : 0.0;
  out.eq_fraction_after_first =
      out.games_after_first > 0
          ? static_cast<double>(out.eq_games_after_first) /
                static_cast<double>(out.games_after_first)
          : std::numeric_limits<double>::quiet_NaN();
  return out;
}

}  // namespace coga
