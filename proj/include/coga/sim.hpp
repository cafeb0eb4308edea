#ifndef COGA_SIM_HPP
#define COGA_SIM_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "coga/encoding.hpp"
#include "coga/genetic.hpp"
#include "coga/market.hpp"
#include "coga/rng.hpp"

namespace coga {

// The four learning rules.
//   VriendIndividual: one rule chosen per game; per-player GA every ga_rate games.
//   VriendSocial:     as above, but one pooled GA across all players.
//   CoevolIndividual: every rule plays exactly once per generation via random
//                     matchups; per-player GA each generation.
//   CoevolSocial:     co-evolutionary matchups with a pooled GA.
enum class AlgorithmKind {
  VriendIndividual,
  VriendSocial,
  CoevolIndividual,
  CoevolSocial,
};

const char* to_string(AlgorithmKind kind);
AlgorithmKind algorithm_from_string(const std::string& s);
bool uses_periods(AlgorithmKind kind);  // Vriend variants play period games
bool is_social(AlgorithmKind kind);     // social variants pool the GA

enum class InitMode { Random, AntiEquilibrium, Equilibrium, Explicit };

const char* to_string(InitMode mode);
InitMode init_mode_from_string(const std::string& s);

struct SimulationParams {
  std::string model_id = "linear4";
  AlgorithmKind kind = AlgorithmKind::VriendIndividual;
  int population_size = 20;  // rules per player, must be even
  int bits = 20;             // rule length, must be even
  double p_mut = 0.001;
  double p_cross = 1.0;
  int ga_rate = 50;          // games per generation for Vriend variants
  long generations = 1000;
  std::uint64_t seed = 1;
  InitMode init = InitMode::Random;
  std::vector<Population> explicit_init;  // used when init == Explicit
};

void validate(const SimulationParams& p);

// Market facts resolved once per run.
struct SimContext {
  MarketModel model;
  NashSolution equilibrium;
  QuantityCodec codec;
  Chromosome eq_chromosome;
};

SimContext make_context(const MarketModel& model, int bits,
                        double nash_tol = 1e-6);

// Value a profit cell holds before any game has touched it. Cells are
// slot-persistent: a game overwrites the chosen slot, and population updates
// leave slot values in place for the offspring that land there, so selection
// always reads the most recent profit recorded at each slot.
inline constexpr double kUnplayedProfit = 1.0;

struct PlayerState {
  Population pop;
  Eigen::VectorXd profit;             // last realized profit per slot
  std::vector<std::uint8_t> played;   // whether the slot played since the last update
};

struct SimulationState {
  std::vector<PlayerState> players;
  long period = 0;      // games played so far (Vriend variants)
  long generation = 0;  // updates applied so far
};

SimulationState init_state(const SimulationParams& p, const SimContext& ctx,
                           Rng& rng);

// Snapshot of the populations for hashing and replay checks.
std::uint64_t population_hash(const std::vector<PlayerState>& players);

struct GameRecord {
  long generation = 0;
  int game = 0;
  std::vector<int> chosen;  // rule index per player
  Eigen::VectorXd quantities;
  double price = 0.0;
  Eigen::VectorXd profits;
  bool equilibrium_game = false;  // every player used the equilibrium rule
};

// Per-generation row written to traces and consumed by the analysis passes.
struct GenerationTrace {
  long generation = 0;
  int lumped_state = 0;  // set after the generation's GA update
  int eq_games = 0;      // games where all players played the equilibrium rule
  int games = 0;
  double mean_q = 0.0;   // mean over the generation's games of the game mean quantity
  double ssd_q = 0.0;    // sum over games of (game mean quantity - q_hat)^2
  Eigen::VectorXd player_mean_q;
  std::uint64_t pop_hash = 0;
};

// Observer for run output. Default implementation ignores everything; the
// wants_* switches let the engine skip building records nobody reads.
class TraceSink {
 public:
  virtual ~TraceSink() = default;
  virtual void on_run_start(const SimulationParams&, const SimContext&, int,
                            std::uint64_t) {}
  virtual void on_generation(const GenerationTrace&) {}
  virtual bool wants_games() const { return false; }
  virtual void on_game(const GameRecord&) {}
  virtual bool wants_populations() const { return false; }
  virtual void on_populations(long, const std::vector<PlayerState>&) {}
};

// Optional collector for game-level facts that per-generation rows drop.
struct GameTally {
  // Games where every player produced the same quantity, keyed by the shared
  // rule value. Feeds the equilibrium-discovery report.
  std::map<std::uint32_t, long long> same_quantity_games;
};

// One market interaction for the Vriend variants: every player picks one rule
// uniformly at random (player order, one draw each), the game is played, and
// each chosen rule's profit cell is overwritten with its realized profit.
GameRecord play_vriend_period(SimulationState& state, const SimContext& ctx,
                              Rng& rng);

// One co-evolutionary round: each player's rules are permuted independently
// (player order), then population_size games are played so that every rule
// plays exactly once. Realized profits overwrite the profit cells.
void coevol_round(SimulationState& state, const SimContext& ctx, Rng& rng,
                  GenerationTrace& trace, TraceSink* sink = nullptr,
                  GameTally* tally = nullptr);

// Applies the GA. Individual variants evolve each player's pool separately
// (player order); social variants concatenate all pools (player order),
// evolve once, and deal the offspring back out in blocks of population_size.
// Selection reads the profit cells as they stand, so a slot that did not play
// since the last update competes with whatever profit it held before (see
// kUnplayedProfit). Clears the played flags; leaves the cells in place.
void update_populations(SimulationState& state, const SimulationParams& p,
                        Rng& rng);

// One full generation (ga_rate period games, then the update) for Vriend
// variants, or (one co-evolutionary round, then the update) for co-evol
// variants. Returns the per-generation trace row.
GenerationTrace vriend_generation(SimulationState& state,
                                  const SimulationParams& p,
                                  const SimContext& ctx, Rng& rng,
                                  TraceSink* sink = nullptr,
                                  GameTally* tally = nullptr);
GenerationTrace coevol_generation(SimulationState& state,
                                  const SimulationParams& p,
                                  const SimContext& ctx, Rng& rng,
                                  TraceSink* sink = nullptr,
                                  GameTally* tally = nullptr);

struct RunResult {
  SimulationParams params;
  double q_hat = 0.0;
  double q_max = 0.0;
  double nash_residual = 0.0;
  int initial_state = 0;
  std::uint64_t initial_hash = 0;
  std::vector<GenerationTrace> gens;
  std::map<std::uint32_t, long long> same_quantity_games;
};

RunResult run_simulation(const SimulationParams& p, const MarketModel& model,
                         TraceSink* sink = nullptr);
// Looks the model up in the catalogue by params.model_id.
RunResult run_simulation(const SimulationParams& p, TraceSink* sink = nullptr);

// Expected profit of every rule under uniform random opponent matchups:
// exact enumeration over the opponents' product space when it has at most
// `enumeration_cap` combinations, Monte Carlo with `samples` draws otherwise.
// Row i holds player i's rules.
Eigen::MatrixXd expected_coevol_profits(const std::vector<Population>& pops,
                                        const MarketModel& model,
                                        const QuantityCodec& codec,
                                        long samples = 100000, Rng* rng = nullptr,
                                        long enumeration_cap = 1000000);

}  // namespace coga

#endif
