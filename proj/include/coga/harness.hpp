#ifndef COGA_HARNESS_HPP
#define COGA_HARNESS_HPP

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "coga/markov.hpp"
#include "coga/sim.hpp"
#include "coga/stats.hpp"
#include "coga/trace_io.hpp"

namespace coga {

// A custom market for configs that do not use the catalogue.
struct CustomModel {
  DemandKind demand = DemandKind::Linear;
  double a = 0.0, b = 0.0, x = 0.0, y = 0.0;
  int players = 0;
};

// One experiment: a parameter grid over one model and algorithm, several
// seeds per grid point.
struct ExperimentConfig {
  std::string model = "linear4";  // catalogue id, or "custom"
  CustomModel custom;
  AlgorithmKind kind = AlgorithmKind::VriendIndividual;
  std::vector<int> pop = {20};
  std::vector<double> p_mut = {0.001};
  std::vector<long> generations = {1000};
  std::vector<int> ga_rate = {50};
  int bits = 0;  // 0 = pick by player count: 20 up to 9 players, 8 beyond
  InitMode init = InitMode::Random;
  std::uint64_t seed = 1;
  int seeds = 30;
  long burn_in = 0;
  std::string out;  // output directory; empty = no files
  bool traces = true;
  bool games = false;
  bool snapshots = false;
  int threads = 0;  // 0 = hardware concurrency
};

// key = value text, one key per line, lists space-separated. parse/write
// round-trip exactly.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig read_config(const std::filesystem::path& file);
std::string write_config(const ExperimentConfig& cfg);

MarketModel resolve_model(const ExperimentConfig& cfg);
int effective_bits(const ExperimentConfig& cfg, const MarketModel& model);

// The grid expands with pop outermost, then p_mut, generations, ga_rate.
// The returned params carry the per-run derived seed for replicate 0; the
// executor swaps in the seed for each replicate.
std::vector<SimulationParams> expand_grid(const ExperimentConfig& cfg);

struct RunOutcome {
  int grid_index = 0;
  int replicate = 0;
  SimulationParams params;
  bool failed = false;
  std::string error;
  int initial_state = 0;
  std::uint64_t final_hash = 0;
  ChainStats chain;
  RunQuantityStats quant;
  std::map<std::uint32_t, long long> same_quantity_games;
  std::string stats_json;
  std::filesystem::path trace_path;
};

// Aggregates over one grid point's replicates. Hitting-time summaries cover
// only runs that reached the all-equilibrium state; censored runs appear in
// the censored count and are never averaged in.
struct BatchReport {
  int grid_index = 0;
  SimulationParams params;
  int runs = 0;
  int failed = 0;
  int reached = 0;
  int censored = 0;
  double gens_to_eq_mean = 0.0;
  double gens_to_eq_median = 0.0;
  double interarrival_mean = 0.0;       // pooled gaps, reached runs
  double eq_fraction_mean = 0.0;        // whole-run fraction, mean over runs
  double eq_fraction_after_first = 0.0; // pooled over reached runs
  Eigen::VectorXd freq_all;             // occupation pooled over all runs
  Eigen::VectorXd freq_reached;         // pooled over reached runs (empty if none)
  double grand_mean_avg = 0.0;
  double grand_mean_sd = 0.0;
  BatchVerdicts verdicts;
  bool has_verdicts = false;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::string model_label;
  MarketModel model;
  double q_hat = 0.0;
  int bits = 0;
  std::vector<RunOutcome> runs;       // ordered by (grid_index, replicate)
  std::vector<BatchReport> reports;   // one per grid point
};

BatchReport make_report(const std::vector<const RunOutcome*>& outcomes,
                        double q_hat, int bits);

// Runs the whole experiment. With cfg.out set, writes per-run traces and
// stats records plus a report.json per grid point and a summary.json; the
// files are identical whatever the thread count. Per-run failures are
// recorded in the outcome and do not stop the batch.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

nlohmann::ordered_json report_json(const ExperimentResult& exp,
                                   const BatchReport& report);
nlohmann::ordered_json summary_json(const ExperimentResult& exp);

// Quantities an adapted population keeps proposing: games in which every
// player produced the same quantity, ranked by how often that happened.
// Each is screened against the equilibrium conditions.
struct DiscoveredRule {
  std::uint32_t value = 0;
  double quantity = 0.0;
  long long games = 0;
  bool confirmed = false;     // passes the equilibrium check
  double response_gap = 0.0;  // |best response - quantity|
};

std::vector<DiscoveredRule> discover_rules(const RunResult& run,
                                           const SimContext& ctx,
                                           double tol = 1e-3, int top = 10);

// Reference studies bundled with the tool. Each reruns a well-known setting
// at desk scale and checks loose qualitative bounds against its reference
// values; `scale` is the seed count per batch setting.
struct ReplicationCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ReplicationReport {
  std::string study;
  std::vector<ReplicationCheck> checks;
  nlohmann::ordered_json details;
  bool ok() const;
};

const std::vector<std::string>& replication_studies();
ReplicationReport run_replication(const std::string& study, int scale,
                                  std::uint64_t seed,
                                  const std::string& out_dir, int threads);

}  // namespace coga

#endif
