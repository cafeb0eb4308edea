#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "coga/harness.hpp"
#include "coga/markov.hpp"
#include "coga/sim.hpp"
#include "coga/stats.hpp"
#include "coga/trace_io.hpp"

namespace {

using namespace coga;

struct ModelOptions {
  std::string model = "linear4";
  CustomModel custom;
};

void add_model_options(CLI::App* cmd, ModelOptions& opt) {
  cmd->add_option("--model", opt.model,
                  "catalogue id (linear4 linear20 poly4 poly20 radical4 "
                  "radical20) or 'custom'")
      ->capture_default_str();
  std::map<std::string, DemandKind> demand_names{
      {"linear", DemandKind::Linear},
      {"polynomial", DemandKind::Polynomial},
      {"radical", DemandKind::Radical}};
  cmd->add_option("--demand", opt.custom.demand, "custom demand kind")
      ->transform(CLI::CheckedTransformer(demand_names, CLI::ignore_case));
  cmd->add_option("--a", opt.custom.a, "custom demand coefficient a");
  cmd->add_option("--b", opt.custom.b, "custom demand coefficient b");
  cmd->add_option("--x", opt.custom.x, "custom marginal cost");
  cmd->add_option("--y", opt.custom.y, "custom fixed cost");
  cmd->add_option("--players", opt.custom.players, "custom player count");
}

void apply_model(const ModelOptions& opt, ExperimentConfig& cfg) {
  cfg.model = opt.model;
  cfg.custom = opt.custom;
}

std::string default_out() {
  const char* env = std::getenv("COGA_OUT");
  return env ? env : "";
}

void print_batch(std::ostream& os, const ExperimentResult& exp,
                 const BatchReport& r) {
  os << "grid " << r.grid_index << ": pop=" << r.params.population_size
     << " p_mut=" << format_double(r.params.p_mut)
     << " T=" << r.params.generations;
  if (uses_periods(r.params.kind)) os << " ga_rate=" << r.params.ga_rate;
  os << "\n  runs " << r.runs << " (failed " << r.failed << "), reached S0: "
     << r.reached << ", censored: " << r.censored << "\n";
  if (r.reached > 0) {
    os << "  generations to S0: median " << format_double(r.gens_to_eq_median)
       << ", mean " << format_double(r.gens_to_eq_mean) << "\n";
    os << "  mean return time: " << format_double(r.interarrival_mean) << "\n";
    os << "  eq-game fraction after first hit: "
       << format_double(r.eq_fraction_after_first) << "\n";
  }
  os << "  eq-game fraction (whole runs): "
     << format_double(r.eq_fraction_mean) << "\n";
  os << "  grand mean quantity: " << format_double(r.grand_mean_avg) << " (sd "
     << format_double(r.grand_mean_sd) << "), equilibrium "
     << format_double(exp.q_hat) << "\n";
  if (r.has_verdicts) {
    os << "  H0 grand mean = equilibrium: "
       << (r.verdicts.grand.accepted ? "accepted" : "rejected") << "\n";
    os << "  H0 per-player mean = equilibrium:";
    for (std::size_t i = 0; i < r.verdicts.per_player.size(); ++i)
      os << ' ' << (r.verdicts.per_player[i].accepted ? "accepted" : "rejected");
    os << "\n";
  }
  os << "  occupation (top states):";
  std::vector<std::pair<double, int>> top;
  for (Eigen::Index s = 0; s < r.freq_all.size(); ++s)
    if (r.freq_all[s] > 0) top.emplace_back(r.freq_all[s], static_cast<int>(s));
  std::sort(top.rbegin(), top.rend());
  for (std::size_t i = 0; i < top.size() && i < 5; ++i)
    os << " S" << top[i].second << "=" << format_double(top[i].first);
  os << "\n";
}

int cmd_run(const ExperimentConfig& cfg, bool as_json) {
  const auto exp = run_experiment(cfg);
  if (as_json) {
    std::cout << summary_json(exp).dump(2) << '\n';
    for (const auto& r : exp.reports)
      std::cout << report_json(exp, r).dump(2) << '\n';
  } else {
    std::cout << "model " << exp.model_label << " ("
              << to_string(exp.model.demand.kind) << ", n=" << exp.model.n
              << "), algorithm " << to_string(exp.config.kind) << ", bits "
              << exp.bits << ", equilibrium quantity "
              << format_double(exp.q_hat) << "\n";
    for (const auto& r : exp.reports) print_batch(std::cout, exp, r);
    if (!cfg.out.empty())
      std::cout << "artifacts in " << cfg.out << "\n";
  }
  for (const auto& o : exp.runs)
    if (o.failed) {
      std::cerr << "run failure (grid " << o.grid_index << " replicate "
                << o.replicate << "): " << o.error << '\n';
      return 2;
    }
  return 0;
}

int cmd_nash(const ModelOptions& opt, int bits, double tol) {
  ExperimentConfig cfg;
  apply_model(opt, cfg);
  const MarketModel model = resolve_model(cfg);
  const auto checks = validate_model_assumptions(model);
  bool all_ok = true;
  for (const auto& c : checks) all_ok = all_ok && c.passed;

  const NashSolution nash = symmetric_nash(model, tol);
  const int L = bits != 0 ? bits : (model.n <= 9 ? 20 : 8);
  std::cout << "model " << cfg.model << ": " << to_string(model.demand.kind)
            << " demand, a=" << format_double(model.demand.a)
            << " b=" << format_double(model.demand.b)
            << ", cost x=" << format_double(model.cost.x)
            << " y=" << format_double(model.cost.y) << ", n=" << model.n
            << "\n";
  std::cout << "equilibrium quantity " << format_double(nash.q_hat)
            << " (marginal-profit residual " << format_double(nash.residual)
            << ")\n";
  std::cout << "verified against deviation grid: "
            << (verify_nash_candidate(model, nash.q_hat) ? "yes" : "no")
            << "\n";
  if (L % 2 == 0) {
    const auto codec = QuantityCodec::for_equilibrium(nash.q_hat, L);
    std::cout << "codec: bits " << L << ", q_max "
              << format_double(codec.q_max) << ", equilibrium rule "
              << codec.equilibrium_chromosome().to_string() << "\n";
  }
  for (const auto& c : checks)
    std::cout << "check: " << c.name << ": " << (c.passed ? "ok" : "FAILED")
              << (c.detail.empty() ? "" : " (" + c.detail + ")") << "\n";
  return all_ok ? 0 : 2;
}

int cmd_discover(const ExperimentConfig& cfg, double tol, int top) {
  const MarketModel model = resolve_model(cfg);
  const int bits = effective_bits(cfg, model);
  const SimContext ctx = make_context(model, bits);

  auto grid = expand_grid(cfg);
  SimulationParams params = grid.front();
  params.seed = derive_run_seed(cfg.seed, 0, 0);
  const RunResult run = run_simulation(params, model);
  const auto rules = discover_rules(run, ctx, tol, top);

  std::cout << "run: " << to_string(params.kind) << " on " << cfg.model
            << ", pop " << params.population_size << ", p_mut "
            << format_double(params.p_mut) << ", T " << params.generations
            << "\n";
  std::cout << "equilibrium quantity " << format_double(ctx.equilibrium.q_hat)
            << ", equilibrium rule value "
            << ctx.eq_chromosome.value() << "\n";
  if (rules.empty()) {
    std::cout << "no games where all players produced the same quantity\n";
    return 0;
  }
  std::cout << "rule value | quantity | games | equilibrium | response gap\n";
  for (const auto& d : rules)
    std::cout << d.value << " | " << format_double(d.quantity) << " | "
              << d.games << " | " << (d.confirmed ? "confirmed" : "no") << " | "
              << format_double(d.response_gap) << "\n";
  return 0;
}

int cmd_replicate(const std::string& study, int scale, std::uint64_t seed,
                  const std::string& out, int threads) {
  if (study == "list") {
    for (const auto& s : replication_studies()) std::cout << s << '\n';
    return 0;
  }
  const auto rep = run_replication(study, scale, seed, out, threads);
  std::cout << "study " << rep.study << "\n";
  for (const auto& c : rep.checks)
    std::cout << (c.passed ? "  pass  " : "  FAIL  ") << c.name
              << (c.detail.empty() ? "" : " [" + c.detail + "]") << "\n";
  if (!rep.details.empty())
    std::cout << "details:\n" << rep.details.dump(2) << "\n";
  if (!out.empty()) {
    std::filesystem::create_directories(out);
    nlohmann::ordered_json j;
    j["study"] = rep.study;
    j["ok"] = rep.ok();
    nlohmann::ordered_json cj = nlohmann::ordered_json::array();
    for (const auto& c : rep.checks)
      cj.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
    j["checks"] = cj;
    j["details"] = rep.details;
    std::ofstream f(std::filesystem::path(out) / (rep.study + ".json"));
    f << j.dump(2) << '\n';
  }
  return rep.ok() ? 0 : 3;
}

int cmd_analyze(const std::vector<std::string>& inputs, long burn_in,
                bool write) {
  std::vector<std::filesystem::path> files;
  for (const auto& in : inputs) {
    const std::filesystem::path p(in);
    if (std::filesystem::is_directory(p)) {
      for (const auto& e : std::filesystem::recursive_directory_iterator(p))
        if (e.is_regular_file() &&
            e.path().string().ends_with(".trace.csv"))
          files.push_back(e.path());
      std::sort(files.begin(), files.end());
    } else {
      files.push_back(p);
    }
  }
  if (files.empty()) throw std::invalid_argument("analyze: no trace files");

  std::vector<RunQuantityStats> quants;
  double q_hat = 0.0;
  bool homogeneous = true;
  std::string first_sig;

  for (const auto& f : files) {
    const TraceData data = read_trace(f);
    const RunHeader& h = data.header;
    const ChainStats chain =
        chain_stats(h.initial_state, data.gens, h.params.bits, burn_in);
    const RunQuantityStats quant =
        quantity_stats(data.gens, h.model.n, h.q_hat);
    const auto record =
        run_stats_json(h, chain, quant, data.gens.back().pop_hash);
    if (write) {
      auto out = f;
      out.replace_extension();  // drop .csv
      out.replace_extension(".stats.json");
      std::ofstream sf(out);
      sf << record.dump(2) << '\n';
      std::cout << f.string() << " -> " << out.string() << '\n';
    } else {
      std::cout << record.dump(2) << '\n';
    }

    std::string sig = record["model"].dump() + "|" +
                      std::to_string(h.params.population_size) + "|" +
                      format_double(h.params.p_mut) + "|" +
                      std::to_string(h.params.generations) + "|" +
                      to_string(h.params.kind);
    if (first_sig.empty()) {
      first_sig = sig;
      q_hat = h.q_hat;
    } else if (sig != first_sig) {
      homogeneous = false;
    }
    quants.push_back(quant);
  }

  if (quants.size() >= 2 && homogeneous) {
    const auto v = batch_verdicts(quants, q_hat);
    std::cout << "batch of " << quants.size() << " runs:\n";
    std::cout << "  H0 grand mean = " << format_double(q_hat) << ": "
              << (v.grand.accepted ? "accepted" : "rejected") << " (statistic "
              << format_double(v.grand.statistic) << ", critical "
              << format_double(v.grand.critical) << ")\n";
    for (std::size_t i = 0; i < v.per_player.size(); ++i)
      std::cout << "  H0 player " << i + 1 << " mean = equilibrium: "
                << (v.per_player[i].accepted ? "accepted" : "rejected")
                << " (statistic " << format_double(v.per_player[i].statistic)
                << ")\n";
  } else if (quants.size() >= 2) {
    std::cout << "traces mix parameter sets; skipping batch verdicts\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "co-evolutionary learning in symmetric quantity-setting markets"};
  app.require_subcommand(1);

  std::map<std::string, AlgorithmKind> alg_names{
      {"vriend-individual", AlgorithmKind::VriendIndividual},
      {"vi", AlgorithmKind::VriendIndividual},
      {"vriend-social", AlgorithmKind::VriendSocial},
      {"vs", AlgorithmKind::VriendSocial},
      {"coevol-individual", AlgorithmKind::CoevolIndividual},
      {"cp", AlgorithmKind::CoevolIndividual},
      {"coevol-social", AlgorithmKind::CoevolSocial},
      {"cs", AlgorithmKind::CoevolSocial}};
  std::map<std::string, InitMode> init_names{
      {"random", InitMode::Random},
      {"anti-equilibrium", InitMode::AntiEquilibrium},
      {"equilibrium", InitMode::Equilibrium}};

  // run: one parameter point, possibly many seeds
  auto* run = app.add_subcommand("run", "simulate one parameter point");
  ModelOptions run_model;
  ExperimentConfig run_cfg;
  run_cfg.out = default_out();
  run_cfg.seeds = 1;  // `run` is one run unless asked; `sweep` keeps 30
  bool run_json = false;
  int run_pop = 20, run_garate = 50;
  double run_pmut = 0.001;
  long run_gens = 1000;
  add_model_options(run, run_model);
  run->add_option("--alg", run_cfg.kind, "learning rule")
      ->transform(CLI::CheckedTransformer(alg_names, CLI::ignore_case));
  run->add_option("--pop", run_pop, "rules per player (even)")
      ->capture_default_str();
  run->add_option("--p-mut", run_pmut, "per-bit mutation probability")
      ->capture_default_str();
  run->add_option("--gens", run_gens, "generations")->capture_default_str();
  run->add_option("--ga-rate", run_garate, "games per generation (Vriend)")
      ->capture_default_str();
  run->add_option("--bits", run_cfg.bits,
                  "rule length; 0 picks 20 (small n) or 8 (large n)");
  run->add_option("--init", run_cfg.init, "initial populations")
      ->transform(CLI::CheckedTransformer(init_names, CLI::ignore_case));
  run->add_option("--seed", run_cfg.seed, "base seed")->capture_default_str();
  run->add_option("--seeds", run_cfg.seeds, "replicates")
      ->capture_default_str();
  run->add_option("--burn-in", run_cfg.burn_in,
                  "generations dropped from occupation frequencies");
  run->add_option("--out", run_cfg.out,
                  "output directory (default $COGA_OUT; empty = no files)");
  run->add_flag("--games", run_cfg.games, "also write game-level rows");
  run->add_flag("--snapshots", run_cfg.snapshots,
                "also write population snapshots");
  bool run_no_traces = false;
  run->add_flag("--no-traces", run_no_traces, "skip trace files");
  run->add_option("--threads", run_cfg.threads, "worker threads (0 = auto)");
  run->add_flag("--json", run_json, "print reports as JSON");

  // sweep: full grid from a config file plus overrides
  auto* sweep = app.add_subcommand("sweep", "run a parameter grid");
  std::string sweep_config_path;
  ModelOptions sweep_model;
  std::vector<int> sweep_pop, sweep_garate;
  std::vector<double> sweep_pmut;
  std::vector<long> sweep_gens;
  ExperimentConfig sweep_cfg;
  bool sweep_json = false;
  sweep->add_option("--config", sweep_config_path, "config file (key = value)");
  add_model_options(sweep, sweep_model);
  sweep->add_option("--alg", sweep_cfg.kind, "learning rule")
      ->transform(CLI::CheckedTransformer(alg_names, CLI::ignore_case));
  sweep->add_option("--pop", sweep_pop, "population grid");
  sweep->add_option("--p-mut", sweep_pmut, "mutation grid");
  sweep->add_option("--gens", sweep_gens, "generations grid");
  sweep->add_option("--ga-rate", sweep_garate, "rate grid (Vriend)");
  sweep->add_option("--bits", sweep_cfg.bits, "rule length (0 = default)");
  sweep->add_option("--init", sweep_cfg.init, "initial populations")
      ->transform(CLI::CheckedTransformer(init_names, CLI::ignore_case));
  sweep->add_option("--seed", sweep_cfg.seed, "base seed");
  sweep->add_option("--seeds", sweep_cfg.seeds, "replicates per grid point");
  sweep->add_option("--burn-in", sweep_cfg.burn_in, "occupation burn-in");
  sweep->add_option("--out", sweep_cfg.out, "output directory");
  sweep->add_flag("--games", sweep_cfg.games, "write game-level rows");
  sweep->add_flag("--snapshots", sweep_cfg.snapshots, "write snapshots");
  bool sweep_no_traces = false;
  sweep->add_flag("--no-traces", sweep_no_traces, "skip trace files");
  sweep->add_option("--threads", sweep_cfg.threads, "worker threads");
  sweep->add_flag("--json", sweep_json, "print reports as JSON");

  // nash: equilibrium facts for a model
  auto* nash = app.add_subcommand("nash", "solve the symmetric equilibrium");
  ModelOptions nash_model;
  int nash_bits = 0;
  double nash_tol = 1e-6;
  add_model_options(nash, nash_model);
  nash->add_option("--bits", nash_bits, "codec length to display");
  nash->add_option("--tol", nash_tol, "solver tolerance")->capture_default_str();

  // discover: quantities an adapted run keeps proposing
  auto* discover = app.add_subcommand(
      "discover", "find self-reinforcing quantities in one run");
  ModelOptions disc_model;
  ExperimentConfig disc_cfg;
  disc_cfg.kind = AlgorithmKind::VriendSocial;
  int disc_pop = 40, disc_garate = 50, disc_top = 10;
  double disc_pmut = 0.00025, disc_tol = 1e-3;
  long disc_gens = 10000;
  add_model_options(discover, disc_model);
  discover->add_option("--alg", disc_cfg.kind, "learning rule")
      ->transform(CLI::CheckedTransformer(alg_names, CLI::ignore_case));
  discover->add_option("--pop", disc_pop, "rules per player")
      ->capture_default_str();
  discover->add_option("--p-mut", disc_pmut, "mutation probability")
      ->capture_default_str();
  discover->add_option("--gens", disc_gens, "generations")
      ->capture_default_str();
  discover->add_option("--ga-rate", disc_garate, "games per generation")
      ->capture_default_str();
  discover->add_option("--bits", disc_cfg.bits, "rule length (0 = default)");
  discover->add_option("--init", disc_cfg.init, "initial populations")
      ->transform(CLI::CheckedTransformer(init_names, CLI::ignore_case));
  discover->add_option("--seed", disc_cfg.seed, "seed");
  discover->add_option("--tol", disc_tol, "equilibrium check tolerance")
      ->capture_default_str();
  discover->add_option("--top", disc_top, "rows to print")
      ->capture_default_str();

  // replicate: bundled reference studies
  auto* replicate =
      app.add_subcommand("replicate", "rerun a bundled reference study");
  std::string rep_study = "list";
  int rep_scale = 30, rep_threads = 0;
  std::uint64_t rep_seed = 1;
  std::string rep_out = default_out();
  replicate->add_option("study", rep_study,
                        "study name, or 'list' to enumerate");
  replicate->add_option("--scale", rep_scale, "seeds per batch setting")
      ->capture_default_str();
  replicate->add_option("--seed", rep_seed, "base seed")->capture_default_str();
  replicate->add_option("--out", rep_out, "output directory");
  replicate->add_option("--threads", rep_threads, "worker threads");

  // analyze: recompute stats from traces
  auto* analyze =
      app.add_subcommand("analyze", "recompute statistics from trace files");
  std::vector<std::string> analyze_inputs;
  long analyze_burn = 0;
  bool analyze_write = false;
  analyze->add_option("traces", analyze_inputs, "trace files or directories")
      ->required();
  analyze->add_option("--burn-in", analyze_burn, "occupation burn-in");
  analyze->add_flag("--write", analyze_write,
                    "write .stats.json next to each trace");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (run->parsed()) {
      apply_model(run_model, run_cfg);
      run_cfg.pop = {run_pop};
      run_cfg.p_mut = {run_pmut};
      run_cfg.generations = {run_gens};
      run_cfg.ga_rate = {run_garate};
      if (run_no_traces) run_cfg.traces = false;
      return cmd_run(run_cfg, run_json);
    }
    if (sweep->parsed()) {
      ExperimentConfig cfg;
      if (!sweep_config_path.empty()) cfg = read_config(sweep_config_path);
      if (sweep->count("--model") || sweep->count("--demand") ||
          sweep->count("--players"))
        apply_model(sweep_model, cfg);
      if (sweep->count("--alg")) cfg.kind = sweep_cfg.kind;
      if (!sweep_pop.empty()) cfg.pop = sweep_pop;
      if (!sweep_pmut.empty()) cfg.p_mut = sweep_pmut;
      if (!sweep_gens.empty()) cfg.generations = sweep_gens;
      if (!sweep_garate.empty()) cfg.ga_rate = sweep_garate;
      if (sweep->count("--bits")) cfg.bits = sweep_cfg.bits;
      if (sweep->count("--init")) cfg.init = sweep_cfg.init;
      if (sweep->count("--seed")) cfg.seed = sweep_cfg.seed;
      if (sweep->count("--seeds")) cfg.seeds = sweep_cfg.seeds;
      if (sweep->count("--burn-in")) cfg.burn_in = sweep_cfg.burn_in;
      if (sweep->count("--out")) cfg.out = sweep_cfg.out;
      else if (cfg.out.empty()) cfg.out = default_out();
      if (sweep->count("--games")) cfg.games = sweep_cfg.games;
      if (sweep->count("--snapshots")) cfg.snapshots = sweep_cfg.snapshots;
      if (sweep_no_traces) cfg.traces = false;
      if (sweep->count("--threads")) cfg.threads = sweep_cfg.threads;
      return cmd_run(cfg, sweep_json);
    }
    if (nash->parsed()) return cmd_nash(nash_model, nash_bits, nash_tol);
    if (discover->parsed()) {
      apply_model(disc_model, disc_cfg);
      disc_cfg.pop = {disc_pop};
      disc_cfg.p_mut = {disc_pmut};
      disc_cfg.generations = {disc_gens};
      disc_cfg.ga_rate = {disc_garate};
      disc_cfg.seeds = 1;
      return cmd_discover(disc_cfg, disc_tol, disc_top);
    }
    if (replicate->parsed())
      return cmd_replicate(rep_study, rep_scale, rep_seed, rep_out,
                           rep_threads);
    if (analyze->parsed())
      return cmd_analyze(analyze_inputs, analyze_burn, analyze_write);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
