#include "coga/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace coga {

namespace {

std::vector<std::string> tokens(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  std::string t;
  while (in >> t) out.push_back(t);
  return out;
}

bool parse_bool(const std::string& s) {
  if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
  if (s == "0" || s == "false" || s == "no" || s == "off") return false;
  throw std::invalid_argument("config: bad boolean value: " + s);
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (!tokens(line).empty())
        throw std::invalid_argument("config line " + std::to_string(lineno) +
                                    ": expected key = value");
      continue;
    }
    const auto keyv = tokens(line.substr(0, eq));
    if (keyv.size() != 1)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected a single key");
    const std::string& key = keyv.front();
    const std::string value_str = line.substr(eq + 1);
    const auto values = tokens(value_str);
    const auto one = [&]() -> const std::string& {
      if (values.size() != 1)
        throw std::invalid_argument("config: key " + key +
                                    " expects a single value");
      return values.front();
    };

    try {
      if (key == "model") cfg.model = one();
      else if (key == "algorithm") cfg.kind = algorithm_from_string(one());
      else if (key == "pop") {
        cfg.pop.clear();
        for (const auto& v : values) cfg.pop.push_back(std::stoi(v));
      } else if (key == "p_mut") {
        cfg.p_mut.clear();
        for (const auto& v : values) cfg.p_mut.push_back(parse_double(v));
      } else if (key == "generations") {
        cfg.generations.clear();
        for (const auto& v : values) cfg.generations.push_back(std::stol(v));
      } else if (key == "ga_rate") {
        cfg.ga_rate.clear();
        for (const auto& v : values) cfg.ga_rate.push_back(std::stoi(v));
      } else if (key == "bits") cfg.bits = std::stoi(one());
      else if (key == "init") cfg.init = init_mode_from_string(one());
      else if (key == "seed") cfg.seed = std::stoull(one());
      else if (key == "seeds") cfg.seeds = std::stoi(one());
      else if (key == "burn_in") cfg.burn_in = std::stol(one());
      else if (key == "out") cfg.out = values.empty() ? std::string{} : one();
      else if (key == "traces") cfg.traces = parse_bool(one());
      else if (key == "games") cfg.games = parse_bool(one());
      else if (key == "snapshots") cfg.snapshots = parse_bool(one());
      else if (key == "threads") cfg.threads = std::stoi(one());
      else if (key == "demand") cfg.custom.demand = demand_kind_from_string(one());
      else if (key == "a") cfg.custom.a = parse_double(one());
      else if (key == "b") cfg.custom.b = parse_double(one());
      else if (key == "x") cfg.custom.x = parse_double(one());
      else if (key == "y") cfg.custom.y = parse_double(one());
      else if (key == "players") cfg.custom.players = std::stoi(one());
      else
        throw std::invalid_argument("config: unknown key: " + key);
    } catch (const std::invalid_argument&) {
      throw;
    } catch (const std::exception& e) {
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": " + e.what());
    }
  }
  if (cfg.pop.empty() || cfg.p_mut.empty() || cfg.generations.empty() ||
      cfg.ga_rate.empty())
    throw std::invalid_argument("config: grid lists must not be empty");
  return cfg;
}

ExperimentConfig read_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open config: " + file.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string write_config(const ExperimentConfig& cfg) {
  std::ostringstream out;
  out << "model = " << cfg.model << '\n';
  if (cfg.model == "custom") {
    out << "demand = " << to_string(cfg.custom.demand) << '\n';
    out << "a = " << format_double(cfg.custom.a) << '\n';
    out << "b = " << format_double(cfg.custom.b) << '\n';
    out << "x = " << format_double(cfg.custom.x) << '\n';
    out << "y = " << format_double(cfg.custom.y) << '\n';
    out << "players = " << cfg.custom.players << '\n';
  }
  out << "algorithm = " << to_string(cfg.kind) << '\n';
  out << "pop =";
  for (int v : cfg.pop) out << ' ' << v;
  out << '\n' << "p_mut =";
  for (double v : cfg.p_mut) out << ' ' << format_double(v);
  out << '\n' << "generations =";
  for (long v : cfg.generations) out << ' ' << v;
  out << '\n' << "ga_rate =";
  for (int v : cfg.ga_rate) out << ' ' << v;
  out << '\n';
  out << "bits = " << cfg.bits << '\n';
  out << "init = " << to_string(cfg.init) << '\n';
  out << "seed = " << cfg.seed << '\n';
  out << "seeds = " << cfg.seeds << '\n';
  out << "burn_in = " << cfg.burn_in << '\n';
  if (!cfg.out.empty()) out << "out = " << cfg.out << '\n';
  out << "traces = " << (cfg.traces ? 1 : 0) << '\n';
  out << "games = " << (cfg.games ? 1 : 0) << '\n';
  out << "snapshots = " << (cfg.snapshots ? 1 : 0) << '\n';
  out << "threads = " << cfg.threads << '\n';
  return out.str();
}

MarketModel resolve_model(const ExperimentConfig& cfg) {
  if (cfg.model != "custom") return catalogue_model(cfg.model);
  MarketModel m;
  m.demand.kind = cfg.custom.demand;
  m.demand.a = cfg.custom.a;
  m.demand.b = cfg.custom.b;
  m.cost.x = cfg.custom.x;
  m.cost.y = cfg.custom.y;
  m.n = cfg.custom.players;
  if (m.n < 2)
    throw std::invalid_argument("custom model: players must be >= 2");
  return m;
}

int effective_bits(const ExperimentConfig& cfg, const MarketModel& model) {
  if (cfg.bits != 0) return cfg.bits;
  return model.n <= 9 ? 20 : 8;
}

std::vector<SimulationParams> expand_grid(const ExperimentConfig& cfg) {
  const MarketModel model = resolve_model(cfg);
  const int bits = effective_bits(cfg, model);
  std::vector<SimulationParams> grid;
  for (int pop : cfg.pop)
    for (double p_mut : cfg.p_mut)
      for (long gens : cfg.generations)
        for (int rate : cfg.ga_rate) {
          SimulationParams p;
          p.model_id = cfg.model;
          p.kind = cfg.kind;
          p.population_size = pop;
          p.bits = bits;
          p.p_mut = p_mut;
          p.ga_rate = rate;
          p.generations = gens;
          p.init = cfg.init;
          p.seed = derive_run_seed(cfg.seed,
                                   static_cast<std::uint64_t>(grid.size()), 0);
          grid.push_back(p);
          validate(grid.back());
        }
  return grid;
}

namespace {

std::string grid_label(const SimulationParams& p, int grid_index) {
  std::ostringstream out;
  out << 'g' << grid_index << "_pop" << p.population_size << "_pm"
      << format_double(p.p_mut) << "_T" << p.generations;
  if (uses_periods(p.kind)) out << "_ga" << p.ga_rate;
  return out.str();
}

std::string run_name(int replicate) {
  std::ostringstream out;
  out << "run_";
  if (replicate < 100) out << (replicate < 10 ? "00" : "0");
  out << replicate;
  return out.str();
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

BatchReport make_report(const std::vector<const RunOutcome*>& outcomes,
                        double q_hat, int bits) {
  if (outcomes.empty())
    throw std::invalid_argument("make_report: no outcomes");
  BatchReport r;
  r.grid_index = outcomes.front()->grid_index;
  r.params = outcomes.front()->params;
  r.freq_all = Eigen::VectorXd::Zero(bits + 1);
  r.freq_reached = Eigen::VectorXd::Zero(bits + 1);

  std::vector<double> hit_times;
  std::vector<RunQuantityStats> quants;
  double gap_sum = 0.0;
  long long gap_count = 0;
  long long kept_all = 0, kept_reached = 0;
  long long games_after = 0, eq_after = 0;
  double eq_fraction_sum = 0.0;
  double grand_sum = 0.0, grand_ss = 0.0;

  for (const auto* o : outcomes) {
    ++r.runs;
    if (o->failed) {
      ++r.failed;
      continue;
    }
    const long long kept = o->chain.state_counts.sum();
    r.freq_all += o->chain.state_counts.cast<double>();
    kept_all += kept;
    eq_fraction_sum += o->chain.eq_fraction;
    quants.push_back(o->quant);
    grand_sum += o->quant.grand_mean_q;

    if (o->chain.gens_to_eq) {
      ++r.reached;
      hit_times.push_back(static_cast<double>(*o->chain.gens_to_eq));
      r.freq_reached += o->chain.state_counts.cast<double>();
      kept_reached += kept;
      for (long g : o->chain.interarrival) {
        gap_sum += static_cast<double>(g);
        ++gap_count;
      }
      games_after += o->chain.games_after_first;
      eq_after += o->chain.eq_games_after_first;
    } else {
      ++r.censored;
    }
  }

  r.eq_fraction_after_first =
      games_after > 0
          ? static_cast<double>(eq_after) / static_cast<double>(games_after)
          : std::numeric_limits<double>::quiet_NaN();

  const int ok_runs = r.runs - r.failed;
  if (kept_all > 0) r.freq_all /= static_cast<double>(kept_all);
  if (kept_reached > 0) r.freq_reached /= static_cast<double>(kept_reached);
  r.gens_to_eq_mean = hit_times.empty()
                          ? std::numeric_limits<double>::quiet_NaN()
                          : std::accumulate(hit_times.begin(), hit_times.end(),
                                            0.0) /
                                static_cast<double>(hit_times.size());
  r.gens_to_eq_median = median(hit_times);
  r.interarrival_mean = gap_count > 0
                            ? gap_sum / static_cast<double>(gap_count)
                            : std::numeric_limits<double>::quiet_NaN();
  r.eq_fraction_mean =
      ok_runs > 0 ? eq_fraction_sum / ok_runs
                  : std::numeric_limits<double>::quiet_NaN();

  if (ok_runs > 0) {
    r.grand_mean_avg = grand_sum / ok_runs;
    for (const auto& q : quants)
      grand_ss += (q.grand_mean_q - r.grand_mean_avg) *
                  (q.grand_mean_q - r.grand_mean_avg);
    r.grand_mean_sd = ok_runs > 1 ? std::sqrt(grand_ss / (ok_runs - 1)) : 0.0;
  }
  if (quants.size() >= 2) {
    r.verdicts = batch_verdicts(quants, q_hat);
    r.has_verdicts = true;
  }
  return r;
}

namespace {

void run_one_job(const ExperimentConfig& cfg, const MarketModel& model,
                 const std::string& model_label, double q_hat, int bits,
                 RunOutcome& out) {
  try {
    std::filesystem::path dir;
    if (!cfg.out.empty()) {
      dir = std::filesystem::path(cfg.out) /
            grid_label(out.params, out.grid_index);
      std::filesystem::create_directories(dir);
    }

    RunResult run;
    if (!cfg.out.empty() && cfg.traces) {
      out.trace_path = dir / (run_name(out.replicate) + ".trace.csv");
      CsvTraceSink sink(out.trace_path, cfg.games, cfg.snapshots);
      sink.set_model_label(model_label);
      run = run_simulation(out.params, model, &sink);
    } else {
      run = run_simulation(out.params, model, nullptr);
    }

    out.initial_state = run.initial_state;
    out.final_hash = run.gens.back().pop_hash;
    out.chain = chain_stats(run.initial_state, run.gens, bits, cfg.burn_in);
    out.quant = quantity_stats(run.gens, model.n, q_hat);
    out.same_quantity_games = std::move(run.same_quantity_games);

    const RunHeader header = make_run_header(run, model_label, model);
    out.stats_json =
        run_stats_json(header, out.chain, out.quant, out.final_hash).dump(2);
    if (!cfg.out.empty()) {
      std::ofstream sf(dir / (run_name(out.replicate) + ".stats.json"));
      sf << out.stats_json << '\n';
    }
  } catch (const std::exception& e) {
    out.failed = true;
    out.error = e.what();
  }
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  ExperimentResult exp;
  exp.config = cfg;
  exp.model = resolve_model(cfg);
  exp.model_label = cfg.model;
  exp.bits = effective_bits(cfg, exp.model);
  exp.q_hat = make_context(exp.model, exp.bits).equilibrium.q_hat;
  if (cfg.seeds < 1)
    throw std::invalid_argument("config: seeds must be >= 1");

  const auto grid = expand_grid(cfg);
  exp.runs.resize(grid.size() * static_cast<std::size_t>(cfg.seeds));
  for (std::size_t g = 0; g < grid.size(); ++g)
    for (int s = 0; s < cfg.seeds; ++s) {
      RunOutcome& o = exp.runs[g * static_cast<std::size_t>(cfg.seeds) +
                               static_cast<std::size_t>(s)];
      o.grid_index = static_cast<int>(g);
      o.replicate = s;
      o.params = grid[g];
      o.params.seed = derive_run_seed(cfg.seed, static_cast<std::uint64_t>(g),
                                      static_cast<std::uint64_t>(s));
    }

  int workers = cfg.threads;
  if (workers <= 0)
    workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<int>(workers, static_cast<int>(exp.runs.size()));

  if (workers <= 1) {
    for (auto& o : exp.runs)
      run_one_job(cfg, exp.model, exp.model_label, exp.q_hat, exp.bits, o);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= exp.runs.size()) return;
          run_one_job(cfg, exp.model, exp.model_label, exp.q_hat, exp.bits,
                      exp.runs[i]);
        }
      });
    for (auto& t : pool) t.join();
  }

  for (std::size_t g = 0; g < grid.size(); ++g) {
    std::vector<const RunOutcome*> group;
    for (int s = 0; s < cfg.seeds; ++s)
      group.push_back(&exp.runs[g * static_cast<std::size_t>(cfg.seeds) +
                                static_cast<std::size_t>(s)]);
    exp.reports.push_back(make_report(group, exp.q_hat, exp.bits));
  }

  if (!cfg.out.empty()) {
    for (const auto& report : exp.reports) {
      const auto dir = std::filesystem::path(cfg.out) /
                       grid_label(report.params, report.grid_index);
      std::filesystem::create_directories(dir);
      std::ofstream rf(dir / "report.json");
      rf << report_json(exp, report).dump(2) << '\n';
    }
    std::ofstream sf(std::filesystem::path(cfg.out) / "summary.json");
    sf << summary_json(exp).dump(2) << '\n';
    std::ofstream cf(std::filesystem::path(cfg.out) / "config.txt");
    cf << write_config(cfg);
  }
  return exp;
}

namespace {

nlohmann::ordered_json verdict_json(const TestVerdict& v) {
  nlohmann::ordered_json j;
  j["statistic"] = std::isfinite(v.statistic)
                       ? nlohmann::ordered_json(v.statistic)
                       : nlohmann::ordered_json(nullptr);
  j["critical"] = v.critical;
  j["accepted"] = v.accepted;
  j["alpha"] = v.alpha;
  j["sample_mean"] = v.sample_mean;
  j["sample_sd"] = v.sample_sd;
  j["sample_size"] = v.sample_size;
  return j;
}

nlohmann::ordered_json nan_to_null(double v) {
  return std::isnan(v) ? nlohmann::ordered_json(nullptr)
                       : nlohmann::ordered_json(v);
}

}  // namespace

nlohmann::ordered_json report_json(const ExperimentResult& exp,
                                   const BatchReport& r) {
  nlohmann::ordered_json j;
  j["record"] = "coga-report-1";
  j["model"] = exp.model_label;
  j["q_hat"] = exp.q_hat;
  j["params"] = {{"algorithm", to_string(r.params.kind)},
                 {"pop", r.params.population_size},
                 {"bits", r.params.bits},
                 {"p_mut", r.params.p_mut},
                 {"ga_rate", r.params.ga_rate},
                 {"generations", r.params.generations},
                 {"init", to_string(r.params.init)},
                 {"base_seed", exp.config.seed},
                 {"seeds", exp.config.seeds}};
  j["runs"] = r.runs;
  j["failed"] = r.failed;
  j["reached"] = r.reached;
  j["censored"] = r.censored;
  j["gens_to_eq"] = {{"mean", nan_to_null(r.gens_to_eq_mean)},
                     {"median", nan_to_null(r.gens_to_eq_median)}};
  j["interarrival_mean"] = nan_to_null(r.interarrival_mean);
  j["eq_fraction_mean"] = nan_to_null(r.eq_fraction_mean);
  j["eq_fraction_after_first"] = nan_to_null(r.eq_fraction_after_first);
  j["freq_all"] = std::vector<double>(r.freq_all.data(),
                                      r.freq_all.data() + r.freq_all.size());
  j["freq_reached"] =
      r.reached > 0
          ? nlohmann::ordered_json(std::vector<double>(
                r.freq_reached.data(),
                r.freq_reached.data() + r.freq_reached.size()))
          : nlohmann::ordered_json(nullptr);
  j["grand_mean"] = {{"avg", nan_to_null(r.grand_mean_avg)},
                     {"sd", nan_to_null(r.grand_mean_sd)}};
  if (r.has_verdicts) {
    nlohmann::ordered_json v;
    v["grand"] = verdict_json(r.verdicts.grand);
    nlohmann::ordered_json pp = nlohmann::ordered_json::array();
    for (const auto& t : r.verdicts.per_player) pp.push_back(verdict_json(t));
    v["per_player"] = pp;
    j["verdicts"] = v;
  } else {
    j["verdicts"] = nullptr;
  }

  nlohmann::ordered_json runs = nlohmann::ordered_json::array();
  for (const auto& o : exp.runs) {
    if (o.grid_index != r.grid_index) continue;
    nlohmann::ordered_json ro;
    ro["replicate"] = o.replicate;
    ro["seed"] = o.params.seed;
    if (o.failed) {
      ro["failed"] = o.error;
    } else {
      ro["initial_state"] = o.initial_state;
      ro["gens_to_eq"] = o.chain.gens_to_eq
                             ? nlohmann::ordered_json(*o.chain.gens_to_eq)
                             : nlohmann::ordered_json(nullptr);
      ro["eq_fraction"] = o.chain.eq_fraction;
      ro["grand_mean"] = o.quant.grand_mean_q;
    }
    if (!o.trace_path.empty()) ro["trace"] = o.trace_path.filename().string();
    runs.push_back(ro);
  }
  j["run_digest"] = runs;
  return j;
}

nlohmann::ordered_json summary_json(const ExperimentResult& exp) {
  nlohmann::ordered_json j;
  j["record"] = "coga-summary-1";
  j["model"] = exp.model_label;
  j["algorithm"] = to_string(exp.config.kind);
  j["q_hat"] = exp.q_hat;
  j["bits"] = exp.bits;
  j["grid_points"] = exp.reports.size();
  j["seeds"] = exp.config.seeds;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& r : exp.reports) {
    nlohmann::ordered_json row;
    row["grid_index"] = r.grid_index;
    row["pop"] = r.params.population_size;
    row["p_mut"] = r.params.p_mut;
    row["generations"] = r.params.generations;
    row["ga_rate"] = r.params.ga_rate;
    row["reached"] = r.reached;
    row["runs"] = r.runs;
    row["gens_to_eq_median"] = nan_to_null(r.gens_to_eq_median);
    row["eq_fraction_mean"] = nan_to_null(r.eq_fraction_mean);
    row["grand_mean_avg"] = nan_to_null(r.grand_mean_avg);
    rows.push_back(row);
  }
  j["grid"] = rows;
  return j;
}

std::vector<DiscoveredRule> discover_rules(const RunResult& run,
                                           const SimContext& ctx, double tol,
                                           int top) {
  std::vector<DiscoveredRule> out;
  out.reserve(run.same_quantity_games.size());
  for (const auto& [value, count] : run.same_quantity_games) {
    DiscoveredRule d;
    d.value = value;
    d.quantity = ctx.codec.decode(Chromosome(value, ctx.codec.bits));
    d.games = count;
    d.confirmed = verify_nash_candidate(ctx.model, d.quantity, tol);
    const auto br =
        best_response(ctx.model, (ctx.model.n - 1) * d.quantity);
    d.response_gap = std::abs(br.quantity - d.quantity);
    out.push_back(d);
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.games != b.games) return a.games > b.games;
    return a.value < b.value;
  });
  if (top > 0 && static_cast<int>(out.size()) > top)
    out.resize(static_cast<std::size_t>(top));
  return out;
}

bool ReplicationReport::ok() const {
  for (const auto& c : checks)
    if (!c.passed) return false;
  return true;
}

namespace {

struct StudyRow {
  std::string model_id;
  AlgorithmKind kind;
  int pop;
  double p_mut;
  long gens;
  double ref_gens_to_eq;   // reference mean hitting time
  double ref_interarrival; // reference mean return time
  double ref_eq_pct;       // reference share of games at equilibrium, percent
};

// The twelve hitting-time settings (social variants, worst-case start).
const std::vector<StudyRow>& hitting_rows() {
  static const std::vector<StudyRow> rows = {
      {"linear4", AlgorithmKind::VriendSocial, 30, 0.001, 10000, 3749.12, 3.83, 5.54},
      {"linear4", AlgorithmKind::CoevolSocial, 40, 0.0005, 10000, 2601.73, 6.97, 73.82},
      {"linear20", AlgorithmKind::VriendSocial, 20, 0.0005, 20000, 2712.45, 6.83, 88.98},
      {"linear20", AlgorithmKind::CoevolSocial, 20, 0.0001, 20000, 2321.32, 6.53, 85.64},
      {"poly4", AlgorithmKind::VriendSocial, 40, 0.00025, 10000, 2483.58, 3.55, 83.70},
      {"poly4", AlgorithmKind::CoevolSocial, 40, 0.0005, 10000, 2067.72, 8.77, 60.45},
      {"poly20", AlgorithmKind::VriendSocial, 20, 0.0005, 20000, 2781.24, 9.58, 67.60},
      {"poly20", AlgorithmKind::CoevolSocial, 20, 0.0005, 50000, 2297.72, 6.63, 83.94},
      {"radical4", AlgorithmKind::VriendSocial, 40, 0.00075, 10000, 2171.32, 4.41, 81.73},
      {"radical4", AlgorithmKind::CoevolSocial, 40, 0.0005, 10000, 2917.92, 5.83, 73.69},
      {"radical20", AlgorithmKind::VriendSocial, 20, 0.0005, 20000, 2136.31, 7.87, 75.34},
      {"radical20", AlgorithmKind::CoevolSocial, 20, 0.0005, 20000, 2045.81, 7.07, 79.58},
  };
  return rows;
}

ExperimentConfig study_config(const StudyRow& row, InitMode init, int seeds,
                              std::uint64_t seed, const std::string& out,
                              int threads) {
  ExperimentConfig cfg;
  cfg.model = row.model_id;
  cfg.kind = row.kind;
  cfg.pop = {row.pop};
  cfg.p_mut = {row.p_mut};
  cfg.generations = {row.gens};
  cfg.ga_rate = {50};
  cfg.init = init;
  cfg.seed = seed;
  cfg.seeds = seeds;
  cfg.out = out;
  cfg.traces = false;
  cfg.threads = threads;
  return cfg;
}

std::string describe_row(const StudyRow& row) {
  std::ostringstream s;
  s << row.model_id << '/' << to_string(row.kind) << "/pop" << row.pop
    << "/pm" << format_double(row.p_mut) << "/T" << row.gens;
  return s.str();
}

void check(ReplicationReport& rep, const std::string& name, bool passed,
           const std::string& detail) {
  rep.checks.push_back({name, passed, detail});
}

std::string fmt2(double v) {
  std::ostringstream s;
  s.precision(2);
  s << std::fixed << v;
  return s.str();
}

// Loose qualitative bounds shared by the hitting-time checks.
void hitting_checks(ReplicationReport& rep, const std::string& label,
                    const StudyRow& row, const BatchReport& batch) {
  const double reach_rate =
      batch.runs > batch.failed
          ? static_cast<double>(batch.reached) /
                static_cast<double>(batch.runs - batch.failed)
          : 0.0;
  check(rep, label + ": >=80% of runs reach the all-equilibrium state",
        reach_rate >= 0.8, "reach rate " + fmt2(reach_rate));
  check(rep, label + ": median hitting time in [500, 8000]",
        batch.reached > 0 && batch.gens_to_eq_median >= 500.0 &&
            batch.gens_to_eq_median <= 8000.0,
        "median " + fmt2(batch.gens_to_eq_median) + " (reference mean " +
            fmt2(row.ref_gens_to_eq) + ")");
  check(rep, label + ": mean return time <= 20",
        batch.reached > 0 && batch.interarrival_mean <= 20.0,
        "mean " + fmt2(batch.interarrival_mean) + " (reference " +
            fmt2(row.ref_interarrival) + ")");
  if (row.ref_eq_pct > 60.0)
    check(rep, label + ": >=30% equilibrium games after first hit",
          !std::isnan(batch.eq_fraction_after_first) &&
              batch.eq_fraction_after_first >= 0.30,
          "fraction " + fmt2(batch.eq_fraction_after_first) + " (reference " +
              fmt2(row.ref_eq_pct / 100.0) + " of all games)");
  const double s01 = batch.reached > 0
                         ? batch.freq_reached[0] + batch.freq_reached[1]
                         : 0.0;
  check(rep, label + ": occupation of the two nearest states >= 0.5",
        s01 >= 0.5, "S0+S1 " + fmt2(s01));
}

ReplicationReport replicate_individual_means(int scale, std::uint64_t seed,
                                             const std::string& out,
                                             int threads) {
  ReplicationReport rep;
  rep.study = "individual-means";
  rep.details["reference"] = {
      {"vriend_player_means", {91.8309, 65.3700, 93.9287, 93.9933}},
      {"coevol_player_means", {77.6752, 97.8773, 93.9287, 93.9933}}};
  for (const auto kind :
       {AlgorithmKind::VriendIndividual, AlgorithmKind::CoevolIndividual}) {
    ExperimentConfig cfg;
    cfg.model = "poly4";
    cfg.kind = kind;
    cfg.pop = {50};
    cfg.p_mut = {0.01};
    cfg.generations = {2000};
    cfg.init = InitMode::Random;
    cfg.seed = seed;
    cfg.seeds = scale;
    cfg.out = out.empty() ? out : out + "/" + to_string(kind);
    cfg.traces = false;
    cfg.threads = threads;
    const auto exp = run_experiment(cfg);
    const auto& batch = exp.reports.front();
    const std::string label = to_string(kind);

    int spread_ok = 0, grand_ok = 0, ok_runs = 0;
    for (const auto& o : exp.runs) {
      if (o.failed) continue;
      ++ok_runs;
      const double spread = o.quant.per_player_mean_q.maxCoeff() -
                            o.quant.per_player_mean_q.minCoeff();
      if (spread >= 5.0) ++spread_ok;
      if (std::abs(o.quant.grand_mean_q - exp.q_hat) <= 10.0) ++grand_ok;
    }
    check(rep, label + ": player means spread >= 5 in every run",
          ok_runs > 0 && spread_ok == ok_runs,
          std::to_string(spread_ok) + "/" + std::to_string(ok_runs));
    check(rep, label + ": grand mean within 10 of equilibrium in every run",
          ok_runs > 0 && grand_ok == ok_runs,
          std::to_string(grand_ok) + "/" + std::to_string(ok_runs));
    check(rep, label + ": batch accepts the grand-mean hypothesis",
          batch.has_verdicts && batch.verdicts.grand.accepted,
          "statistic " + fmt2(batch.has_verdicts
                                  ? batch.verdicts.grand.statistic
                                  : std::numeric_limits<double>::quiet_NaN()));
    rep.details[label] = {{"grand_mean_avg", batch.grand_mean_avg},
                          {"grand_mean_sd", batch.grand_mean_sd}};
  }
  return rep;
}

ReplicationReport replicate_individual_states(int scale, std::uint64_t seed,
                                              const std::string& out,
                                              int threads) {
  (void)scale;  // single long runs
  ReplicationReport rep;
  rep.study = "individual-states";
  rep.details["reference"] = {
      {"vriend", {{"s9", 0.8725}, {"s10", 0.0775}, {"s11", 0.05}}},
      {"coevol", {{"s8", 0.0025}, {"s9", 0.1178}, {"s10", 0.867}, {"s11", 0.0127}}}};
  for (const auto kind :
       {AlgorithmKind::VriendIndividual, AlgorithmKind::CoevolIndividual}) {
    ExperimentConfig cfg;
    cfg.model = "poly4";
    cfg.kind = kind;
    cfg.pop = {50};
    cfg.p_mut = {0.01};
    cfg.generations = {100000};
    cfg.init = InitMode::Random;
    cfg.seed = seed;
    cfg.seeds = 1;
    cfg.out = out.empty() ? out : out + "/" + to_string(kind);
    cfg.traces = false;
    cfg.threads = threads;
    const auto exp = run_experiment(cfg);
    const auto& freq = exp.reports.front().freq_all;
    const std::string label = to_string(kind);
    double band = 0.0;
    for (int s = 8; s <= 11; ++s) band += freq[s];
    int argmax = 0;
    freq.maxCoeff(&argmax);
    check(rep, label + ": never in the all-equilibrium state", freq[0] == 0.0,
          "freq(S0) " + fmt2(freq[0]));
    check(rep, label + ": mass concentrated on S8..S11", band >= 0.5,
          "mass " + fmt2(band));
    check(rep, label + ": modal state in S8..S11", argmax >= 8 && argmax <= 11,
          "modal S" + std::to_string(argmax));
    std::vector<double> fv(freq.data(), freq.data() + freq.size());
    rep.details[label] = {{"frequencies", fv}};
  }
  return rep;
}

ReplicationReport replicate_social_means(int scale, std::uint64_t seed,
                                         const std::string& out, int threads) {
  ReplicationReport rep;
  rep.study = "social-means";
  rep.details["reference"] = {
      {"vriend_social_player_means", {86.9991, 86.9905, 86.9994, 87.0046}},
      {"coevol_social_player_means", {87.0062, 87.0089, 87.0103, 86.9978}}};
  for (const auto kind :
       {AlgorithmKind::VriendSocial, AlgorithmKind::CoevolSocial}) {
    ExperimentConfig cfg;
    cfg.model = "poly4";
    cfg.kind = kind;
    cfg.pop = {40};
    cfg.p_mut = {0.00025};
    cfg.generations = {10000};
    cfg.init = InitMode::Random;
    cfg.seed = seed;
    cfg.seeds = scale;
    cfg.out = out.empty() ? out : out + "/" + to_string(kind);
    cfg.traces = false;
    cfg.threads = threads;
    const auto exp = run_experiment(cfg);
    const auto& batch = exp.reports.front();
    const std::string label = to_string(kind);

    int close_ok = 0, ok_runs = 0;
    for (const auto& o : exp.runs) {
      if (o.failed) continue;
      ++ok_runs;
      const double spread = o.quant.per_player_mean_q.maxCoeff() -
                            o.quant.per_player_mean_q.minCoeff();
      if (spread <= 2.0) ++close_ok;
    }
    check(rep, label + ": player means within 2 units of each other",
          ok_runs > 0 && close_ok == ok_runs,
          std::to_string(close_ok) + "/" + std::to_string(ok_runs));
    check(rep, label + ": batch accepts the grand-mean hypothesis",
          batch.has_verdicts && batch.verdicts.grand.accepted,
          "statistic " + fmt2(batch.has_verdicts
                                  ? batch.verdicts.grand.statistic
                                  : std::numeric_limits<double>::quiet_NaN()));
    bool players_ok = batch.has_verdicts;
    if (batch.has_verdicts)
      for (const auto& t : batch.verdicts.per_player)
        players_ok = players_ok && t.accepted;
    check(rep, label + ": batch accepts every per-player hypothesis",
          players_ok, "");
    rep.details[label] = {{"grand_mean_avg", batch.grand_mean_avg},
                          {"grand_mean_sd", batch.grand_mean_sd}};
  }
  return rep;
}

ReplicationReport replicate_social_states(int scale, std::uint64_t seed,
                                          const std::string& out, int threads) {
  (void)scale;  // single runs by design
  ReplicationReport rep;
  rep.study = "social-states";
  rep.details["reference"] = {
      {"p_mut_0.001", {{"s2", 0.6448}, {"s3", 0.3286}, {"s4", 0.023}, {"s5", 0.0036}}},
      {"p_mut_0.0001", {{"s0", 0.261}, {"s1", 0.4332}, {"s2", 0.2543}, {"s3", 0.0515}}}};

  const auto run_one = [&](double p_mut, const std::string& tag) {
    ExperimentConfig cfg;
    cfg.model = "poly20";
    cfg.kind = AlgorithmKind::VriendSocial;
    cfg.pop = {20};
    cfg.p_mut = {p_mut};
    cfg.generations = {10000};
    cfg.init = InitMode::Random;
    cfg.seed = seed;
    cfg.seeds = 1;
    cfg.out = out.empty() ? out : out + "/" + tag;
    cfg.traces = false;
    cfg.threads = threads;
    const auto exp = run_experiment(cfg);
    return exp.reports.front().freq_all;
  };

  const auto freq_no = run_one(0.001, "pm0.001");
  check(rep, "p_mut=.001: never in the all-equilibrium state",
        freq_no[0] == 0.0, "freq(S0) " + fmt2(freq_no[0]));
  check(rep, "p_mut=.001: mass concentrated on S2..S3",
        freq_no[2] + freq_no[3] >= 0.5, "S2+S3 " + fmt2(freq_no[2] + freq_no[3]));

  const auto freq_yes = run_one(0.0001, "pm0.0001");
  check(rep, "p_mut=.0001: reaches the all-equilibrium state",
        freq_yes[0] > 0.0, "freq(S0) " + fmt2(freq_yes[0]));

  std::vector<double> f1(freq_no.data(), freq_no.data() + freq_no.size());
  std::vector<double> f2(freq_yes.data(), freq_yes.data() + freq_yes.size());
  rep.details["p_mut_0.001_frequencies"] = f1;
  rep.details["p_mut_0.0001_frequencies"] = f2;
  return rep;
}

ReplicationReport replicate_selection(int scale, std::uint64_t seed,
                                      const std::string& out, int threads) {
  ReplicationReport rep;
  rep.study = "equilibrium-selection";
  int row_index = 0;
  for (const auto& row : hitting_rows()) {
    const std::string tag = "row" + std::to_string(row_index);
    auto cfg = study_config(row, InitMode::Random, scale,
                            seed + static_cast<std::uint64_t>(row_index),
                            out.empty() ? out : out + "/" + tag, threads);
    const auto exp = run_experiment(cfg);
    const auto& batch = exp.reports.front();
    const double reach_rate =
        batch.runs > batch.failed
            ? static_cast<double>(batch.reached) /
                  static_cast<double>(batch.runs - batch.failed)
            : 0.0;
    check(rep, describe_row(row) + ": >=80% of runs reach equilibrium",
          reach_rate >= 0.8, "reach rate " + fmt2(reach_rate));
    ++row_index;
  }
  return rep;
}

ReplicationReport replicate_hitting(int scale, std::uint64_t seed,
                                    const std::string& out, int threads,
                                    bool all_rows) {
  ReplicationReport rep;
  rep.study = all_rows ? "hitting-times-all" : "hitting-times";
  int row_index = 0;
  for (const auto& row : hitting_rows()) {
    const bool poly4_row = row.model_id == "poly4";
    if (!all_rows && !poly4_row) {
      ++row_index;
      continue;
    }
    const std::string tag = "row" + std::to_string(row_index);
    auto cfg = study_config(row, InitMode::AntiEquilibrium, scale,
                            seed + static_cast<std::uint64_t>(row_index),
                            out.empty() ? out : out + "/" + tag, threads);
    const auto exp = run_experiment(cfg);
    hitting_checks(rep, describe_row(row), row, exp.reports.front());
    nlohmann::ordered_json d;
    d["reached"] = exp.reports.front().reached;
    d["runs"] = exp.reports.front().runs;
    d["gens_to_eq_median"] = nan_to_null(exp.reports.front().gens_to_eq_median);
    d["gens_to_eq_mean"] = nan_to_null(exp.reports.front().gens_to_eq_mean);
    d["interarrival_mean"] = nan_to_null(exp.reports.front().interarrival_mean);
    d["eq_fraction_after_first"] =
        nan_to_null(exp.reports.front().eq_fraction_after_first);
    d["reference"] = {{"gens_to_eq_mean", row.ref_gens_to_eq},
                      {"interarrival_mean", row.ref_interarrival},
                      {"eq_games_pct", row.ref_eq_pct}};
    rep.details[describe_row(row)] = d;
    ++row_index;
  }
  return rep;
}

}  // namespace

const std::vector<std::string>& replication_studies() {
  static const std::vector<std::string> studies = {
      "individual-means", "individual-states", "social-means",
      "social-states",    "equilibrium-selection", "hitting-times",
      "hitting-times-all"};
  return studies;
}

ReplicationReport run_replication(const std::string& study, int scale,
                                  std::uint64_t seed,
                                  const std::string& out_dir, int threads) {
  if (scale < 1) throw std::invalid_argument("replication: scale must be >= 1");
  if (study == "individual-means")
    return replicate_individual_means(scale, seed, out_dir, threads);
  if (study == "individual-states")
    return replicate_individual_states(scale, seed, out_dir, threads);
  if (study == "social-means")
    return replicate_social_means(scale, seed, out_dir, threads);
  if (study == "social-states")
    return replicate_social_states(scale, seed, out_dir, threads);
  if (study == "equilibrium-selection")
    return replicate_selection(scale, seed, out_dir, threads);
  if (study == "hitting-times")
    return replicate_hitting(scale, seed, out_dir, threads, false);
  if (study == "hitting-times-all")
    return replicate_hitting(scale, seed, out_dir, threads, true);
  throw std::invalid_argument("unknown replication study: " + study);
}

}  // namespace coga
