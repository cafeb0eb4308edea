#include <doctest.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <coga/harness.hpp>

using namespace coga;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("config text round trips exactly") {
  const std::string text =
      "model = poly4\n"
      "algorithm = vriend-social\n"
      "pop = 30 40\n"
      "p_mut = 0.001 0.00025\n"
      "generations = 10000\n"
      "ga_rate = 50\n"
      "bits = 0\n"
      "init = anti-equilibrium\n"
      "seed = 7\n"
      "seeds = 30\n"
      "burn_in = 0\n"
      "traces = 1\n"
      "games = 0\n"
      "snapshots = 0\n"
      "threads = 2\n";
  const auto cfg = parse_config(text);
  CHECK(cfg.model == "poly4");
  CHECK(cfg.kind == AlgorithmKind::VriendSocial);
  CHECK(cfg.pop == std::vector<int>{30, 40});
  CHECK(cfg.p_mut == std::vector<double>{0.001, 0.00025});
  CHECK(cfg.init == InitMode::AntiEquilibrium);
  CHECK(cfg.seeds == 30);
  CHECK(write_config(cfg) == text);

  // Comments and blank lines are tolerated; unknown keys are not.
  CHECK_NOTHROW(parse_config("# note\n\nmodel = linear4\n"));
  CHECK_THROWS_AS(parse_config("modle = linear4\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("pop = twenty\n"), std::invalid_argument);
}

TEST_CASE("custom models survive the config round trip") {
  ExperimentConfig cfg;
  cfg.model = "custom";
  cfg.custom = {DemandKind::Radical, -1.0, 8300.0, 100.0, 10.0, 4};
  const auto back = parse_config(write_config(cfg));
  CHECK(back.custom.demand == DemandKind::Radical);
  CHECK(back.custom.a == -1.0);
  CHECK(back.custom.b == 8300.0);
  CHECK(back.custom.players == 4);
  const auto m = resolve_model(back);
  CHECK(m.n == 4);
  CHECK(m.demand.kind == DemandKind::Radical);
}

TEST_CASE("bit width defaults on the player count") {
  ExperimentConfig cfg;
  cfg.model = "poly4";
  CHECK(effective_bits(cfg, resolve_model(cfg)) == 20);
  cfg.model = "poly20";
  CHECK(effective_bits(cfg, resolve_model(cfg)) == 8);
  cfg.bits = 12;
  CHECK(effective_bits(cfg, resolve_model(cfg)) == 12);
}

TEST_CASE("grid expansion order and per-run seeds") {
  ExperimentConfig cfg;
  cfg.model = "linear4";
  cfg.pop = {10, 20};
  cfg.p_mut = {0.1, 0.2};
  cfg.generations = {5};
  cfg.ga_rate = {50};
  cfg.seed = 1;

  const auto grid = expand_grid(cfg);
  REQUIRE(grid.size() == 4);
  CHECK(grid[0].population_size == 10);
  CHECK(grid[0].p_mut == 0.1);
  CHECK(grid[1].population_size == 10);
  CHECK(grid[1].p_mut == 0.2);
  CHECK(grid[2].population_size == 20);
  CHECK(grid[2].p_mut == 0.1);
  CHECK(grid[3].population_size == 20);
  CHECK(grid[3].p_mut == 0.2);
  for (std::size_t g = 0; g < 4; ++g)
    CHECK(grid[g].seed == derive_run_seed(1, g, 0));
}

TEST_CASE("derived seeds are frozen") {
  // These values are part of the reproducibility contract: existing trace
  // archives are replayable only if the derivation never changes.
  CHECK(derive_run_seed(1, 0, 0) == 3410556544737362926ULL);
  CHECK(derive_run_seed(1, 0, 1) == 7076223819581404918ULL);
  CHECK(derive_run_seed(42, 3, 7) == 3478009854853266666ULL);
}

TEST_CASE("experiment artifacts and thread invariance") {
  auto make_cfg = [](const fs::path& out, int threads) {
    ExperimentConfig cfg;
    cfg.model = "linear4";
    cfg.kind = AlgorithmKind::CoevolSocial;
    cfg.pop = {10};
    cfg.p_mut = {0.01};
    cfg.generations = {40};
    cfg.seed = 11;
    cfg.seeds = 3;
    cfg.out = out.string();
    cfg.threads = threads;
    return cfg;
  };

  TempDir d1("coga_exp1"), d2("coga_exp2");
  const auto r1 = run_experiment(make_cfg(d1.path, 1));
  const auto r2 = run_experiment(make_cfg(d2.path, 2));

  REQUIRE(r1.runs.size() == 3);
  REQUIRE(r1.reports.size() == 1);
  CHECK(r1.reports[0].runs == 3);
  CHECK(r1.reports[0].failed == 0);
  CHECK(r1.reports[0].censored + r1.reports[0].reached == 3);

  const fs::path grid_dir = d1.path / "g0_pop10_pm0.01_T40";
  for (const char* name :
       {"run_000.trace.csv", "run_000.stats.json", "run_001.trace.csv",
        "run_002.stats.json", "report.json"}) {
    CAPTURE(name);
    CHECK(fs::exists(grid_dir / name));
  }
  CHECK(fs::exists(d1.path / "summary.json"));
  CHECK(fs::exists(d1.path / "config.txt"));

  // Same bytes whatever the worker count.
  for (const char* rel :
       {"g0_pop10_pm0.01_T40/run_000.stats.json",
        "g0_pop10_pm0.01_T40/run_002.stats.json",
        "g0_pop10_pm0.01_T40/report.json", "summary.json"}) {
    CAPTURE(rel);
    CHECK(slurp(d1.path / rel) == slurp(d2.path / rel));
  }
}

TEST_CASE("traces reload and stats rebuild byte for byte") {
  TempDir dir("coga_trace_rt");
  ExperimentConfig cfg;
  cfg.model = "poly4";
  cfg.kind = AlgorithmKind::VriendSocial;
  cfg.pop = {10};
  cfg.p_mut = {0.005};
  cfg.generations = {30};
  cfg.ga_rate = {10};
  cfg.seed = 9;
  cfg.seeds = 1;
  cfg.out = dir.path.string();
  const auto res = run_experiment(cfg);
  REQUIRE(res.runs.size() == 1);
  const auto& run = res.runs[0];

  const auto data = read_trace(run.trace_path);
  CHECK(data.header.params.seed == run.params.seed);
  CHECK(data.header.params.p_mut == 0.005);
  CHECK(data.header.model_label == "poly4");
  REQUIRE(data.gens.size() == 30);

  // Recomputing the record from the written trace reproduces it exactly.
  const auto chain =
      chain_stats(data.header.initial_state, data.gens, data.header.params.bits);
  const auto quant =
      quantity_stats(data.gens, data.header.model.n, data.header.q_hat);
  const auto rebuilt =
      run_stats_json(data.header, chain, quant, data.gens.back().pop_hash);
  CHECK(rebuilt.dump(2) == run.stats_json);

  CHECK_THROWS_AS(read_trace(dir.path / "missing.trace.csv"),
                  std::runtime_error);
}

TEST_CASE("number formatting survives a text round trip") {
  for (const double v :
       {0.1, 1.0 / 3.0, 86.94005899524566, 1e-300, -0.0, 73600010.0}) {
    CAPTURE(v);
    CHECK(parse_double(format_double(v)) == v);
  }
  CHECK_THROWS_AS(parse_double("12,5"), std::invalid_argument);
}

TEST_CASE("discovery surfaces the self-confirming rule of a converged run") {
  SimulationParams p;
  p.model_id = "poly20";
  p.kind = AlgorithmKind::CoevolSocial;
  p.population_size = 10;
  p.bits = 8;
  p.p_mut = 0.0;
  p.generations = 40;
  p.seed = 2;
  p.init = InitMode::Equilibrium;

  const auto model = catalogue_model(p.model_id);
  const auto ctx = make_context(model, p.bits);
  const auto run = run_simulation(p, model);
  const auto rules = discover_rules(run, ctx);
  REQUIRE_FALSE(rules.empty());
  // Locked populations replay the equilibrium rule in every game.
  CHECK(rules[0].value == ctx.eq_chromosome.value());
  CHECK(rules[0].games == 40 * 10);
  CHECK(rules[0].confirmed);
  CHECK(rules[0].quantity == doctest::Approx(ctx.equilibrium.q_hat));
}

TEST_CASE("replication studies are listed") {
  const auto& studies = replication_studies();
  CHECK_FALSE(studies.empty());
}
