// Acceptance gate: one line per criterion, nonzero exit when any fail.
// Every check runs against fixed seeds so a red line is reproducible.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <coga/harness.hpp>
#include <coga/markov.hpp>
#include <coga/sim.hpp>
#include <coga/stats.hpp>
#include <coga/trace_io.hpp>

using namespace coga;

namespace {

int g_failures = 0;

void criterion(int number, const std::function<std::pair<bool, std::string>()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = false;
  std::string detail;
  try {
    std::tie(ok, detail) = body();
  } catch (const std::exception& e) {
    ok = false;
    detail = std::string("exception: ") + e.what();
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("C%d %s (%.2fs) %s\n", number, ok ? "PASS" : "FAIL", secs,
              detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

bool within_one_ulp(double a, double b) {
  return a == b || std::nextafter(a, b) == b;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string fmt(const char* pattern, ...) {
  char buf[512];
  va_list args;
  va_start(args, pattern);
  std::vsnprintf(buf, sizeof buf, pattern, args);
  va_end(args);
  return buf;
}

struct BatchRun {
  ChainStats chain;
  RunQuantityStats quant;
};

std::vector<BatchRun> run_batch(const SimulationParams& base, int seeds,
                                std::uint64_t grid) {
  std::vector<BatchRun> out;
  const auto model = catalogue_model(base.model_id);
  for (int rep = 0; rep < seeds; ++rep) {
    auto p = base;
    p.seed = derive_run_seed(1, grid, static_cast<std::uint64_t>(rep));
    const auto run = run_simulation(p, model);
    BatchRun r;
    r.chain = chain_stats(run.initial_state, run.gens, p.bits);
    r.quant = quantity_stats(run.gens, model.n, run.q_hat);
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------- criteria --

std::pair<bool, std::string> equilibria_match_references() {
  // Solved offline with independent tooling.
  struct Known {
    const char* id;
    double q_hat;
  };
  const Known known[] = {
      {"linear4", 40.0},
      {"linear20", 9.523809523809526},
      {"poly4", 86.94005899524566},
      {"poly20", 20.00000000000002},
      {"radical4", 82.2143154097643},
      {"radical20", 19.374935397174706},
  };
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (const auto& k : known) {
    const auto sol = symmetric_nash(catalogue_model(k.id));
    worst = std::max(worst, std::abs(sol.q_hat - k.q_hat));
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool ok = worst < 1e-3 && secs < 1.0;
  return {ok, fmt("six catalogue equilibria, worst gap %.2e, solved in %.3fs",
                  worst, secs)};
}

std::pair<bool, std::string> codec_hits_equilibrium_exactly() {
  int checked = 0;
  for (const auto& id : catalogue_ids()) {
    const double q_hat = symmetric_nash(catalogue_model(id)).q_hat;
    for (const int bits : {8, 20}) {
      const auto codec = QuantityCodec::for_equilibrium(q_hat, bits);
      const auto eq = codec.equilibrium_chromosome();
      if (!within_one_ulp(codec.decode(eq), q_hat))
        return {false, fmt("%s L=%d decodes %.17g for %.17g", id.c_str(), bits,
                           codec.decode(eq), q_hat)};
      if (hamming(eq, codec.anti_equilibrium_chromosome()) != bits)
        return {false, fmt("%s L=%d anti rule not maximally distant",
                           id.c_str(), bits)};
      ++checked;
    }
  }
  return {true, fmt("%d model/width pairs decode the equilibrium rule to 1 ulp "
                    "with maximal anti distance",
                    checked)};
}

std::pair<bool, std::string> operator_distributions() {
  const auto t0 = std::chrono::steady_clock::now();
  std::ostringstream detail;

  // Mutation flip counts stay within 3 sigma of the binomial at 1e5 bits.
  for (const double p : {0.1, 0.001}) {
    Rng rng(2024);
    const Chromosome base(0, 20);
    long flips = 0;
    for (int i = 0; i < 5000; ++i) flips += hamming(base, mutate(base, p, rng));
    const double n = 1e5;
    const double sigma = std::sqrt(n * p * (1 - p));
    if (std::abs(flips - n * p) > 3 * sigma)
      return {false, fmt("mutation p=%g: %ld flips vs %.0f +- %.0f", p, flips,
                         n * p, 3 * sigma)};
    detail << "mut(" << p << ")=" << flips << " ";
  }

  // Roulette draw frequencies pass a chi-square test at the 1% level.
  const double chi2_crit_df7 = 18.475306906582357;
  Rng fit_rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::VectorXd f(8);
    for (int i = 0; i < 8; ++i) f[i] = 0.1 + uniform01(fit_rng);
    Rng rng(99 + static_cast<std::uint64_t>(trial));
    const int draws = 100000;
    std::vector<long> counts(8, 0);
    for (int idx : roulette_select(f, draws, rng)) ++counts[idx];
    double chi2 = 0.0;
    for (int i = 0; i < 8; ++i) {
      const double expect = draws * f[i] / f.sum();
      chi2 += (counts[i] - expect) * (counts[i] - expect) / expect;
    }
    if (chi2 > chi2_crit_df7)
      return {false, fmt("roulette trial %d chi2 %.2f > %.2f", trial, chi2,
                         chi2_crit_df7)};
    if (trial == 0) detail << fmt("chi2=%.2f ", chi2);
  }

  // Crossover keeps lengths and the per-position bit multiset.
  Rng rng(55);
  for (int trial = 0; trial < 1000; ++trial) {
    const Chromosome pa(static_cast<std::uint32_t>(rng() & 0xFFFFF), 20);
    const Chromosome pb(static_cast<std::uint32_t>(rng() & 0xFFFFF), 20);
    const auto [ca, cb] = single_point_crossover(pa, pb, rng);
    if (ca.length() != 20 || cb.length() != 20)
      return {false, "crossover changed the rule length"};
    for (int k = 1; k <= 20; ++k)
      if (int(pa.bit(k)) + int(pb.bit(k)) != int(ca.bit(k)) + int(cb.bit(k)))
        return {false, fmt("crossover lost a bit at position %d", k)};
  }

  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (secs >= 10.0) return {false, fmt("took %.1fs, budget 10s", secs)};
  detail << "crossover multiset ok";
  return {true, detail.str()};
}

std::pair<bool, std::string> individual_learning_stays_off_equilibrium() {
  SimulationParams base;
  base.model_id = "poly4";
  base.population_size = 50;
  base.bits = 20;
  base.p_mut = 0.01;
  base.ga_rate = 50;
  base.generations = 2000;
  base.init = InitMode::Random;

  const double q_ref = 86.9401;
  bool ok = true;
  std::ostringstream detail;
  int grid = 0;
  for (const auto kind :
       {AlgorithmKind::VriendIndividual, AlgorithmKind::CoevolIndividual}) {
    auto p = base;
    p.kind = kind;
    const auto batch = run_batch(p, 30, static_cast<std::uint64_t>(grid++));

    long long eq_games = 0;
    int spread_ok = 0, grand_ok = 0;
    std::vector<RunQuantityStats> quants;
    for (const auto& r : batch) {
      eq_games += r.chain.eq_games;
      const double spread = r.quant.per_player_mean_q.maxCoeff() -
                            r.quant.per_player_mean_q.minCoeff();
      spread_ok += spread >= 5.0;
      grand_ok += std::abs(r.quant.grand_mean_q - q_ref) <= 10.0;
      quants.push_back(r.quant);
    }
    const double q_hat = symmetric_nash(catalogue_model(base.model_id)).q_hat;
    const auto verdicts = batch_verdicts(quants, q_hat);
    int player_rejects = 0;
    for (const auto& v : verdicts.per_player) player_rejects += !v.accepted;

    const bool a = eq_games == 0;
    const bool b = spread_ok == 30 && grand_ok == 30;
    const bool c = verdicts.grand.accepted && player_rejects >= 1;
    ok = ok && a && b && c;
    detail << to_string(kind) << "[a:" << (a ? "pass" : "FAIL")
           << fmt(" eq_games=%lld", eq_games) << " b:" << (b ? "pass" : "FAIL")
           << fmt(" spread>=5 in %d/30, |grand-ref|<=10 in %d/30", spread_ok,
                  grand_ok)
           << " c:" << (c ? "pass" : "FAIL")
           << fmt(" grand %s t=%.2f, %d/%zu players reject",
                  verdicts.grand.accepted ? "accepted" : "rejected",
                  verdicts.grand.statistic, player_rejects,
                  verdicts.per_player.size())
           << "] ";
  }
  return {ok, detail.str()};
}

std::pair<bool, std::string> social_learning_reaches_equilibrium() {
  SimulationParams base;
  base.model_id = "poly4";
  base.population_size = 40;
  base.bits = 20;
  base.ga_rate = 50;
  base.generations = 10000;
  base.init = InitMode::AntiEquilibrium;

  bool ok = true;
  std::ostringstream detail;
  int grid = 10;
  for (const auto& [kind, p_mut] :
       {std::pair{AlgorithmKind::VriendSocial, 0.00025},
        std::pair{AlgorithmKind::CoevolSocial, 0.0005}}) {
    auto p = base;
    p.kind = kind;
    p.p_mut = p_mut;
    const auto batch = run_batch(p, 30, static_cast<std::uint64_t>(grid++));

    int reached = 0;
    std::vector<double> hit_gens;
    long long gap_sum = 0, gap_count = 0;
    long long games_after = 0, eq_after = 0;
    double low_state_freq = 0.0;
    for (const auto& r : batch) {
      if (r.chain.gens_to_eq) {
        ++reached;
        hit_gens.push_back(static_cast<double>(*r.chain.gens_to_eq));
        for (long g : r.chain.interarrival) gap_sum += g;
        gap_count += static_cast<long long>(r.chain.interarrival.size());
        games_after += r.chain.games_after_first;
        eq_after += r.chain.eq_games_after_first;
      }
      low_state_freq += r.chain.frequencies[0] + r.chain.frequencies[1];
    }
    low_state_freq /= 30.0;

    const bool a = reached >= 24;  // 80% of 30
    const bool b = !hit_gens.empty() && median(hit_gens) >= 500.0 &&
                   median(hit_gens) <= 8000.0;
    const bool c = gap_count > 0 && double(gap_sum) / double(gap_count) <= 20.0;
    const bool d = games_after > 0 && double(eq_after) / double(games_after) >= 0.30;
    const bool e = low_state_freq >= 0.5;
    ok = ok && a && b && c && d && e;
    detail << to_string(kind) << "[a:" << (a ? "pass" : "FAIL") << " reached "
           << reached << "/30 b:" << (b ? "pass" : "FAIL")
           << fmt(" median %s", hit_gens.empty()
                                    ? "n/a"
                                    : fmt("%.0f", median(hit_gens)).c_str())
           << " c:" << (c ? "pass" : "FAIL")
           << fmt(" gap %s", gap_count ? fmt("%.1f", double(gap_sum) / double(gap_count)).c_str()
                                       : "n/a")
           << " d:" << (d ? "pass" : "FAIL")
           << fmt(" eq-share %s",
                  games_after ? fmt("%.2f", double(eq_after) / double(games_after)).c_str()
                              : "n/a")
           << " e:" << (e ? "pass" : "FAIL")
           << fmt(" freq(S0+S1)=%.3f", low_state_freq) << "] ";
  }
  return {ok, detail.str()};
}

std::pair<bool, std::string> mutation_rate_gates_full_convergence() {
  SimulationParams base;
  base.model_id = "poly20";
  base.kind = AlgorithmKind::VriendSocial;
  base.population_size = 20;
  base.bits = 8;
  base.ga_rate = 50;
  base.generations = 10000;
  base.init = InitMode::Random;

  const auto model = catalogue_model(base.model_id);

  auto p_loose = base;
  p_loose.p_mut = 0.001;
  p_loose.seed = derive_run_seed(1, 0, 0);
  const auto loose = run_simulation(p_loose, model);
  const auto f_loose = limiting_frequencies(loose.gens, base.bits);
  const double s23 = f_loose[2] + f_loose[3];
  const bool drifting = s23 >= 0.5 && f_loose[0] == 0.0;

  auto p_tight = base;
  p_tight.p_mut = 0.0001;
  p_tight.seed = derive_run_seed(1, 0, 1);
  const auto tight = run_simulation(p_tight, model);
  const auto f_tight = limiting_frequencies(tight.gens, base.bits);
  const bool converging = f_tight[0] > 0.0;

  return {drifting && converging,
          fmt("p_mut 1e-3: freq(S2+S3)=%.3f freq(S0)=%.3f; p_mut 1e-4: "
              "freq(S0)=%.3f",
              s23, f_loose[0], f_tight[0])};
}

std::pair<bool, std::string> matchup_fitness_is_unbiased() {
  // Two players, two rules each: realized profits over repeated random
  // matchups must center on the exact expectation over opponents.
  const MarketModel m{{DemandKind::Linear, 210.0, 1.0}, {10.0, 10.0}, 2};
  const auto ctx = make_context(m, 4);

  SimulationParams p;
  p.model_id = "custom";
  p.kind = AlgorithmKind::CoevolIndividual;
  p.population_size = 2;
  p.bits = 4;
  p.p_mut = 0.0;
  p.generations = 1;
  p.init = InitMode::Explicit;
  p.explicit_init.resize(2);
  p.explicit_init[0].members = {Chromosome(3, 4), Chromosome(9, 4)};
  p.explicit_init[1].members = {Chromosome(5, 4), Chromosome(12, 4)};

  Rng rng(424242);
  auto state = init_state(p, ctx, rng);
  const auto exact =
      expected_coevol_profits({state.players[0].pop, state.players[1].pop}, m,
                              ctx.codec);

  const int rounds = 10000;
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(2, 2);
  for (int r = 0; r < rounds; ++r) {
    GenerationTrace row;
    coevol_round(state, ctx, rng, row);
    for (int i = 0; i < 2; ++i)
      for (int k = 0; k < 2; ++k) sum(i, k) += state.players[i].profit[k];
  }

  for (int i = 0; i < 2; ++i)
    for (int k = 0; k < 2; ++k) {
      const double mean = sum(i, k) / rounds;
      // Each cell is a two-point distribution over the opponent's rules.
      const int other = 1 - i;
      const double q = ctx.codec.decode(state.players[i].pop.members[k]);
      const double pi_a = profit(
          m, q, q + ctx.codec.decode(state.players[other].pop.members[0]));
      const double pi_b = profit(
          m, q, q + ctx.codec.decode(state.players[other].pop.members[1]));
      const double se = 0.5 * std::abs(pi_a - pi_b) / std::sqrt(double(rounds));
      if (std::abs(mean - exact(i, k)) > 3 * se)
        return {false, fmt("rule (%d,%d): mean %.3f vs exact %.3f (3se=%.3f)",
                           i, k, mean, exact(i, k), 3 * se)};
    }

  // The best rule on the 8-bit grid sits within one step of the smooth
  // best response.
  const auto m4 = catalogue_model("linear4");
  const double q_hat = symmetric_nash(m4).q_hat;
  const auto codec = QuantityCodec::for_equilibrium(q_hat, 8);
  const double step = codec.q_max / 255.0;
  for (const double opp_total : {60.0, 100.0, 120.0, 150.0}) {
    double best_q = 0.0, best_pi = -1e300;
    for (std::uint32_t v = 0; v < 256; ++v) {
      const double q = codec.decode(Chromosome(v, 8));
      const double pi = profit(m4, q, q + opp_total);
      if (pi > best_pi) {
        best_pi = pi;
        best_q = q;
      }
    }
    const auto smooth = best_response(m4, opp_total);
    if (std::abs(best_q - smooth.quantity) > step)
      return {false, fmt("grid response %.3f vs smooth %.3f at opp %.0f",
                         best_q, smooth.quantity, opp_total)};
  }
  return {true, "matchup profits within 3 sigma of exact enumeration; grid "
                "best response within one step of smooth"};
}

std::pair<bool, std::string> runs_replay_byte_identically() {
  // Once directly through the engine...
  SimulationParams p;
  p.model_id = "poly4";
  p.kind = AlgorithmKind::VriendSocial;
  p.population_size = 20;
  p.bits = 20;
  p.p_mut = 0.001;
  p.ga_rate = 50;
  p.generations = 300;
  p.seed = 777;

  const auto model = catalogue_model(p.model_id);
  auto record = [&] {
    const auto run = run_simulation(p, model);
    const auto header = make_run_header(run, p.model_id, model);
    const auto chain = chain_stats(run.initial_state, run.gens, p.bits);
    const auto quant = quantity_stats(run.gens, model.n, run.q_hat);
    return run_stats_json(header, chain, quant, run.gens.back().pop_hash)
        .dump(2);
  };
  const auto first = record();
  const auto second = record();
  if (first != second) return {false, "engine records differ between executions"};

  // ...and once through the batch harness with different worker counts.
  namespace fs = std::filesystem;
  auto run_dir = [&](const fs::path& dir, int threads) {
    fs::remove_all(dir);
    ExperimentConfig cfg;
    cfg.model = "poly4";
    cfg.kind = AlgorithmKind::VriendSocial;
    cfg.pop = {20};
    cfg.p_mut = {0.001};
    cfg.generations = {150};
    cfg.seed = 5;
    cfg.seeds = 3;
    cfg.out = dir.string();
    cfg.threads = threads;
    run_experiment(cfg);
  };
  const auto base = fs::temp_directory_path();
  run_dir(base / "coga_accept_a", 1);
  run_dir(base / "coga_accept_b", 4);
  auto slurp = [](const fs::path& f) {
    std::ifstream in(f, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
  };
  const char* files[] = {"g0_pop20_pm0.001_T150_ga50/run_000.stats.json",
                         "g0_pop20_pm0.001_T150_ga50/run_001.stats.json",
                         "g0_pop20_pm0.001_T150_ga50/run_002.stats.json",
                         "g0_pop20_pm0.001_T150_ga50/report.json",
                         "summary.json"};
  for (const char* f : files)
    if (slurp(base / "coga_accept_a" / f) != slurp(base / "coga_accept_b" / f))
      return {false, fmt("harness artifact %s differs across thread counts", f)};
  fs::remove_all(base / "coga_accept_a");
  fs::remove_all(base / "coga_accept_b");
  return {true, "stats records byte-identical across re-execution and "
                "across 1 vs 4 workers"};
}

}  // namespace

int main() {
  std::printf("acceptance gate, fixed base seed 1\n");
  criterion(1, equilibria_match_references);
  criterion(2, codec_hits_equilibrium_exactly);
  criterion(3, operator_distributions);
  criterion(4, individual_learning_stays_off_equilibrium);
  criterion(5, social_learning_reaches_equilibrium);
  criterion(6, mutation_rate_gates_full_convergence);
  criterion(7, matchup_fitness_is_unbiased);
  criterion(8, runs_replay_byte_identically);
  std::printf("acceptance: %d/8 criteria passed\n", 8 - g_failures);
  return g_failures == 0 ? 0 : 1;
}
