#include "coga/sim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

#include "coga/markov.hpp"

namespace coga {

const char* to_string(AlgorithmKind kind) {
  switch (kind) {
    case AlgorithmKind::VriendIndividual: return "vriend-individual";
    case AlgorithmKind::VriendSocial: return "vriend-social";
    case AlgorithmKind::CoevolIndividual: return "coevol-individual";
    case AlgorithmKind::CoevolSocial: return "coevol-social";
  }
  return "?";
}

AlgorithmKind algorithm_from_string(const std::string& s) {
  if (s == "vriend-individual" || s == "vi") return AlgorithmKind::VriendIndividual;
  if (s == "vriend-social" || s == "vs") return AlgorithmKind::VriendSocial;
  if (s == "coevol-individual" || s == "cp") return AlgorithmKind::CoevolIndividual;
  if (s == "coevol-social" || s == "cs") return AlgorithmKind::CoevolSocial;
  throw std::invalid_argument("unknown algorithm: " + s);
}

bool uses_periods(AlgorithmKind kind) {
  return kind == AlgorithmKind::VriendIndividual ||
         kind == AlgorithmKind::VriendSocial;
}

bool is_social(AlgorithmKind kind) {
  return kind == AlgorithmKind::VriendSocial ||
         kind == AlgorithmKind::CoevolSocial;
}

const char* to_string(InitMode mode) {
  switch (mode) {
    case InitMode::Random: return "random";
    case InitMode::AntiEquilibrium: return "anti-equilibrium";
    case InitMode::Equilibrium: return "equilibrium";
    case InitMode::Explicit: return "explicit";
  }
  return "?";
}

InitMode init_mode_from_string(const std::string& s) {
  if (s == "random") return InitMode::Random;
  if (s == "anti-equilibrium") return InitMode::AntiEquilibrium;
  if (s == "equilibrium") return InitMode::Equilibrium;
  if (s == "explicit") return InitMode::Explicit;
  throw std::invalid_argument("unknown init mode: " + s);
}

void validate(const SimulationParams& p) {
  if (p.population_size < 2 || p.population_size % 2 != 0)
    throw std::invalid_argument("params: population_size must be even and >= 2");
  if (p.bits < 2 || p.bits > 30 || p.bits % 2 != 0)
    throw std::invalid_argument("params: bits must be even and in [2, 30]");
  if (!(p.p_mut >= 0.0 && p.p_mut <= 1.0))
    throw std::invalid_argument("params: p_mut must be in [0, 1]");
  if (p.p_cross != 1.0)
    throw std::invalid_argument("params: the learning rules fix p_cross at 1");
  if (uses_periods(p.kind) && p.ga_rate < 1)
    throw std::invalid_argument("params: ga_rate must be >= 1");
  if (p.generations < 1)
    throw std::invalid_argument("params: generations must be >= 1");
  if (p.init == InitMode::Explicit && p.explicit_init.empty())
    throw std::invalid_argument("params: explicit init needs populations");
}

SimContext make_context(const MarketModel& model, int bits, double nash_tol) {
  if (model.n < 2)
    throw std::invalid_argument("make_context: need at least 2 players");
  SimContext ctx;
  ctx.model = model;
  ctx.equilibrium = symmetric_nash(model, nash_tol);
  ctx.codec = QuantityCodec::for_equilibrium(ctx.equilibrium.q_hat, bits);
  ctx.eq_chromosome = ctx.codec.equilibrium_chromosome();
  return ctx;
}

SimulationState init_state(const SimulationParams& p, const SimContext& ctx,
                           Rng& rng) {
  const int n = ctx.model.n;
  const int K = p.population_size;
  const int L = p.bits;
  SimulationState state;
  state.players.resize(static_cast<std::size_t>(n));

  for (int i = 0; i < n; ++i) {
    auto& pl = state.players[static_cast<std::size_t>(i)];
    pl.pop.owner = i;
    pl.pop.members.reserve(static_cast<std::size_t>(K));
    for (int m = 0; m < K; ++m) {
      switch (p.init) {
        case InitMode::Random: {
          // Bits drawn per member, low bit first.
          std::uint32_t v = 0;
          for (int k = 0; k < L; ++k)
            if (uniform01(rng) < 0.5) v |= std::uint32_t{1} << k;
          pl.pop.members.emplace_back(v, L);
          break;
        }
        case InitMode::AntiEquilibrium:
          pl.pop.members.push_back(ctx.codec.anti_equilibrium_chromosome());
          break;
        case InitMode::Equilibrium:
          pl.pop.members.push_back(ctx.eq_chromosome);
          break;
        case InitMode::Explicit: {
          const auto& src = p.explicit_init;
          if (static_cast<int>(src.size()) != n)
            throw std::invalid_argument("explicit init: wrong player count");
          const auto& members = src[static_cast<std::size_t>(i)].members;
          if (static_cast<int>(members.size()) != K)
            throw std::invalid_argument("explicit init: wrong population size");
          const auto& c = members[static_cast<std::size_t>(m)];
          if (c.length() != L)
            throw std::invalid_argument("explicit init: wrong rule length");
          pl.pop.members.push_back(c);
          break;
        }
      }
    }
    pl.profit = Eigen::VectorXd::Constant(K, kUnplayedProfit);
    pl.played.assign(static_cast<std::size_t>(K), 0);
  }
  return state;
}

std::uint64_t population_hash(const std::vector<PlayerState>& players) {
  std::uint64_t h = 14695981039346656037ULL;
  const auto mix = [&h](std::uint8_t byte) {
    h ^= byte;
    h *= 1099511628211ULL;
  };
  for (const auto& pl : players)
    for (const auto& c : pl.pop.members) {
      const std::uint32_t v = c.value();
      mix(static_cast<std::uint8_t>(v));
      mix(static_cast<std::uint8_t>(v >> 8));
      mix(static_cast<std::uint8_t>(v >> 16));
      mix(static_cast<std::uint8_t>(v >> 24));
    }
  return h;
}

namespace {

struct GameBuffers {
  std::vector<int> chosen;
  std::vector<double> q;
  std::vector<double> pi;

  void resize(int n) {
    chosen.resize(static_cast<std::size_t>(n));
    q.resize(static_cast<std::size_t>(n));
    pi.resize(static_cast<std::size_t>(n));
  }
};

struct GamePlayed {
  double total_q = 0.0;
  double price = 0.0;
  bool eq_game = false;
  bool same_rule = false;  // all players used rules with the same value
  std::uint32_t rule_value = 0;
};

// Plays the game described by buf.chosen and writes realized profits back
// into the chosen rules' profit cells.
GamePlayed play_chosen(SimulationState& state, const SimContext& ctx,
                       GameBuffers& buf) {
  const int n = ctx.model.n;
  GamePlayed out;
  out.eq_game = true;
  out.same_rule = true;
  out.rule_value = state.players[0]
                       .pop.members[static_cast<std::size_t>(buf.chosen[0])]
                       .value();
  for (int i = 0; i < n; ++i) {
    const auto& c = state.players[static_cast<std::size_t>(i)]
                        .pop.members[static_cast<std::size_t>(buf.chosen[i])];
    buf.q[static_cast<std::size_t>(i)] = ctx.codec.decode(c);
    out.total_q += buf.q[static_cast<std::size_t>(i)];
    out.eq_game &= c == ctx.eq_chromosome;
    out.same_rule &= c.value() == out.rule_value;
  }
  out.price = price(ctx.model, out.total_q);
  for (int i = 0; i < n; ++i) {
    auto& pl = state.players[static_cast<std::size_t>(i)];
    const double pi = profit_at_price(ctx.model, buf.q[static_cast<std::size_t>(i)],
                                      out.price);
    buf.pi[static_cast<std::size_t>(i)] = pi;
    pl.profit[buf.chosen[i]] = pi;
    pl.played[static_cast<std::size_t>(buf.chosen[i])] = 1;
  }
  ++state.period;
  return out;
}

GameRecord make_record(const SimulationState& state, const SimContext& ctx,
                       const GameBuffers& buf, const GamePlayed& played,
                       long game_index) {
  const int n = ctx.model.n;
  GameRecord rec;
  rec.generation = state.generation + 1;
  rec.game = static_cast<int>(game_index);
  rec.chosen = buf.chosen;
  rec.quantities = Eigen::Map<const Eigen::VectorXd>(buf.q.data(), n);
  rec.price = played.price;
  rec.profits = Eigen::Map<const Eigen::VectorXd>(buf.pi.data(), n);
  rec.equilibrium_game = played.eq_game;
  return rec;
}

// Accumulates the per-generation row while games are played.
struct GenAccum {
  long games = 0;
  long eq_games = 0;
  double sum_mean_q = 0.0;
  double ssd = 0.0;
  std::vector<double> player_sum_q;

  void reset(int n) {
    games = 0;
    eq_games = 0;
    sum_mean_q = 0.0;
    ssd = 0.0;
    player_sum_q.assign(static_cast<std::size_t>(n), 0.0);
  }

  void add(const GamePlayed& played, const GameBuffers& buf, int n,
           double q_hat) {
    ++games;
    if (played.eq_game) ++eq_games;
    const double mean = played.total_q / n;
    sum_mean_q += mean;
    ssd += (mean - q_hat) * (mean - q_hat);
    for (int i = 0; i < n; ++i)
      player_sum_q[static_cast<std::size_t>(i)] += buf.q[static_cast<std::size_t>(i)];
  }

  GenerationTrace finish(const SimulationState& state, const SimContext& ctx) const {
    const int n = ctx.model.n;
    GenerationTrace t;
    t.generation = state.generation;
    t.lumped_state = lumped_state_of(state.players, ctx.eq_chromosome);
    t.eq_games = static_cast<int>(eq_games);
    t.games = static_cast<int>(games);
    t.mean_q = sum_mean_q / static_cast<double>(games);
    t.ssd_q = ssd;
    t.player_mean_q.resize(n);
    for (int i = 0; i < n; ++i)
      t.player_mean_q[i] =
          player_sum_q[static_cast<std::size_t>(i)] / static_cast<double>(games);
    t.pop_hash = population_hash(state.players);
    return t;
  }
};

void tally_game(GameTally* tally, const GamePlayed& played) {
  if (tally && played.same_rule) ++tally->same_quantity_games[played.rule_value];
}

}  // namespace

GameRecord play_vriend_period(SimulationState& state, const SimContext& ctx,
                              Rng& rng) {
  const int n = ctx.model.n;
  GameBuffers buf;
  buf.resize(n);
  for (int i = 0; i < n; ++i) {
    const auto K = static_cast<std::uint32_t>(
        state.players[static_cast<std::size_t>(i)].pop.members.size());
    buf.chosen[static_cast<std::size_t>(i)] =
        static_cast<int>(uniform_below(rng, K));
  }
  const GamePlayed played = play_chosen(state, ctx, buf);
  return make_record(state, ctx, buf, played, state.period);
}

void coevol_round(SimulationState& state, const SimContext& ctx, Rng& rng,
                  GenerationTrace& trace, TraceSink* sink, GameTally* tally) {
  const int n = ctx.model.n;
  const auto K = static_cast<int>(state.players.front().pop.members.size());

  // Independent uniform permutation per player, in player order.
  std::vector<std::vector<int>> perm(static_cast<std::size_t>(n));
  for (auto& p : perm) {
    p.resize(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) p[static_cast<std::size_t>(k)] = k;
    for (int k = K - 1; k >= 1; --k) {
      const auto j = static_cast<int>(
          uniform_below(rng, static_cast<std::uint32_t>(k + 1)));
      std::swap(p[static_cast<std::size_t>(k)], p[static_cast<std::size_t>(j)]);
    }
  }

  GameBuffers buf;
  buf.resize(n);
  GenAccum acc;
  acc.reset(n);
  const bool games_wanted = sink && sink->wants_games();
  for (int g = 0; g < K; ++g) {
    for (int i = 0; i < n; ++i)
      buf.chosen[static_cast<std::size_t>(i)] =
          perm[static_cast<std::size_t>(i)][static_cast<std::size_t>(g)];
    const GamePlayed played = play_chosen(state, ctx, buf);
    acc.add(played, buf, n, ctx.equilibrium.q_hat);
    tally_game(tally, played);
    if (games_wanted) sink->on_game(make_record(state, ctx, buf, played, g + 1));
  }
  trace.eq_games = static_cast<int>(acc.eq_games);
  trace.games = static_cast<int>(acc.games);
  trace.mean_q = acc.sum_mean_q / static_cast<double>(acc.games);
  trace.ssd_q = acc.ssd;
  trace.player_mean_q.resize(n);
  for (int i = 0; i < n; ++i)
    trace.player_mean_q[i] =
        acc.player_sum_q[static_cast<std::size_t>(i)] / static_cast<double>(acc.games);
}

void update_populations(SimulationState& state, const SimulationParams& p,
                        Rng& rng) {
  const GAParams ga{p.p_cross, p.p_mut};
  const int n = static_cast<int>(state.players.size());
  const int K = p.population_size;

  if (!is_social(p.kind)) {
    for (auto& pl : state.players)
      pl.pop = next_generation(pl.pop, profits_to_fitness(pl.profit), ga, rng);
  } else {
    Population pooled;
    Eigen::VectorXd profit(static_cast<Eigen::Index>(n) * K);
    pooled.members.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(K));
    Eigen::Index at = 0;
    for (const auto& pl : state.players) {
      pooled.members.insert(pooled.members.end(), pl.pop.members.begin(),
                            pl.pop.members.end());
      profit.segment(at, K) = pl.profit;
      at += K;
    }
    const Population next =
        next_generation(pooled, profits_to_fitness(profit), ga, rng);
    for (int i = 0; i < n; ++i) {
      auto& pl = state.players[static_cast<std::size_t>(i)];
      pl.pop.owner = i;
      pl.pop.members.assign(
          next.members.begin() + static_cast<std::ptrdiff_t>(i) * K,
          next.members.begin() + static_cast<std::ptrdiff_t>(i + 1) * K);
    }
  }

  // Profit cells are slot-persistent: offspring inherit the value left in
  // their slot until a game overwrites it. Only the played flags reset.
  for (auto& pl : state.players)
    std::fill(pl.played.begin(), pl.played.end(), std::uint8_t{0});
  ++state.generation;
}

GenerationTrace vriend_generation(SimulationState& state,
                                  const SimulationParams& p,
                                  const SimContext& ctx, Rng& rng,
                                  TraceSink* sink, GameTally* tally) {
  const int n = ctx.model.n;
  GameBuffers buf;
  buf.resize(n);
  GenAccum acc;
  acc.reset(n);
  const bool games_wanted = sink && sink->wants_games();
  const auto K = static_cast<std::uint32_t>(p.population_size);
  for (int g = 0; g < p.ga_rate; ++g) {
    for (int i = 0; i < n; ++i)
      buf.chosen[static_cast<std::size_t>(i)] =
          static_cast<int>(uniform_below(rng, K));
    const GamePlayed played = play_chosen(state, ctx, buf);
    acc.add(played, buf, n, ctx.equilibrium.q_hat);
    tally_game(tally, played);
    if (games_wanted)
      sink->on_game(make_record(state, ctx, buf, played, state.period));
  }
  update_populations(state, p, rng);
  return acc.finish(state, ctx);
}

GenerationTrace coevol_generation(SimulationState& state,
                                  const SimulationParams& p,
                                  const SimContext& ctx, Rng& rng,
                                  TraceSink* sink, GameTally* tally) {
  GenerationTrace trace;
  coevol_round(state, ctx, rng, trace, sink, tally);
  update_populations(state, p, rng);
  trace.generation = state.generation;
  trace.lumped_state = lumped_state_of(state.players, ctx.eq_chromosome);
  trace.pop_hash = population_hash(state.players);
  return trace;
}

RunResult run_simulation(const SimulationParams& p, const MarketModel& model,
                         TraceSink* sink) {
  validate(p);
  const SimContext ctx = make_context(model, p.bits);
  Rng rng(p.seed);
  SimulationState state = init_state(p, ctx, rng);

  RunResult out;
  out.params = p;
  out.q_hat = ctx.equilibrium.q_hat;
  out.q_max = ctx.codec.q_max;
  out.nash_residual = ctx.equilibrium.residual;
  out.initial_state = lumped_state_of(state.players, ctx.eq_chromosome);
  out.initial_hash = population_hash(state.players);
  if (sink) sink->on_run_start(p, ctx, out.initial_state, out.initial_hash);
  if (sink && sink->wants_populations())
    sink->on_populations(0, state.players);

  GameTally tally;
  out.gens.reserve(static_cast<std::size_t>(p.generations));
  const bool vriend = uses_periods(p.kind);
  for (long g = 0; g < p.generations; ++g) {
    const GenerationTrace trace =
        vriend ? vriend_generation(state, p, ctx, rng, sink, &tally)
               : coevol_generation(state, p, ctx, rng, sink, &tally);
    out.gens.push_back(trace);
    if (sink) {
      sink->on_generation(trace);
      if (sink->wants_populations()) sink->on_populations(trace.generation, state.players);
    }
  }
  out.same_quantity_games = std::move(tally.same_quantity_games);
  return out;
}

RunResult run_simulation(const SimulationParams& p, TraceSink* sink) {
  return run_simulation(p, catalogue_model(p.model_id), sink);
}

Eigen::MatrixXd expected_coevol_profits(const std::vector<Population>& pops,
                                        const MarketModel& model,
                                        const QuantityCodec& codec,
                                        long samples, Rng* rng,
                                        long enumeration_cap) {
  const int n = static_cast<int>(pops.size());
  if (n != model.n)
    throw std::invalid_argument("expected_coevol_profits: player count mismatch");
  if (n < 2) throw std::invalid_argument("expected_coevol_profits: need n >= 2");
  const auto K = static_cast<int>(pops.front().members.size());
  for (const auto& p : pops)
    if (static_cast<int>(p.members.size()) != K || K == 0)
      throw std::invalid_argument(
          "expected_coevol_profits: populations must share a positive size");

  Eigen::MatrixXd q(n, K);
  for (int i = 0; i < n; ++i)
    for (int m = 0; m < K; ++m)
      q(i, m) = codec.decode(pops[static_cast<std::size_t>(i)]
                                 .members[static_cast<std::size_t>(m)]);

  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, K);

  double combos = 1.0;
  for (int j = 0; j < n - 1; ++j) combos *= K;

  if (combos <= static_cast<double>(enumeration_cap)) {
    // Exact: walk the opponents' product space with an odometer.
    std::vector<int> opp;
    std::vector<int> idx;
    for (int i = 0; i < n; ++i) {
      opp.clear();
      for (int j = 0; j < n; ++j)
        if (j != i) opp.push_back(j);
      idx.assign(opp.size(), 0);
      const auto total_combos = static_cast<long>(combos);
      for (long c = 0; c < total_combos; ++c) {
        double q_opp = 0.0;
        for (std::size_t d = 0; d < opp.size(); ++d)
          q_opp += q(opp[d], idx[d]);
        for (int m = 0; m < K; ++m)
          out(i, m) += profit(model, q(i, m), q(i, m) + q_opp);
        for (std::size_t d = 0; d < idx.size(); ++d) {
          if (++idx[d] < K) break;
          idx[d] = 0;
        }
      }
    }
    out /= combos;
    return out;
  }

  if (rng == nullptr)
    throw std::invalid_argument(
        "expected_coevol_profits: sampling fallback needs an rng");
  if (samples < 1)
    throw std::invalid_argument("expected_coevol_profits: samples must be >= 1");
  // One sampled profile serves every player: drop the player's own draw from
  // the profile total to get that player's opponent quantity.
  std::vector<int> profile(static_cast<std::size_t>(n));
  for (long s = 0; s < samples; ++s) {
    double total = 0.0;
    for (int j = 0; j < n; ++j) {
      profile[static_cast<std::size_t>(j)] =
          static_cast<int>(uniform_below(*rng, static_cast<std::uint32_t>(K)));
      total += q(j, profile[static_cast<std::size_t>(j)]);
    }
    for (int i = 0; i < n; ++i) {
      const double q_opp = total - q(i, profile[static_cast<std::size_t>(i)]);
      for (int m = 0; m < K; ++m)
        out(i, m) += profit(model, q(i, m), q(i, m) + q_opp);
    }
  }
  out /= static_cast<double>(samples);
  return out;
}

}  // namespace coga
