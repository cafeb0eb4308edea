#include <doctest.h>

#include <cstdint>
#include <stdexcept>
#include <vector>

#include <coga/markov.hpp>
#include <coga/sim.hpp>

using namespace coga;

namespace {

SimulationParams base_params(AlgorithmKind kind) {
  SimulationParams p;
  p.model_id = "linear4";
  p.kind = kind;
  p.population_size = 4;
  p.bits = 8;
  p.p_mut = 0.0;
  p.ga_rate = 5;
  p.generations = 1;
  p.seed = 99;
  return p;
}

// Four players, one rule value each, so every game outcome is predictable.
std::vector<Population> uniform_pools(int players, int pool,
                                      std::uint32_t value, int bits) {
  std::vector<Population> pops(players);
  for (int i = 0; i < players; ++i) {
    pops[i].owner = i;
    pops[i].members.assign(pool, Chromosome(value, bits));
  }
  return pops;
}

}  // namespace

TEST_CASE("parameter validation") {
  auto p = base_params(AlgorithmKind::VriendIndividual);
  CHECK_NOTHROW(validate(p));

  auto odd = p;
  odd.population_size = 5;
  CHECK_THROWS_AS(validate(odd), std::invalid_argument);

  auto bits = p;
  bits.bits = 7;
  CHECK_THROWS_AS(validate(bits), std::invalid_argument);

  auto cross = p;
  cross.p_cross = 0.5;
  CHECK_THROWS_AS(validate(cross), std::invalid_argument);

  auto rate = p;
  rate.ga_rate = 0;
  CHECK_THROWS_AS(validate(rate), std::invalid_argument);

  auto expl = p;
  expl.init = InitMode::Explicit;
  CHECK_THROWS_AS(validate(expl), std::invalid_argument);
}

TEST_CASE("initial state starts with unplayed cells") {
  const auto p = base_params(AlgorithmKind::VriendIndividual);
  const auto ctx = make_context(catalogue_model(p.model_id), p.bits);
  Rng rng(p.seed);
  const auto state = init_state(p, ctx, rng);
  REQUIRE(state.players.size() == 4);
  for (const auto& pl : state.players) {
    CHECK(pl.pop.members.size() == 4);
    for (int k = 0; k < 4; ++k) {
      CHECK(pl.profit[k] == kUnplayedProfit);
      CHECK(pl.played[k] == 0);
    }
  }
}

TEST_CASE("init modes land on the advertised patterns") {
  auto p = base_params(AlgorithmKind::VriendSocial);
  const auto ctx = make_context(catalogue_model(p.model_id), p.bits);
  Rng rng(1);

  p.init = InitMode::Equilibrium;
  for (const auto& pl : init_state(p, ctx, rng).players)
    for (const auto& m : pl.pop.members) CHECK(m == ctx.eq_chromosome);
  CHECK(lumped_state_of(init_state(p, ctx, rng).players, ctx.eq_chromosome) == 0);

  p.init = InitMode::AntiEquilibrium;
  for (const auto& pl : init_state(p, ctx, rng).players)
    for (const auto& m : pl.pop.members)
      CHECK(m == ctx.eq_chromosome.complement());
  CHECK(lumped_state_of(init_state(p, ctx, rng).players, ctx.eq_chromosome) ==
        p.bits);

  p.init = InitMode::Explicit;
  p.explicit_init = uniform_pools(4, 4, 85, 8);
  CHECK_NOTHROW(init_state(p, ctx, rng));
  p.explicit_init = uniform_pools(3, 4, 85, 8);
  CHECK_THROWS_AS(init_state(p, ctx, rng), std::invalid_argument);
  p.explicit_init = uniform_pools(4, 6, 85, 8);
  CHECK_THROWS_AS(init_state(p, ctx, rng), std::invalid_argument);
  p.explicit_init = uniform_pools(4, 4, 85, 10);
  CHECK_THROWS_AS(init_state(p, ctx, rng), std::invalid_argument);
}

TEST_CASE("a period game touches exactly one cell per player") {
  auto p = base_params(AlgorithmKind::VriendIndividual);
  p.init = InitMode::Explicit;
  p.explicit_init = uniform_pools(4, 4, 100, 8);
  const auto ctx = make_context(catalogue_model(p.model_id), p.bits);
  Rng rng(p.seed);
  auto state = init_state(p, ctx, rng);

  const auto rec = play_vriend_period(state, ctx, rng);
  CHECK(state.period == 1);
  REQUIRE(rec.chosen.size() == 4);

  // All rules are identical, so the game outcome is known exactly.
  const double q = ctx.codec.decode(Chromosome(100, 8));
  CHECK(rec.quantities[0] == doctest::Approx(q));
  const double pi = profit(ctx.model, q, 4 * q);
  for (std::size_t i = 0; i < 4; ++i) {
    const auto& pl = state.players[i];
    int played = 0;
    for (int k = 0; k < 4; ++k) {
      if (k == rec.chosen[i]) {
        CHECK(pl.played[k] == 1);
        CHECK(pl.profit[k] == doctest::Approx(pi));
        ++played;
      } else {
        CHECK(pl.played[k] == 0);
        CHECK(pl.profit[k] == kUnplayedProfit);
      }
    }
    CHECK(played == 1);
  }
}

TEST_CASE("a generation is ga_rate games then one update") {
  auto p = base_params(AlgorithmKind::VriendIndividual);
  p.ga_rate = 5;
  const auto ctx = make_context(catalogue_model(p.model_id), p.bits);
  Rng rng(p.seed);
  auto state = init_state(p, ctx, rng);

  const auto row = vriend_generation(state, p, ctx, rng);
  CHECK(row.games == 5);
  CHECK(state.period == 5);
  CHECK(state.generation == 1);
  // The update clears the played flags for the next generation.
  for (const auto& pl : state.players)
    for (auto flag : pl.played) CHECK(flag == 0);
}

TEST_CASE("a co-evolutionary round plays every rule exactly once") {
  auto p = base_params(AlgorithmKind::CoevolIndividual);
  p.population_size = 6;
  const auto ctx = make_context(catalogue_model(p.model_id), p.bits);
  Rng rng(p.seed);
  auto state = init_state(p, ctx, rng);

  GenerationTrace row;
  coevol_round(state, ctx, rng, row);
  CHECK(row.games == 6);
  for (const auto& pl : state.players)
    for (int k = 0; k < 6; ++k) {
      CHECK(pl.played[k] == 1);
      // Every cell was overwritten by a real game outcome.
      CHECK(pl.profit[k] != kUnplayedProfit);
    }
}

TEST_CASE("total game counts per algorithm family") {
  auto vi = base_params(AlgorithmKind::VriendIndividual);
  vi.generations = 10;
  vi.ga_rate = 50;
  const auto r1 = run_simulation(vi);
  long long games = 0;
  for (const auto& g : r1.gens) games += g.games;
  CHECK(games == 500);

  auto cp = base_params(AlgorithmKind::CoevolIndividual);
  cp.generations = 8;
  cp.population_size = 6;
  const auto r2 = run_simulation(cp);
  games = 0;
  for (const auto& g : r2.gens) games += g.games;
  CHECK(games == 48);
}

TEST_CASE("social update moves rules between players") {
  // Player 0 holds profitable rules, player 1 a bad one. A pooled update lets
  // player 1 inherit player 0's material; separate updates cannot.
  const MarketModel m{{DemandKind::Linear, 210.0, 1.0}, {10.0, 10.0}, 2};
  const auto ctx = make_context(m, 8);

  auto setup = [&](AlgorithmKind kind) {
    SimulationParams p;
    p.model_id = "custom";
    p.kind = kind;
    p.population_size = 4;
    p.bits = 8;
    p.p_mut = 0.0;
    p.generations = 1;
    p.init = InitMode::Explicit;
    p.explicit_init = {uniform_pools(1, 4, 50, 8)[0],
                       uniform_pools(1, 4, 255, 8)[0]};
    p.explicit_init[1].owner = 1;
    Rng rng(5);
    auto state = init_state(p, ctx, rng);
    // Hand the update realized profits: player 0's rules earn, player 1's lose.
    for (int k = 0; k < 4; ++k) {
      state.players[0].profit[k] = 1000.0;
      state.players[0].played[k] = 1;
      state.players[1].profit[k] = -500.0;
      state.players[1].played[k] = 1;
    }
    update_populations(state, p, rng);
    return state;
  };

  const auto social = setup(AlgorithmKind::CoevolSocial);
  int migrated = 0;
  for (const auto& c : social.players[1].pop.members)
    migrated += c.value() == 50;
  CHECK(migrated == 4);

  const auto individual = setup(AlgorithmKind::CoevolIndividual);
  for (const auto& c : individual.players[1].pop.members)
    CHECK(c.value() == 255);
}

TEST_CASE("profit cells persist across the update") {
  // Offspring landing on a slot compete with whatever profit that slot last
  // recorded; the update must not erase the cells.
  auto p = base_params(AlgorithmKind::VriendIndividual);
  p.init = InitMode::Explicit;
  p.explicit_init = uniform_pools(4, 4, 100, 8);
  const auto ctx = make_context(catalogue_model(p.model_id), p.bits);
  Rng rng(p.seed);
  auto state = init_state(p, ctx, rng);

  for (std::size_t i = 0; i < 4; ++i)
    for (int k = 0; k < 4; ++k) {
      state.players[i].profit[k] = 10.0 * double(i) + double(k);
      state.players[i].played[k] = 1;
    }
  update_populations(state, p, rng);
  for (std::size_t i = 0; i < 4; ++i)
    for (int k = 0; k < 4; ++k) {
      CHECK(state.players[i].profit[k] == 10.0 * double(i) + double(k));
      CHECK(state.players[i].played[k] == 0);
    }
  CHECK(state.generation == 1);
}

TEST_CASE("an equilibrium monoculture without mutation never leaves") {
  SimulationParams p;
  p.model_id = "linear4";
  p.kind = AlgorithmKind::VriendSocial;
  p.population_size = 10;
  p.bits = 20;
  p.p_mut = 0.0;
  p.ga_rate = 10;
  p.generations = 20;
  p.seed = 4;
  p.init = InitMode::Equilibrium;

  const auto run = run_simulation(p);
  CHECK(run.q_hat == doctest::Approx(40.0));
  for (const auto& g : run.gens) {
    CHECK(g.lumped_state == 0);
    CHECK(g.eq_games == g.games);
    CHECK(g.mean_q == doctest::Approx(40.0).epsilon(1e-7));
  }
}

TEST_CASE("runs replay exactly from the seed") {
  auto p = base_params(AlgorithmKind::CoevolSocial);
  p.population_size = 10;
  p.p_mut = 0.01;
  p.generations = 30;
  const auto a = run_simulation(p);
  const auto b = run_simulation(p);
  REQUIRE(a.gens.size() == b.gens.size());
  for (std::size_t i = 0; i < a.gens.size(); ++i) {
    CHECK(a.gens[i].pop_hash == b.gens[i].pop_hash);
    CHECK(a.gens[i].mean_q == b.gens[i].mean_q);
    CHECK(a.gens[i].lumped_state == b.gens[i].lumped_state);
  }
  CHECK(a.initial_hash == b.initial_hash);
}

TEST_CASE("expected co-evolutionary profits by exact enumeration") {
  const MarketModel m{{DemandKind::Linear, 210.0, 1.0}, {10.0, 10.0}, 2};
  const QuantityCodec codec(4, 15.0);  // decode(v) == v
  std::vector<Population> pops(2);
  pops[0].members = {Chromosome(4, 4), Chromosome(8, 4)};
  pops[1].members = {Chromosome(2, 4), Chromosome(10, 4)};
  pops[0].owner = 0;
  pops[1].owner = 1;

  const auto got = expected_coevol_profits(pops, m, codec);
  REQUIRE(got.rows() == 2);
  REQUIRE(got.cols() == 2);
  for (int r = 0; r < 2; ++r) {
    const double q = codec.decode(pops[0].members[r]);
    double expect = 0.0;
    for (const auto& opp : pops[1].members)
      expect += 0.5 * profit(m, q, q + codec.decode(opp));
    CHECK(got(0, r) == doctest::Approx(expect).epsilon(1e-12));
  }
  for (int r = 0; r < 2; ++r) {
    const double q = codec.decode(pops[1].members[r]);
    double expect = 0.0;
    for (const auto& opp : pops[0].members)
      expect += 0.5 * profit(m, q, q + codec.decode(opp));
    CHECK(got(1, r) == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("algorithm naming round trips") {
  for (auto kind : {AlgorithmKind::VriendIndividual, AlgorithmKind::VriendSocial,
                    AlgorithmKind::CoevolIndividual, AlgorithmKind::CoevolSocial})
    CHECK(algorithm_from_string(to_string(kind)) == kind);
  CHECK(algorithm_from_string("vi") == AlgorithmKind::VriendIndividual);
  CHECK(algorithm_from_string("cs") == AlgorithmKind::CoevolSocial);
  CHECK_THROWS_AS(algorithm_from_string("genetic"), std::invalid_argument);
  CHECK(uses_periods(AlgorithmKind::VriendSocial));
  CHECK_FALSE(uses_periods(AlgorithmKind::CoevolSocial));
  CHECK(is_social(AlgorithmKind::CoevolSocial));
  CHECK_FALSE(is_social(AlgorithmKind::CoevolIndividual));
}
