#include "coga/trace_io.hpp"

#include <charconv>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace coga {

std::string format_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw std::invalid_argument("bad number in trace: " + std::string(s));
  return v;
}

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  for (int i = 15; i >= 0; --i, v >>= 4) buf[i] = "0123456789abcdef"[v & 0xF];
  buf[16] = '\0';
  return buf;
}

std::uint64_t parse_hex64(std::string_view s) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v, 16);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw std::invalid_argument("bad hash in trace: " + std::string(s));
  return v;
}

long long parse_ll(std::string_view s) {
  long long v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw std::invalid_argument("bad integer in trace: " + std::string(s));
  return v;
}

std::uint64_t parse_u64(std::string_view s) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw std::invalid_argument("bad integer in trace: " + std::string(s));
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t at = 0;
  while (at <= s.size()) {
    const auto next = s.find(sep, at);
    if (next == std::string_view::npos) {
      out.push_back(s.substr(at));
      break;
    }
    out.push_back(s.substr(at, next - at));
    at = next + 1;
  }
  return out;
}

}  // namespace

RunHeader make_run_header(const RunResult& run, const std::string& model_label,
                          const MarketModel& model) {
  RunHeader h;
  h.params = run.params;
  h.model_label = model_label;
  h.model = model;
  h.q_hat = run.q_hat;
  h.q_max = run.q_max;
  h.initial_state = run.initial_state;
  h.initial_hash = run.initial_hash;
  return h;
}

CsvTraceSink::CsvTraceSink(const std::filesystem::path& file, bool with_games,
                           bool with_populations) {
  out_.open(file);
  if (!out_) throw std::runtime_error("cannot open trace file: " + file.string());
  auto base = file;
  base.replace_extension();  // run_000.trace.csv -> run_000.trace
  if (with_games) {
    auto p = base;
    p += ".games.csv";
    games_.open(p);
    if (!games_) throw std::runtime_error("cannot open games file: " + p.string());
  }
  if (with_populations) {
    auto p = base;
    p += ".pops.txt";
    pops_.open(p);
    if (!pops_) throw std::runtime_error("cannot open snapshot file: " + p.string());
  }
}

void CsvTraceSink::on_run_start(const SimulationParams& p, const SimContext& ctx,
                                int initial_state, std::uint64_t initial_hash) {
  players_ = ctx.model.n;
  out_ << "# coga-trace 1\n";
  out_ << "# model=" << model_label_ << " demand=" << to_string(ctx.model.demand.kind)
       << " a=" << format_double(ctx.model.demand.a)
       << " b=" << format_double(ctx.model.demand.b)
       << " x=" << format_double(ctx.model.cost.x)
       << " y=" << format_double(ctx.model.cost.y) << " players=" << ctx.model.n
       << "\n";
  out_ << "# algorithm=" << to_string(p.kind) << " pop=" << p.population_size
       << " bits=" << p.bits << " p_mut=" << format_double(p.p_mut)
       << " p_cross=" << format_double(p.p_cross) << " ga_rate=" << p.ga_rate
       << " generations=" << p.generations << " seed=" << p.seed
       << " init=" << to_string(p.init) << "\n";
  out_ << "# rng=mt19937_64 q_hat=" << format_double(ctx.equilibrium.q_hat)
       << " q_max=" << format_double(ctx.codec.q_max)
       << " eq_rule=" << ctx.eq_chromosome.to_string() << "\n";
  out_ << "# initial state=" << initial_state << " hash=" << hex64(initial_hash)
       << "\n";
  out_ << "gen,state,eq_games,games,mean_q,ssd_q";
  for (int i = 1; i <= players_; ++i) out_ << ",q_p" << i;
  out_ << ",pop_hash\n";

  if (games_.is_open()) {
    games_ << "gen,game";
    for (int i = 1; i <= players_; ++i) games_ << ",rule_p" << i;
    for (int i = 1; i <= players_; ++i) games_ << ",q_p" << i;
    games_ << ",price";
    for (int i = 1; i <= players_; ++i) games_ << ",profit_p" << i;
    games_ << ",eq\n";
  }
}

void CsvTraceSink::on_generation(const GenerationTrace& g) {
  out_ << g.generation << ',' << g.lumped_state << ',' << g.eq_games << ','
       << g.games << ',' << format_double(g.mean_q) << ','
       << format_double(g.ssd_q);
  for (Eigen::Index i = 0; i < g.player_mean_q.size(); ++i)
    out_ << ',' << format_double(g.player_mean_q[i]);
  out_ << ',' << hex64(g.pop_hash) << '\n';
}

void CsvTraceSink::on_game(const GameRecord& g) {
  games_ << g.generation << ',' << g.game;
  for (int c : g.chosen) games_ << ',' << c;
  for (Eigen::Index i = 0; i < g.quantities.size(); ++i)
    games_ << ',' << format_double(g.quantities[i]);
  games_ << ',' << format_double(g.price);
  for (Eigen::Index i = 0; i < g.profits.size(); ++i)
    games_ << ',' << format_double(g.profits[i]);
  games_ << ',' << (g.equilibrium_game ? 1 : 0) << '\n';
}

void CsvTraceSink::on_populations(long generation,
                                  const std::vector<PlayerState>& players) {
  pops_ << "gen " << generation << '\n';
  for (std::size_t i = 0; i < players.size(); ++i) {
    pops_ << "  p" << i + 1 << ':';
    for (const auto& c : players[i].pop.members) pops_ << ' ' << c.to_string();
    pops_ << '\n';
  }
}

TraceData read_trace(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open trace file: " + file.string());

  std::map<std::string, std::string, std::less<>> kv;
  std::string line;
  bool have_columns = false;
  TraceData data;

  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ls(line.substr(1));
      std::string tok;
      while (ls >> tok) {
        const auto eq = tok.find('=');
        if (eq != std::string::npos)
          kv[tok.substr(0, eq)] = tok.substr(eq + 1);
      }
      continue;
    }
    if (!have_columns) {
      have_columns = true;  // column header row
      continue;
    }
    const auto f = split(line, ',');
    if (f.size() < 7)
      throw std::invalid_argument("trace row too short: " + line);
    GenerationTrace g;
    g.generation = parse_ll(f[0]);
    g.lumped_state = static_cast<int>(parse_ll(f[1]));
    g.eq_games = static_cast<int>(parse_ll(f[2]));
    g.games = static_cast<int>(parse_ll(f[3]));
    g.mean_q = parse_double(f[4]);
    g.ssd_q = parse_double(f[5]);
    const auto players = static_cast<Eigen::Index>(f.size()) - 7;
    g.player_mean_q.resize(players);
    for (Eigen::Index i = 0; i < players; ++i)
      g.player_mean_q[i] = parse_double(f[6 + static_cast<std::size_t>(i)]);
    g.pop_hash = parse_hex64(f.back());
    data.gens.push_back(std::move(g));
  }

  const auto need = [&kv](std::string_view key) -> const std::string& {
    const auto it = kv.find(key);
    if (it == kv.end())
      throw std::invalid_argument("trace header missing key: " + std::string(key));
    return it->second;
  };

  RunHeader& h = data.header;
  h.model_label = need("model");
  h.model.demand.kind = demand_kind_from_string(need("demand"));
  h.model.demand.a = parse_double(need("a"));
  h.model.demand.b = parse_double(need("b"));
  h.model.cost.x = parse_double(need("x"));
  h.model.cost.y = parse_double(need("y"));
  h.model.n = static_cast<int>(parse_ll(need("players")));
  h.params.model_id = h.model_label;
  h.params.kind = algorithm_from_string(need("algorithm"));
  h.params.population_size = static_cast<int>(parse_ll(need("pop")));
  h.params.bits = static_cast<int>(parse_ll(need("bits")));
  h.params.p_mut = parse_double(need("p_mut"));
  h.params.p_cross = parse_double(need("p_cross"));
  h.params.ga_rate = static_cast<int>(parse_ll(need("ga_rate")));
  h.params.generations = parse_ll(need("generations"));
  h.params.seed = parse_u64(need("seed"));
  h.params.init = init_mode_from_string(need("init"));
  h.q_hat = parse_double(need("q_hat"));
  h.q_max = parse_double(need("q_max"));
  h.initial_state = static_cast<int>(parse_ll(need("state")));
  h.initial_hash = parse_hex64(need("hash"));

  if (data.gens.empty())
    throw std::invalid_argument("trace has no generation rows: " + file.string());
  return data;
}

nlohmann::ordered_json run_stats_json(const RunHeader& h, const ChainStats& chain,
                                      const RunQuantityStats& quant,
                                      std::uint64_t final_hash) {
  nlohmann::ordered_json j;
  j["record"] = "coga-run-stats-1";
  j["rng"] = "mt19937_64";
  j["model"] = {{"id", h.model_label},
                {"demand", to_string(h.model.demand.kind)},
                {"a", h.model.demand.a},
                {"b", h.model.demand.b},
                {"x", h.model.cost.x},
                {"y", h.model.cost.y},
                {"players", h.model.n}};
  j["params"] = {{"algorithm", to_string(h.params.kind)},
                 {"pop", h.params.population_size},
                 {"bits", h.params.bits},
                 {"p_mut", h.params.p_mut},
                 {"p_cross", h.params.p_cross},
                 {"ga_rate", h.params.ga_rate},
                 {"generations", h.params.generations},
                 {"seed", h.params.seed},
                 {"init", to_string(h.params.init)}};
  j["q_hat"] = h.q_hat;
  j["q_max"] = h.q_max;
  j["initial"] = {{"state", h.initial_state}, {"hash", hex64(h.initial_hash)}};

  nlohmann::ordered_json chain_j;
  chain_j["state_counts"] = std::vector<int>(
      chain.state_counts.data(), chain.state_counts.data() + chain.state_counts.size());
  chain_j["frequencies"] = std::vector<double>(
      chain.frequencies.data(), chain.frequencies.data() + chain.frequencies.size());
  if (chain.gens_to_eq)
    chain_j["gens_to_eq"] = *chain.gens_to_eq;
  else
    chain_j["gens_to_eq"] = nullptr;
  chain_j["censored"] = !chain.gens_to_eq.has_value();
  chain_j["s0_visits"] = chain.s0_visits;
  {
    nlohmann::ordered_json ia;
    ia["count"] = chain.interarrival.size();
    if (chain.interarrival.empty()) {
      ia["mean"] = nullptr;
      ia["max"] = nullptr;
    } else {
      double sum = 0.0;
      long mx = 0;
      for (long g : chain.interarrival) {
        sum += static_cast<double>(g);
        mx = std::max(mx, g);
      }
      ia["mean"] = sum / static_cast<double>(chain.interarrival.size());
      ia["max"] = mx;
    }
    chain_j["interarrival"] = ia;
  }
  chain_j["games"] = chain.games;
  chain_j["eq_games"] = chain.eq_games;
  chain_j["eq_fraction"] = chain.eq_fraction;
  chain_j["eq_fraction_after_first"] =
      std::isnan(chain.eq_fraction_after_first)
          ? nlohmann::ordered_json(nullptr)
          : nlohmann::ordered_json(chain.eq_fraction_after_first);
  j["chain"] = chain_j;

  j["quantities"] = {
      {"games", quant.games},
      {"grand_mean", quant.grand_mean_q},
      {"std_game_mean", quant.std_game_mean_q},
      {"per_player",
       std::vector<double>(quant.per_player_mean_q.data(),
                           quant.per_player_mean_q.data() +
                               quant.per_player_mean_q.size())}};
  j["final_hash"] = hex64(final_hash);
  return j;
}

}  // namespace coga
