#ifndef COGA_TRACE_IO_HPP
#define COGA_TRACE_IO_HPP

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "coga/markov.hpp"
#include "coga/sim.hpp"
#include "coga/stats.hpp"

namespace coga {

// Shortest representation that parses back to the identical double.
std::string format_double(double v);
double parse_double(std::string_view s);

// Everything a trace file records about the run besides the rows themselves.
struct RunHeader {
  SimulationParams params;
  std::string model_label;  // catalogue id, or "custom"
  MarketModel model;
  double q_hat = 0.0;
  double q_max = 0.0;
  int initial_state = 0;
  std::uint64_t initial_hash = 0;
};

RunHeader make_run_header(const RunResult& run, const std::string& model_label,
                          const MarketModel& model);

struct TraceData {
  RunHeader header;
  std::vector<GenerationTrace> gens;
};

// Writes one CSV row per generation, preceded by `# key=value` header lines.
// Numbers survive a write/read round trip bit for bit. Optionally writes
// game-level rows and population snapshots to sibling files that share the
// trace's stem (run_000.trace.games.csv, run_000.trace.pops.txt).
class CsvTraceSink final : public TraceSink {
 public:
  explicit CsvTraceSink(const std::filesystem::path& file,
                        bool with_games = false, bool with_populations = false);

  void on_run_start(const SimulationParams& p, const SimContext& ctx,
                    int initial_state, std::uint64_t initial_hash) override;
  void on_generation(const GenerationTrace& g) override;
  bool wants_games() const override { return games_.is_open(); }
  void on_game(const GameRecord& g) override;
  bool wants_populations() const override { return pops_.is_open(); }
  void on_populations(long generation,
                      const std::vector<PlayerState>& players) override;

  void set_model_label(const std::string& label) { model_label_ = label; }

 private:
  std::ofstream out_;
  std::ofstream games_;
  std::ofstream pops_;
  std::string model_label_ = "custom";
  int players_ = 0;
};

TraceData read_trace(const std::filesystem::path& file);

// Canonical per-run stats record. Rebuilding this from the written trace
// reproduces it byte for byte.
nlohmann::ordered_json run_stats_json(const RunHeader& header,
                                      const ChainStats& chain,
                                      const RunQuantityStats& quant,
                                      std::uint64_t final_hash);

}  // namespace coga

#endif
