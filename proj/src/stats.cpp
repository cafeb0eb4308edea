#include "coga/stats.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace coga {

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw std::invalid_argument("normal_quantile: p must be in (0, 1)");

  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425, phigh = 1.0 - plow;

  if (p < plow) {
    const double u = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * u + c[1]) * u + c[2]) * u + c[3]) * u + c[4]) * u + c[5]) /
           ((((d[0] * u + d[1]) * u + d[2]) * u + d[3]) * u + 1.0);
  }
  if (p > phigh) {
    const double u = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * u + c[1]) * u + c[2]) * u + c[3]) * u + c[4]) * u + c[5]) /
           ((((d[0] * u + d[1]) * u + d[2]) * u + d[3]) * u + 1.0);
  }
  const double u = p - 0.5, r = u * u;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * u /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

double student_t_quantile(double p, long df) {
  if (!(p > 0.0 && p < 1.0))
    throw std::invalid_argument("student_t_quantile: p must be in (0, 1)");
  if (df < 1) throw std::invalid_argument("student_t_quantile: df must be >= 1");

  if (df == 1) return std::tan(std::numbers::pi * (p - 0.5));
  if (df == 2) {
    const double s = 2.0 * p - 1.0;
    return s * std::sqrt(2.0 / (1.0 - s * s));
  }
  const double z = normal_quantile(p);
  const double v = static_cast<double>(df);
  const double z3 = z * z * z, z5 = z3 * z * z, z7 = z5 * z * z, z9 = z7 * z * z;
  return z + (z3 + z) / (4.0 * v) +
         (5.0 * z5 + 16.0 * z3 + 3.0 * z) / (96.0 * v * v) +
         (3.0 * z7 + 19.0 * z5 + 17.0 * z3 - 15.0 * z) / (384.0 * v * v * v) +
         (79.0 * z9 + 776.0 * z7 + 1482.0 * z5 - 1920.0 * z3 - 945.0 * z) /
             (92160.0 * v * v * v * v);
}

double critical_value(double alpha, long df) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("critical_value: alpha must be in (0, 1)");
  const double p = 1.0 - alpha / 2.0;
  return df >= 50 ? normal_quantile(p) : student_t_quantile(p, df);
}

RunQuantityStats quantity_stats(const std::vector<GenerationTrace>& gens,
                                int players, double q_ref) {
  if (gens.empty()) throw std::invalid_argument("quantity_stats: empty trace");
  if (players < 1)
    throw std::invalid_argument("quantity_stats: players must be >= 1");

  RunQuantityStats out;
  out.per_player_mean_q = Eigen::VectorXd::Zero(players);
  out.per_gen_mean_q.reserve(gens.size());

  double sum_mean = 0.0, sum_ssd = 0.0;
  for (const auto& g : gens) {
    if (g.games <= 0)
      throw std::invalid_argument("quantity_stats: generation without games");
    if (g.player_mean_q.size() != players)
      throw std::invalid_argument("quantity_stats: player count mismatch");
    const auto w = static_cast<double>(g.games);
    out.games += g.games;
    sum_mean += g.mean_q * w;
    sum_ssd += g.ssd_q;
    out.per_player_mean_q += w * g.player_mean_q;
    out.per_gen_mean_q.push_back(g.mean_q);
  }

  const auto N = static_cast<double>(out.games);
  out.grand_mean_q = sum_mean / N;
  out.per_player_mean_q /= N;

  if (out.games > 1) {
    // ssd_q holds squared deviations from q_ref; shift to the sample mean.
    const double shift = out.grand_mean_q - q_ref;
    const double var =
        std::max(0.0, (sum_ssd - N * shift * shift) / (N - 1.0));
    out.std_game_mean_q = std::sqrt(var);
  }
  return out;
}

TestVerdict one_sample_mean_test(const std::vector<double>& sample,
                                 double target, double alpha) {
  if (sample.size() < 2)
    throw std::invalid_argument("one_sample_mean_test: need at least 2 values");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("one_sample_mean_test: alpha must be in (0, 1)");

  TestVerdict v;
  v.alpha = alpha;
  v.sample_size = static_cast<long>(sample.size());
  const auto n = static_cast<double>(sample.size());

  double sum = 0.0;
  for (double x : sample) sum += x;
  v.sample_mean = sum / n;
  double ss = 0.0;
  for (double x : sample) ss += (x - v.sample_mean) * (x - v.sample_mean);
  v.sample_sd = std::sqrt(ss / (n - 1.0));

  v.critical = critical_value(alpha, v.sample_size - 1);
  if (v.sample_sd == 0.0) {
    // Degenerate sample: every value identical, decide by exact comparison.
    v.statistic = v.sample_mean == target
                      ? 0.0
                      : std::numeric_limits<double>::infinity();
    v.accepted = v.sample_mean == target;
    return v;
  }
  v.statistic = (v.sample_mean - target) / (v.sample_sd / std::sqrt(n));
  v.accepted = std::abs(v.statistic) <= v.critical;
  return v;
}

TestVerdict player_series_test(const std::vector<GenerationTrace>& gens,
                               int player, double target, double alpha) {
  if (gens.empty())
    throw std::invalid_argument("player_series_test: empty trace");
  std::vector<double> sample;
  sample.reserve(gens.size());
  for (const auto& g : gens) {
    if (player < 0 || player >= g.player_mean_q.size())
      throw std::invalid_argument("player_series_test: player out of range");
    sample.push_back(g.player_mean_q[player]);
  }
  return one_sample_mean_test(sample, target, alpha);
}

TestVerdict mean_series_test(const std::vector<GenerationTrace>& gens,
                             double target, double alpha) {
  if (gens.empty()) throw std::invalid_argument("mean_series_test: empty trace");
  std::vector<double> sample;
  sample.reserve(gens.size());
  for (const auto& g : gens) sample.push_back(g.mean_q);
  return one_sample_mean_test(sample, target, alpha);
}

BatchVerdicts batch_verdicts(const std::vector<RunQuantityStats>& runs,
                             double q_hat, double alpha) {
  if (runs.size() < 2)
    throw std::invalid_argument("batch_verdicts: need at least 2 runs");
  const auto players = runs.front().per_player_mean_q.size();
  for (const auto& r : runs)
    if (r.per_player_mean_q.size() != players)
      throw std::invalid_argument("batch_verdicts: runs mix player counts");

  BatchVerdicts out;
  std::vector<double> sample(runs.size());
  for (std::size_t i = 0; i < runs.size(); ++i)
    sample[i] = runs[i].grand_mean_q;
  out.grand = one_sample_mean_test(sample, q_hat, alpha);

  out.per_player.reserve(static_cast<std::size_t>(players));
  for (Eigen::Index j = 0; j < players; ++j) {
    for (std::size_t i = 0; i < runs.size(); ++i)
      sample[i] = runs[i].per_player_mean_q[j];
    out.per_player.push_back(one_sample_mean_test(sample, q_hat, alpha));
  }
  return out;
}

}  // namespace coga
