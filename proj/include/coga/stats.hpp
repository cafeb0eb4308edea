#ifndef COGA_STATS_HPP
#define COGA_STATS_HPP

#include <Eigen/Dense>

#include <vector>

#include "coga/sim.hpp"

namespace coga {

// Two-sided quantile of the standard normal (Acklam's rational approximation,
// relative error below 1.2e-9).
double normal_quantile(double p);

// Two-sided quantile of Student's t. Exact closed forms for 1 and 2 degrees
// of freedom, a Cornish-Fisher expansion above that (absolute error below
// 4e-3 at df=3, shrinking fast with df).
double student_t_quantile(double p, long df);

// Critical value for a two-sided test at level alpha: normal quantile for
// 50+ degrees of freedom, Student's t below.
double critical_value(double alpha, long df);

// Per-run quantity summaries over a trace.
struct RunQuantityStats {
  double grand_mean_q = 0.0;            // mean quantity over all games and players
  double std_game_mean_q = 0.0;         // sample std of the per-game mean quantity
  Eigen::VectorXd per_player_mean_q;    // mean quantity per player
  std::vector<double> per_gen_mean_q;   // per-generation mean quantity series
  long long games = 0;
};

// q_ref must be the same reference quantity the trace's ssd_q column was
// accumulated against (the run's equilibrium quantity).
RunQuantityStats quantity_stats(const std::vector<GenerationTrace>& gens,
                                int players, double q_ref);

struct TestVerdict {
  double statistic = 0.0;
  double critical = 0.0;
  bool accepted = false;  // true when the sample mean is consistent with target
  double alpha = 0.0;
  double sample_mean = 0.0;
  double sample_sd = 0.0;
  long sample_size = 0;
};

// Two-sided one-sample t test of H0: mean == target. A zero-variance sample
// is decided by exact comparison of the mean against the target.
TestVerdict one_sample_mean_test(const std::vector<double>& sample,
                                 double target, double alpha = 0.05);

// Across-run verdicts for a batch sharing one parameter set: the grand means
// tested against the equilibrium quantity, and each player position's mean
// tested the same way.
struct BatchVerdicts {
  TestVerdict grand;
  std::vector<TestVerdict> per_player;
};

BatchVerdicts batch_verdicts(const std::vector<RunQuantityStats>& runs,
                             double q_hat, double alpha = 0.05);

// Within-run test of one player's per-generation mean-quantity series against
// a target. Large per-run samples give this test high power against a player
// that settled away from the target; serial correlation in the series makes
// it anticonservative, so treat acceptance as weak evidence and rejection as
// strong.
TestVerdict player_series_test(const std::vector<GenerationTrace>& gens,
                               int player, double target, double alpha = 0.05);

// Same, for the per-generation mean quantity across all players.
TestVerdict mean_series_test(const std::vector<GenerationTrace>& gens,
                             double target, double alpha = 0.05);

}  // namespace coga

#endif
