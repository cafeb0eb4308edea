#ifndef COGA_MARKET_HPP
#define COGA_MARKET_HPP

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace coga {

enum class DemandKind { Linear, Polynomial, Radical };

const char* to_string(DemandKind kind);
DemandKind demand_kind_from_string(const std::string& s);

// Inverse demand P(Q).
//   Linear:      P = a - b*Q
//   Polynomial:  P = a*Q^3 + b
//   Radical:     P = a*Q^(3/2) + b
struct DemandSpec {
  DemandKind kind = DemandKind::Linear;
  double a = 0.0;
  double b = 0.0;
};

// Cost of producing q units: c(q) = x*q + y.
struct CostSpec {
  double x = 0.0;
  double y = 0.0;
};

// A symmetric n-player quantity-setting market.
struct MarketModel {
  DemandSpec demand;
  CostSpec cost;
  int n = 0;

  bool operator==(const MarketModel&) const = default;
};

double price(const MarketModel& m, double total_quantity);

// dP/dQ at the given industry quantity; used by the equilibrium condition.
double price_slope(const MarketModel& m, double total_quantity);

// Profit of one player producing `own` when the industry total is `total`.
double profit(const MarketModel& m, double own, double total);

// Profit at an already-computed market price; lets game loops price once.
double profit_at_price(const MarketModel& m, double own, double price);

struct GameOutcome {
  Eigen::VectorXd quantities;
  double total_quantity = 0.0;
  double price = 0.0;
  Eigen::VectorXd profits;
};

// One simultaneous-move game. `quantities` must have length m.n.
GameOutcome play_game(const MarketModel& m,
                      const Eigen::Ref<const Eigen::VectorXd>& quantities);

struct BestResponse {
  double quantity = 0.0;
  // True when the maximizer is pinned to an end of the search interval,
  // which signals degenerate model parameters rather than an interior optimum.
  bool on_boundary = false;
};

// Profit-maximizing quantity against a fixed opponent total, by golden-section
// search over [0, Q0 - opponents_total] where Q0 is the price zero crossing.
// Ties resolve toward the smaller quantity.
BestResponse best_response(const MarketModel& m, double opponents_total,
                           double tol = 1e-6);

struct NashSolution {
  double q_hat = 0.0;
  double residual = 0.0;  // marginal profit at q_hat, should be ~0
};

// Symmetric equilibrium quantity: root of P(n q) + q P'(n q) - x in q > 0,
// bracketed by doubling from `hi0` and then bisected to `tol`. Throws
// std::runtime_error when no sign change exists (degenerate parameters).
NashSolution symmetric_nash(const MarketModel& m, double tol = 1e-6,
                            double hi0 = 1.0);

// Checks the first-order condition at q and that q beats a grid of
// unilateral deviations. Both routes must agree for a true equilibrium.
bool verify_nash_candidate(const MarketModel& m, double q, double tol = 1e-3);

struct ModelCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Numeric screens for the assumptions behind the equilibrium analysis:
// downward-sloping demand over the relevant range, increasing cost, and
// monopoly profit that eventually turns negative. A failed check means the
// model is outside the supported class, not that the code malfunctioned.
std::vector<ModelCheck> validate_model_assumptions(const MarketModel& m);

// Built-in study markets: linear4 linear20 poly4 poly20 radical4 radical20.
MarketModel catalogue_model(const std::string& id);
const std::vector<std::string>& catalogue_ids();

}  // namespace coga

#endif
