#include "coga/market.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

namespace coga {

const char* to_string(DemandKind kind) {
  switch (kind) {
    case DemandKind::Linear: return "linear";
    case DemandKind::Polynomial: return "polynomial";
    case DemandKind::Radical: return "radical";
  }
  return "?";
}

DemandKind demand_kind_from_string(const std::string& s) {
  if (s == "linear") return DemandKind::Linear;
  if (s == "polynomial") return DemandKind::Polynomial;
  if (s == "radical") return DemandKind::Radical;
  throw std::invalid_argument("unknown demand kind: " + s);
}

double price(const MarketModel& m, double q) {
  switch (m.demand.kind) {
    case DemandKind::Linear: return m.demand.a - m.demand.b * q;
    case DemandKind::Polynomial: return m.demand.a * q * q * q + m.demand.b;
    case DemandKind::Radical: return m.demand.a * q * std::sqrt(q) + m.demand.b;
  }
  return 0.0;
}

double price_slope(const MarketModel& m, double q) {
  switch (m.demand.kind) {
    case DemandKind::Linear: return -m.demand.b;
    case DemandKind::Polynomial: return 3.0 * m.demand.a * q * q;
    case DemandKind::Radical: return 1.5 * m.demand.a * std::sqrt(q);
  }
  return 0.0;
}

double profit_at_price(const MarketModel& m, double own, double p) {
  return p * own - (m.cost.x * own + m.cost.y);
}

double profit(const MarketModel& m, double own, double total) {
  return profit_at_price(m, own, price(m, total));
}

GameOutcome play_game(const MarketModel& m,
                      const Eigen::Ref<const Eigen::VectorXd>& quantities) {
  if (quantities.size() != m.n)
    throw std::invalid_argument("play_game: expected one quantity per player");
  GameOutcome out;
  out.quantities = quantities;
  out.total_quantity = quantities.sum();
  out.price = price(m, out.total_quantity);
  out.profits.resize(m.n);
  for (int i = 0; i < m.n; ++i)
    out.profits[i] = profit(m, quantities[i], out.total_quantity);
  return out;
}

namespace {

// Industry quantity where the price crosses zero, if it does below the cap.
std::optional<double> price_zero_crossing(const MarketModel& m) {
  if (price(m, 0.0) <= 0.0) return 0.0;
  double hi = 1.0;
  const double cap = 1e12;
  while (price(m, hi) > 0.0) {
    hi *= 2.0;
    if (hi > cap) return std::nullopt;
  }
  double lo = hi / 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-9 * (1.0 + hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    (price(m, mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double marginal_profit(const MarketModel& m, int n, double q) {
  const double total = n * q;
  return price(m, total) + q * price_slope(m, total) - m.cost.x;
}

}  // namespace

BestResponse best_response(const MarketModel& m, double opponents_total,
                           double tol) {
  if (opponents_total < 0.0)
    throw std::invalid_argument("best_response: negative opponent quantity");
  if (tol <= 0.0) throw std::invalid_argument("best_response: tol must be > 0");

  const auto crossing = price_zero_crossing(m);
  double hi = crossing ? std::max(0.0, *crossing - opponents_total) : 1e12;
  if (hi <= 0.0) return {0.0, true};

  const auto f = [&](double q) { return profit(m, q, q + opponents_total); };

  // Golden-section over [0, hi]; ties resolve toward the smaller quantity.
  const double invphi = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = 0.0, b = hi;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = f(d);
    }
  }
  double q = 0.5 * (a + b);
  // The interior search never sees the exact endpoints, so compare them.
  if (f(0.0) >= f(q)) q = 0.0;
  else if (f(hi) > f(q)) q = hi;
  const bool boundary = q <= tol || q >= hi - tol;
  return {q, boundary};
}

NashSolution symmetric_nash(const MarketModel& m, double tol, double hi0) {
  if (m.n < 1) throw std::invalid_argument("symmetric_nash: need n >= 1");
  if (tol <= 0.0) throw std::invalid_argument("symmetric_nash: tol must be > 0");
  if (marginal_profit(m, m.n, 0.0) <= 0.0)
    throw std::runtime_error(
        "symmetric_nash: marginal profit non-positive at q=0; "
        "model parameters admit no interior equilibrium");

  double lo = 0.0, hi = std::max(hi0, tol);
  int doublings = 0;
  while (marginal_profit(m, m.n, hi) > 0.0) {
    lo = hi;
    hi *= 2.0;
    if (++doublings > 80)
      throw std::runtime_error(
          "symmetric_nash: no sign change found; model parameters admit no "
          "interior equilibrium");
  }
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    (marginal_profit(m, m.n, mid) > 0.0 ? lo : hi) = mid;
  }
  const double q = 0.5 * (lo + hi);
  return {q, marginal_profit(m, m.n, q)};
}

bool verify_nash_candidate(const MarketModel& m, double q, double tol) {
  if (q < 0.0) return false;
  // Route 1: first-order condition, scaled to be unit-free.
  const double scale =
      std::max({std::abs(price(m, m.n * q)), std::abs(m.cost.x), 1.0});
  if (std::abs(marginal_profit(m, m.n, q)) > tol * scale) return false;

  // Route 2: no unilateral deviation on a grid around q may beat q by more
  // than a tolerance proportional to the profit scale.
  const double opponents = (m.n - 1) * q;
  const double base = profit(m, q, m.n * q);
  const double pscale = std::max(std::abs(base), 1.0);
  for (int k = -40; k <= 40; ++k) {
    const double dev = q * (1.0 + 0.05 * k);
    if (dev < 0.0) continue;
    if (profit(m, dev, dev + opponents) > base + tol * pscale) return false;
  }
  return true;
}

std::vector<ModelCheck> validate_model_assumptions(const MarketModel& m) {
  std::vector<ModelCheck> out;

  // Demand slopes down wherever the price is positive, sampled out to twice
  // the zero crossing (or a wide cap when the price never crosses zero).
  {
    const auto crossing = price_zero_crossing(m);
    const double reach = crossing && *crossing > 0.0 ? 2.0 * *crossing : 1e6;
    bool ok = price(m, 0.0) > 0.0;
    std::string detail = ok ? "" : "price at Q=0 is not positive";
    const int grid = 400;
    double prev = price(m, 0.0);
    for (int k = 1; ok && k <= grid; ++k) {
      const double qk = reach * k / grid;
      const double pk = price(m, qk);
      if (prev > 0.0 && pk >= prev) {
        ok = false;
        detail = "price not strictly decreasing near Q=" + std::to_string(qk);
      }
      prev = pk;
    }
    out.push_back({"demand slopes down", ok, detail});
  }

  {
    const bool ok = m.cost.x > 0.0;
    out.push_back({"cost strictly increasing", ok,
                   ok ? "" : "marginal cost x must be > 0"});
  }

  // A monopolist's profit must eventually go negative as q grows; otherwise
  // profit is unbounded and no interior optimum exists.
  {
    bool ok = false;
    double q = 1.0;
    for (int it = 0; it < 60; ++it, q *= 2.0) {
      if (profit(m, q, q) < 0.0) {
        ok = true;
        break;
      }
    }
    out.push_back({"monopoly profit eventually negative", ok,
                   ok ? "" : "profit still non-negative at q=2^60"});
  }
  return out;
}

MarketModel catalogue_model(const std::string& id) {
  const double poly_b = 7.36e7 + 10.0;
  if (id == "linear4")
    return {{DemandKind::Linear, 256.0, 1.0}, {56.0, 0.0}, 4};
  if (id == "linear20")
    return {{DemandKind::Linear, 256.0, 1.0}, {56.0, 0.0}, 20};
  if (id == "poly4")
    return {{DemandKind::Polynomial, -1.0, poly_b}, {10.0, 10.0}, 4};
  if (id == "poly20")
    return {{DemandKind::Polynomial, -1.0, poly_b}, {10.0, 10.0}, 20};
  if (id == "radical4")
    return {{DemandKind::Radical, -1.0, 8300.0}, {100.0, 10.0}, 4};
  if (id == "radical20")
    return {{DemandKind::Radical, -1.0, 8300.0}, {100.0, 10.0}, 20};
  throw std::invalid_argument("unknown model id: " + id);
}

const std::vector<std::string>& catalogue_ids() {
  static const std::vector<std::string> ids = {
      "linear4", "linear20", "poly4", "poly20", "radical4", "radical20"};
  return ids;
}

}  // namespace coga
