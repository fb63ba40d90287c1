#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>

#include "banditlab/common.hpp"
#include "banditlab/regularizers.hpp"

// FTRL iterate solvers: x_t = argmin_{x in K} eta * <cum_loss, x> + Phi(x)
// on the simplex (hybrid regularizer) and on the l_p ball (gap barrier),
// plus the Be-The-Leader audit and the iterate-stability certificate.

namespace banditlab {

struct FtrlState {
  Vec cum_loss;  // sum of loss estimates seen so far
  long t = 1;    // 1-based round index
  double eta = 0.0;

  FtrlState(int n, double eta_) : cum_loss(static_cast<std::size_t>(n), 0.0), eta(eta_) {
    if (!(eta > 0.0)) throw std::invalid_argument("FtrlState: eta must be > 0");
  }
};

// Warm-start hints carried between consecutive argmin calls of one episode.
struct SimplexWarm {
  std::optional<double> lambda;
  double last_step = 0.25;  // |lambda change| of the previous solve
  Vec log_x;                // per-coordinate seeds for the inner scalar solves
};

namespace detail {

// Solves log x - gamma / x = c for x > 0 in log space: f(y) = y - gamma e^{-y} - c
// with f' = 1 + gamma e^{-y} >= 1. f is increasing and concave, so from any
// start one Newton step lands left of the root and the iteration then
// increases monotonically; convergence is global.
inline double hybrid_inner_root(double c, double gamma, double y0) {
  if (gamma == 0.0) return c;
  double y = y0;
  for (int it = 0; it < 100; ++it) {
    double b = gamma * std::exp(-y);
    double f = y - b - c;
    // Cancellation floor: near the root |f| cannot resolve below
    // eps * (|y| + b + |c|), so the 1e-12 target is scale-aware.
    double tol = 1e-12 * std::max(1.0, std::abs(c)) +
                 8.0 * std::numeric_limits<double>::epsilon() * (std::abs(y) + b);
    if (std::abs(f) <= tol) return y;
    y -= f / (1.0 + b);
  }
  throw NumericError("hybrid_inner_root: no convergence at c=" + std::to_string(c));
}

inline double hybrid_inner_start(double c, double gamma) {
  if (gamma == 0.0 || c >= 0.0) return c;
  // For very negative c the root sits near log(gamma / -c).
  return std::max(c, std::log(gamma) - std::log1p(-c));
}

}  // namespace detail

// FTRL iterate on the simplex with the hybrid regularizer. KKT system:
// eta L_i + 1 + log x_i - gamma / x_i = lambda with sum x_i = 1; the map
// lambda -> sum x_i(lambda) is strictly increasing, so the outer search is a
// monotone bisection. `warm`, when given, seeds the bracket and the inner
// solves with the previous round's solution.
inline SimplexPoint simplex_argmin(std::span<const double> cum_loss, double eta,
                                   const HybridParams& params,
                                   SimplexWarm* warm = nullptr) {
  const std::size_t n = cum_loss.size();
  if (n == 0) throw std::invalid_argument("simplex_argmin: empty loss vector");
  if (!(eta > 0.0)) throw std::invalid_argument("simplex_argmin: eta must be > 0");
  if (!(params.gamma > 0.0))
    throw std::invalid_argument("simplex_argmin: gamma must be > 0");
  require_finite(cum_loss, "simplex_argmin");
  const double gamma = params.gamma;

  double lmin = std::numeric_limits<double>::infinity();
  double lmax = -lmin;
  for (double L : cum_loss) {
    lmin = std::min(lmin, eta * L);
    lmax = std::max(lmax, eta * L);
  }
  // A-priori bracket: at lambda_lo every coordinate is <= 1/n, at lambda_hi
  // every coordinate is >= 1.
  const double lambda_lo_default = lmin + 1.0 + std::log(1.0 / static_cast<double>(n)) -
                                   gamma * static_cast<double>(n);
  const double lambda_hi_default = lmax + 1.0 + gamma + 1.0;

  Vec log_x(n);
  bool seeded = warm && warm->log_x.size() == n;
  auto sum_at = [&](double lambda) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double c = lambda - 1.0 - eta * cum_loss[i];
      double y0 = seeded ? log_x[i] : detail::hybrid_inner_start(c, gamma);
      log_x[i] = detail::hybrid_inner_root(c, gamma, y0);
      s += std::exp(log_x[i]);
    }
    seeded = true;
    return s;
  };

  double lo = lambda_lo_default, hi = lambda_hi_default;
  if (warm && warm->lambda) {
    // Try a tight bracket around the previous multiplier first; consecutive
    // iterates are close, so sizing it from the previous step usually works.
    double w = std::clamp(4.0 * warm->last_step, 1e-9, 0.25);
    while (w < (lambda_hi_default - lambda_lo_default)) {
      lo = std::max(*warm->lambda - w, lambda_lo_default);
      hi = std::min(*warm->lambda + w, lambda_hi_default);
      if (sum_at(lo) <= 1.0 && sum_at(hi) >= 1.0) break;
      w *= 8.0;
      lo = lambda_lo_default;
      hi = lambda_hi_default;
    }
  }
  {
    // The bracket must straddle sum = 1 before bisecting; widen if not.
    int guard = 0;
    while (sum_at(lo) > 1.0) {
      lo -= std::max(1.0, hi - lo);
      if (++guard > 60) throw NumericError("simplex_argmin: no lower bracket");
    }
    guard = 0;
    while (sum_at(hi) < 1.0) {
      hi += std::max(1.0, hi - lo);
      if (++guard > 60) throw NumericError("simplex_argmin: no upper bracket");
    }
  }

  double lambda = 0.5 * (lo + hi);
  double s = sum_at(lambda);
  int it = 0;
  while (std::abs(s - 1.0) > 1e-12) {
    if (++it > 200) {
      std::ostringstream msg;
      msg << "simplex_argmin: outer bisection cap hit (n=" << n << ", eta=" << eta
          << ", gamma=" << gamma << ", residual=" << s - 1.0 << ")";
      throw NumericError(msg.str());
    }
    (s < 1.0 ? lo : hi) = lambda;
    double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;  // lambda resolved to adjacent doubles
    lambda = mid;
    s = sum_at(lambda);
  }
  // On bracket exhaustion the residual must still be within the simplex
  // tolerance; the closing renormalization absorbs it.
  if (std::abs(s - 1.0) > 1e-9)
    throw NumericError("simplex_argmin: residual " + std::to_string(s - 1.0) +
                       " after exhausting lambda precision");

  Vec x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = std::exp(log_x[i]);
  // Renormalize the 1e-12 residual away so downstream sums are clean.
  double total = sum(x);
  for (double& v : x) v /= total;
  if (warm) {
    if (warm->lambda) warm->last_step = std::abs(lambda - *warm->lambda);
    warm->lambda = lambda;
    warm->log_x = log_x;
  }
  return SimplexPoint(std::move(x));
}

// FTRL iterate on the l_p ball. The gap barrier diverges at the boundary, so
// the constrained argmin is the interior stationary point grad Phi = -eta L.
inline BallPoint ball_argmin(std::span<const double> cum_loss, double eta,
                             const LpParams& params) {
  if (!(eta > 0.0)) throw std::invalid_argument("ball_argmin: eta must be > 0");
  Vec v(cum_loss.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = -eta * cum_loss[i];
  return lp_grad_inverse(v, params);
}

// ---------------------------------------------------------------------------
// Be-The-Leader audit
// ---------------------------------------------------------------------------

struct AuditRecord {
  double lhs;    // sum_t <l_t, x_t - x*>
  double rhs;    // (Phi(x*) - Phi(x_1)) / eta + sum_t <l_t, x_t - x_{t+1}>
  double slack;  // rhs - lhs, >= -1e-6 when iterates come from exact argmins
};

// Checks the per-run regret identity for iterates produced by FTRL.
// `iterates` must hold T+1 points (including the one-past-the-end iterate);
// `phi` evaluates the regularizer.
inline AuditRecord be_the_leader_audit(const std::vector<Vec>& losses,
                                       const std::vector<Vec>& iterates, double eta,
                                       const std::function<double(const Vec&)>& phi,
                                       const Vec& comparator) {
  const std::size_t T = losses.size();
  if (iterates.size() != T + 1)
    throw std::invalid_argument("be_the_leader_audit: need T+1 iterates");
  double lhs = 0.0, path = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    lhs += dot(losses[t], iterates[t]) - dot(losses[t], comparator);
    path += dot(losses[t], iterates[t]) - dot(losses[t], iterates[t + 1]);
  }
  double rhs = (phi(comparator) - phi(iterates[0])) / eta + path;
  return AuditRecord{lhs, rhs, rhs - lhs};
}

// max_i max(x'_i / x_i, x_i / x'_i). A ratio bound r certifies Hessian
// comparability Hess Phi(x) <= r^2 Hess Phi(y) along the segment [x, x'] for
// the hybrid regularizer.
inline double conditioning_ratio(const SimplexPoint& x, const SimplexPoint& x_next) {
  if (x.size() != x_next.size())
    throw std::invalid_argument("conditioning_ratio: size mismatch");
  double r = 1.0;
  for (int i = 0; i < x.size(); ++i) {
    double a = x[i], b = x_next[i];
    r = std::max(r, std::max(a / b, b / a));
  }
  return r;
}

}  // namespace banditlab
