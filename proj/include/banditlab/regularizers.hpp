#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <utility>

#include "banditlab/common.hpp"

// Regularizers used by the FTRL solvers: the hybrid negentropy/log-barrier on
// the simplex and the gap barrier -log(1 - ||x||_p^p) on the l_p unit ball,
// together with closed-form gradients, Hessians, the Fenchel-dual gradient
// inversion for the ball, and dual local norms.

namespace banditlab {

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

// Smallest admissible simplex weight. The log-barrier keeps true minimizers
// interior, so the floor only guards against floating-point underflow.
inline constexpr double kSimplexFloor = 1e-300;

// Strictly positive probability vector. Entries are floored at kSimplexFloor
// and must sum to 1 within 1e-9.
class SimplexPoint {
 public:
  explicit SimplexPoint(Vec w) : w_(std::move(w)) {
    if (w_.empty()) throw std::invalid_argument("SimplexPoint: empty");
    double s = 0.0;
    for (double& v : w_) {
      if (!(v > 0.0)) throw std::domain_error("SimplexPoint: non-positive weight");
      if (v < kSimplexFloor) v = kSimplexFloor;
      s += v;
    }
    if (std::abs(s - 1.0) > 1e-9)
      throw std::domain_error("SimplexPoint: weights sum to " + std::to_string(s));
  }

  const Vec& weights() const { return w_; }
  int size() const { return static_cast<int>(w_.size()); }
  double operator[](int i) const { return w_[static_cast<std::size_t>(i)]; }

  static SimplexPoint uniform(int n) {
    return SimplexPoint(Vec(static_cast<std::size_t>(n), 1.0 / n));
  }

 private:
  Vec w_;
};

struct HybridParams {
  double gamma = 0.0;  // log-barrier weight; 0 recovers plain negentropy

  explicit HybridParams(double g) : gamma(g) {
    if (!(gamma >= 0.0) || !std::isfinite(gamma))
      throw std::invalid_argument("HybridParams: gamma must be >= 0");
  }
};

struct LpParams {
  double p;
  double q;  // conjugate exponent p/(p-1)

  static LpParams make(double p) {
    if (!(p > 1.0 && p <= 2.0))
      throw std::invalid_argument("LpParams: p must lie in (1, 2]");
    return LpParams{p, p / (p - 1.0)};
  }

  static LpParams make(double p, double q) {
    LpParams params = make(p);
    if (std::abs(q - params.q) > 1e-12)
      throw std::invalid_argument("LpParams: q inconsistent with p/(p-1)");
    return params;
  }
};

// Interior point of the l_p unit ball with its cached gap d(x) = 1-||x||_p^p.
class BallPoint {
 public:
  BallPoint(Vec coords, const LpParams& params) : x_(std::move(coords)) {
    double s = 0.0;
    for (double v : x_) s += std::pow(std::abs(v), params.p);
    gap_ = 1.0 - s;
    check_gap();
  }

  // Trusts a precomputed gap but verifies it against the coordinates.
  // The recomputed gap 1 - sum|x|^p carries absolute error of order
  // n*eps from the summation, hence the mixed tolerance.
  BallPoint(Vec coords, double gap, const LpParams& params)
      : x_(std::move(coords)), gap_(gap) {
    double s = 0.0;
    for (double v : x_) s += std::pow(std::abs(v), params.p);
    double recomputed = 1.0 - s;
    double tol = 1e-10 * std::abs(gap_) + 64.0 * static_cast<double>(x_.size()) *
                                              std::numeric_limits<double>::epsilon();
    if (std::abs(recomputed - gap_) > tol)
      throw std::domain_error("BallPoint: gap inconsistent with coords");
    check_gap();
  }

  const Vec& coords() const { return x_; }
  double gap() const { return gap_; }
  int size() const { return static_cast<int>(x_.size()); }
  double operator[](int i) const { return x_[static_cast<std::size_t>(i)]; }

  static BallPoint center(int n, const LpParams& params) {
    return BallPoint(Vec(static_cast<std::size_t>(n), 0.0), 1.0, params);
  }

 private:
  void check_gap() const {
    if (!(gap_ > 0.0 && gap_ <= 1.0))
      throw std::domain_error("BallPoint: point not strictly inside the ball");
  }

  Vec x_;
  double gap_;
};

// ---------------------------------------------------------------------------
// Hybrid regularizer  Phi(x) = sum x_i log x_i - gamma * sum log x_i
// ---------------------------------------------------------------------------

struct HybridEval {
  double value;
  Vec grad;       // 1 + log x_i - gamma / x_i
  Vec hess_diag;  // 1/x_i + gamma / x_i^2
};

inline double hybrid_value(std::span<const double> x, const HybridParams& params) {
  double v = 0.0;
  for (double xi : x) {
    if (!(xi > 0.0)) throw std::domain_error("hybrid regularizer: x must be positive");
    v += xi * std::log(xi) - params.gamma * std::log(xi);
  }
  return v;
}

inline HybridEval hybrid_eval(const SimplexPoint& x, const HybridParams& params) {
  const Vec& w = x.weights();
  HybridEval out;
  out.value = 0.0;
  out.grad.resize(w.size());
  out.hess_diag.resize(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    double xi = w[i];
    double lx = std::log(xi);
    out.value += xi * lx - params.gamma * lx;
    out.grad[i] = 1.0 + lx - params.gamma / xi;
    out.hess_diag[i] = 1.0 / xi + params.gamma / (xi * xi);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Gap barrier on the l_p ball  Phi(x) = -log d(x),  d(x) = 1 - ||x||_p^p
// ---------------------------------------------------------------------------

inline Vec lp_gradient(const BallPoint& x, const LpParams& params) {
  const Vec& c = x.coords();
  Vec g(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    double a = std::abs(c[i]);
    g[i] = params.p * std::copysign(std::pow(a, params.p - 1.0), c[i]) / x.gap();
  }
  return g;
}

// Hessian as an operator:
//   H h = p(p-1)/d * |x|^{p-2} (.) h  +  p^2/d^2 * (s.h) s,   s = sign(x)|x|^{p-1}.
// For p < 2 the diagonal factor diverges at x_i = 0; such coordinates are
// only admissible when h_i = 0 there (the limit contribution is zero).
class LpHessian {
 public:
  LpHessian(const BallPoint& x, const LpParams& params)
      : x_(x.coords()), gap_(x.gap()), params_(params) {}

  Vec operator()(std::span<const double> h) const {
    if (h.size() != x_.size()) throw std::invalid_argument("LpHessian: size mismatch");
    const double p = params_.p;
    double sh = 0.0;
    for (std::size_t i = 0; i < x_.size(); ++i)
      sh += std::copysign(std::pow(std::abs(x_[i]), p - 1.0), x_[i]) * h[i];
    Vec out(x_.size());
    for (std::size_t i = 0; i < x_.size(); ++i) {
      double a = std::abs(x_[i]);
      double diag;
      if (a == 0.0 && p < 2.0) {
        if (h[i] != 0.0)
          throw std::domain_error("LpHessian: singular coordinate with nonzero direction");
        diag = 0.0;  // h_i = 0, limit contribution vanishes
      } else {
        diag = p * (p - 1.0) * std::pow(a, p - 2.0) / gap_ * h[i];
      }
      double s_i = std::copysign(std::pow(a, p - 1.0), x_[i]);
      out[i] = diag + p * p * s_i * sh / (gap_ * gap_);
    }
    return out;
  }

 private:
  Vec x_;
  double gap_;
  LpParams params_;
};

struct LpEval {
  double value;
  Vec grad;
  LpHessian hess_action;
};

inline LpEval lp_eval(const BallPoint& x, const LpParams& params) {
  return LpEval{-std::log(x.gap()), lp_gradient(x, params), LpHessian(x, params)};
}

// Root of psi(d) = sum (|v_i| d / p)^q + d - 1 on (0, 1]. psi is strictly
// increasing with psi(0) = -1, so the root is unique. Bracketed bisection to
// width 1e-12, then a few Newton steps to polish.
inline double lp_gap_root(std::span<const double> v, const LpParams& params) {
  const double p = params.p;
  const double q = params.q;
  auto psi = [&](double d) {
    double s = 0.0;
    for (double vi : v) s += std::pow(std::abs(vi) * d / p, q);
    return s + d - 1.0;
  };
  double lo = 0.0, hi = 1.0;
  if (psi(hi) <= 0.0) return 1.0;  // only when v == 0
  while (hi - lo > 1e-12) {
    double mid = 0.5 * (lo + hi);
    (psi(mid) < 0.0 ? lo : hi) = mid;
  }
  double d = 0.5 * (lo + hi);
  for (int it = 0; it < 5; ++it) {
    double s = 0.0;
    for (double vi : v) s += std::pow(std::abs(vi) * d / p, q);
    double f = s + d - 1.0;
    double fp = q * s / d + 1.0;
    double step = f / fp;
    d -= step;
    if (!(d > 0.0)) d = 0.5 * (lo + hi);  // keep inside the bracket
    if (std::abs(step) < 1e-17 * d) break;
  }
  return std::min(d, 1.0);
}

// Fenchel-dual gradient inversion: the unique x with grad Phi(x) = v,
// recovered from |x_i| = (|v_i| d / p)^{1/(p-1)} once d = d(x) is known.
inline BallPoint lp_grad_inverse(std::span<const double> v, const LpParams& params) {
  require_finite(v, "lp_grad_inverse");
  double d = lp_gap_root(v, params);
  Vec x(v.size());
  double exponent = 1.0 / (params.p - 1.0);
  for (std::size_t i = 0; i < v.size(); ++i)
    x[i] = std::copysign(std::pow(std::abs(v[i]) * d / params.p, exponent), v[i]);
  return BallPoint(std::move(x), d, params);
}

// ---------------------------------------------------------------------------
// Dual local norms  ||h||_{x,*}^2 = (Hess Phi(x))^{-1}[h, h]
// ---------------------------------------------------------------------------

inline double dual_norm_sq_diag(std::span<const double> hess_diag,
                                std::span<const double> h) {
  if (hess_diag.size() != h.size())
    throw std::invalid_argument("dual_norm_sq_diag: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (hess_diag[i] == 0.0) {
      if (h[i] != 0.0) throw std::domain_error("dual_norm_sq_diag: singular diagonal");
      continue;
    }
    s += h[i] * h[i] / hess_diag[i];
  }
  return s;
}

// Exact dual norm for the gap barrier via the Sherman-Morrison identity on
// the diagonal-plus-rank-one Hessian. Coordinates with x_i = 0 and p < 2 have
// infinite diagonal, so their inverse contribution is zero.
inline double lp_dual_norm_sq_exact(const BallPoint& x, const LpParams& params,
                                    std::span<const double> h) {
  const Vec& c = x.coords();
  if (h.size() != c.size())
    throw std::invalid_argument("lp_dual_norm_sq_exact: size mismatch");
  const double p = params.p;
  const double d = x.gap();
  const double beta = p * p / (d * d);
  double hDh = 0.0, sDh = 0.0, sDs = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    double a = std::abs(c[i]);
    double dinv;  // (D^{-1})_ii = d |x_i|^{2-p} / (p(p-1))
    if (a == 0.0 && p < 2.0) {
      dinv = 0.0;
    } else {
      dinv = d * std::pow(a, 2.0 - p) / (p * (p - 1.0));
    }
    double s_i = std::copysign(std::pow(a, p - 1.0), c[i]);
    hDh += h[i] * h[i] * dinv;
    sDh += s_i * h[i] * dinv;
    sDs += s_i * s_i * dinv;
  }
  return hDh - beta * sDh * sDh / (1.0 + beta * sDs);
}

// Upper bound d(x)/(p(p-1)) * sum |x_i|^{2-p} h_i^2 on the exact dual norm;
// finite even at zero coordinates.
inline double lp_dual_norm_sq_bound(const BallPoint& x, const LpParams& params,
                                    std::span<const double> h) {
  const Vec& c = x.coords();
  if (h.size() != c.size())
    throw std::invalid_argument("lp_dual_norm_sq_bound: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i)
    s += std::pow(std::abs(c[i]), 2.0 - params.p) * h[i] * h[i];
  return x.gap() / (params.p * (params.p - 1.0)) * s;
}

}  // namespace banditlab
