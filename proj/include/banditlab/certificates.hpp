#pragma once

#include <cmath>
#include <limits>
#include <string>

#include "banditlab/estimators.hpp"
#include "banditlab/ftrl.hpp"
#include "banditlab/regularizers.hpp"
#include "banditlab/rng.hpp"

// Randomized certificate suites for the numerical guarantees the solvers rely
// on: iterate stability of the hybrid FTRL update, gap and coordinate growth
// of the ball barrier under estimator-sized dual steps, dual-norm domination,
// estimator identities, and KKT residuals. Shared between the test suites and
// the `verify-lemmas` CLI subcommand.

namespace banditlab {

struct CertificateReport {
  std::string name;
  long trials = 0;
  long violations = 0;
  double worst = 0.0;  // suite-specific extremal statistic

  bool passed() const { return violations == 0; }
};

// Hybrid FTRL iterate stability: in the regime gamma = 2 eta, eta <= 1/(15n),
// a single-coordinate dual perturbation |xi| <= 1/x(coord) moves every
// coordinate by at most a factor 3.
inline CertificateReport certify_conditioning_ratio(long trials, std::uint64_t seed) {
  CertificateReport report{"conditioning-ratio", trials, 0, 0.0};
  Rng rng(seed);
  const int sizes[3] = {2, 5, 20};
  for (long trial = 0; trial < trials; ++trial) {
    int n = sizes[trial % 3];
    double eta = rng.uniform(1e-4, 1.0 / (15.0 * n));
    HybridParams params(2.0 * eta);
    double scale = (trial % 5 == 0) ? 3.0 / eta : rng.uniform(0.0, 30.0);
    Vec L(static_cast<std::size_t>(n));
    for (double& v : L) v = rng.uniform(-scale, scale);
    SimplexPoint x = simplex_argmin(L, eta, params);
    int coord = rng.uniform_int(n);
    double xi = rng.uniform(-1.0, 1.0) / x[coord];
    Vec L2 = L;
    L2[static_cast<std::size_t>(coord)] += xi;
    SimplexPoint x2 = simplex_argmin(L2, eta, params);
    double ratio = conditioning_ratio(x, x2);
    report.worst = std::max(report.worst, ratio);
    if (ratio > 3.0) ++report.violations;
  }
  return report;
}

// d(y) <= 4 d(x) and the coordinatewise growth cap for single-coordinate
// dual steps of norm <= 1 on the ball barrier.
inline CertificateReport certify_gap_growth(long trials, double p, std::uint64_t seed) {
  CertificateReport report{"gap-growth(p=" + std::to_string(p) + ")", trials, 0, 0.0};
  Rng rng(seed);
  auto params = LpParams::make(p);
  const double coord_factor = std::pow(2.0, 3.0 / (p - 1.0));
  for (long trial = 0; trial < trials; ++trial) {
    int n = 2 + rng.uniform_int(6);
    double scale = std::pow(10.0, rng.uniform(-1.0, 2.5));
    Vec v(static_cast<std::size_t>(n));
    for (double& c : v) c = rng.uniform(-scale, scale);
    int j = rng.uniform_int(n);
    double u = rng.uniform(-1.0, 1.0);
    auto x = lp_grad_inverse(v, params);
    Vec v2 = v;
    v2[static_cast<std::size_t>(j)] += u;
    auto y = lp_grad_inverse(v2, params);
    double ratio = y.gap() / x.gap();
    report.worst = std::max(report.worst, ratio);
    bool ok = ratio <= 4.0 * (1.0 + 1e-12);
    for (int i = 0; ok && i < n; ++i) {
      double li = (i == j) ? u : 0.0;
      double cap = coord_factor * std::abs(x[i]) +
                   std::pow(std::abs(2.0 * li), 1.0 / (p - 1.0));
      ok = std::abs(y[i]) <= cap * (1.0 + 1e-10) + 1e-300;
    }
    if (!ok) ++report.violations;
  }
  return report;
}

// Exact dual norm along the dual segment stays below the conditioning bound
// built from the segment's starting point.
inline CertificateReport certify_segment_norm(long trials, double p, std::uint64_t seed) {
  CertificateReport report{"segment-norm(p=" + std::to_string(p) + ")", trials, 0,
                           std::numeric_limits<double>::infinity()};
  Rng rng(seed);
  auto params = LpParams::make(p);
  const double factor = std::pow(2.0, 3.0 / (p - 1.0));
  for (long trial = 0; trial < trials; ++trial) {
    int n = 2 + rng.uniform_int(6);
    double scale = std::pow(10.0, rng.uniform(-1.0, 2.0));
    Vec v(static_cast<std::size_t>(n));
    for (double& c : v) c = rng.uniform(-scale, scale);
    Vec ell(static_cast<std::size_t>(n), 0.0);
    int j = rng.uniform_int(n);
    double u = rng.uniform(-1.0, 1.0);
    ell[static_cast<std::size_t>(j)] = u;
    auto x = lp_grad_inverse(v, params);
    double rhs = factor * x.gap() / (p * (p - 1.0)) *
                 (std::pow(std::abs(x[j]), 2.0 - p) +
                  std::pow(std::abs(u), (2.0 - p) / (p - 1.0))) * u * u;
    for (int step = 0; step <= 20; ++step) {
      Vec vm = v;
      vm[static_cast<std::size_t>(j)] += u * static_cast<double>(step) / 20.0;
      auto y = lp_grad_inverse(vm, params);
      double exact = lp_dual_norm_sq_exact(y, params, ell);
      double slack = rhs * (1.0 + 1e-9) + 1e-300 - exact;
      report.worst = std::min(report.worst, slack);
      if (slack < 0.0) ++report.violations;
    }
  }
  return report;
}

// Exact dual norm never exceeds its diagonal upper bound.
inline CertificateReport certify_dual_norm_domination(long trials, double p,
                                                      std::uint64_t seed) {
  CertificateReport report{"dual-norm-domination(p=" + std::to_string(p) + ")",
                           trials, 0, 0.0};
  Rng rng(seed);
  auto params = LpParams::make(p);
  for (long trial = 0; trial < trials; ++trial) {
    int n = 2 + rng.uniform_int(6);
    Vec v(static_cast<std::size_t>(n));
    double scale = std::pow(10.0, rng.uniform(-1.0, 2.0));
    for (double& c : v) c = rng.uniform(-scale, scale);
    auto x = lp_grad_inverse(v, params);
    Vec h(static_cast<std::size_t>(n));
    for (double& c : h) c = rng.uniform(-1.0, 1.0);
    double exact = lp_dual_norm_sq_exact(x, params, h);
    double bound = lp_dual_norm_sq_bound(x, params, h);
    if (exact > bound * (1.0 + 1e-12) + 1e-15) ++report.violations;
    if (bound > 0.0) report.worst = std::max(report.worst, exact / bound);
  }
  return report;
}

// Exact unbiasedness (by enumeration over arms) and the dual-norm variance
// identity sum_i x_i ||l~^{(i)}||^2_{x,*} = ||l||_2^2 under negentropy,
// plus <= ||l||_2^2 under the hybrid.
inline CertificateReport certify_estimator_identities(long trials, std::uint64_t seed) {
  CertificateReport report{"estimator-identities", trials, 0, 0.0};
  Rng rng(seed);
  for (long trial = 0; trial < trials; ++trial) {
    int n = 2 + rng.uniform_int(8);
    Vec w(static_cast<std::size_t>(n));
    double s = 0.0;
    for (double& v : w) {
      v = 0.02 + rng.uniform();
      s += v;
    }
    for (double& v : w) v /= s;
    SimplexPoint x(w);
    Vec ell(static_cast<std::size_t>(n)), mu(static_cast<std::size_t>(n));
    for (double& v : ell) v = rng.uniform(-1.0, 1.0);
    for (double& v : mu) v = rng.uniform(-1.0, 1.0);

    Vec mean_plain(static_cast<std::size_t>(n), 0.0);
    Vec mean_centered(static_cast<std::size_t>(n), 0.0);
    double variance_neg = 0.0, variance_hyb = 0.0;
    auto hyb = hybrid_eval(x, HybridParams(rng.uniform(0.001, 0.3)));
    for (int a = 0; a < n; ++a) {
      Feedback fb;
      fb.arm = a;
      fb.value = ell[static_cast<std::size_t>(a)];
      Vec est = mab_estimator(fb, x);
      Vec cest = centered_estimator(fb, x, mu);
      double neg_norm = 0.0;
      for (int i = 0; i < n; ++i) {
        mean_plain[static_cast<std::size_t>(i)] += w[static_cast<std::size_t>(a)] * est[static_cast<std::size_t>(i)];
        mean_centered[static_cast<std::size_t>(i)] += w[static_cast<std::size_t>(a)] * cest[static_cast<std::size_t>(i)];
        neg_norm += w[static_cast<std::size_t>(i)] * est[static_cast<std::size_t>(i)] * est[static_cast<std::size_t>(i)];
      }
      variance_neg += w[static_cast<std::size_t>(a)] * neg_norm;
      variance_hyb += w[static_cast<std::size_t>(a)] * dual_norm_sq_diag(hyb.hess_diag, est);
    }
    double err = 0.0;
    for (int i = 0; i < n; ++i) {
      err = std::max(err, std::abs(mean_plain[static_cast<std::size_t>(i)] - ell[static_cast<std::size_t>(i)]));
      err = std::max(err, std::abs(mean_centered[static_cast<std::size_t>(i)] - ell[static_cast<std::size_t>(i)]));
    }
    err = std::max(err, std::abs(variance_neg - norm_sq(ell)));
    report.worst = std::max(report.worst, err);
    if (err > 1e-12) ++report.violations;
    if (variance_hyb > norm_sq(ell) * (1.0 + 1e-12)) ++report.violations;
  }
  return report;
}

// KKT residual of the simplex argmin (after eliminating the multiplier) and
// first-order residual of the ball argmin.
inline CertificateReport certify_kkt_residuals(long trials, std::uint64_t seed) {
  CertificateReport report{"kkt-residuals", trials, 0, 0.0};
  Rng rng(seed);
  for (long trial = 0; trial < trials; ++trial) {
    int n = 2 + rng.uniform_int(15);
    double eta = rng.uniform(0.001, 0.1);
    double gamma = rng.uniform(1e-4, 0.2);
    Vec L(static_cast<std::size_t>(n));
    for (double& v : L) v = rng.uniform(-30.0, 30.0);
    SimplexPoint x = simplex_argmin(L, eta, HybridParams(gamma));
    double mean = 0.0;
    Vec r(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      r[static_cast<std::size_t>(i)] = eta * L[static_cast<std::size_t>(i)] + 1.0 +
                                       std::log(x[i]) - gamma / x[i];
      mean += r[static_cast<std::size_t>(i)];
    }
    mean /= n;
    double resid = 0.0;
    for (double v : r) resid = std::max(resid, std::abs(v - mean));

    auto params = LpParams::make(rng.uniform(1.1, 2.0));
    Vec Lb(static_cast<std::size_t>(n));
    for (double& v : Lb) v = rng.uniform(-20.0, 20.0);
    auto ball = ball_argmin(Lb, eta, params);
    Vec g = lp_gradient(ball, params);
    for (int i = 0; i < n; ++i)
      resid = std::max(resid, std::abs(g[static_cast<std::size_t>(i)] + eta * Lb[static_cast<std::size_t>(i)]));

    report.worst = std::max(report.worst, resid);
    if (resid > 1e-8) ++report.violations;
  }
  return report;
}

}  // namespace banditlab
