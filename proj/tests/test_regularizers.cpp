#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "banditlab/regularizers.hpp"
#include "banditlab/rng.hpp"

using namespace banditlab;
using Catch::Approx;

namespace {

// Central finite differences of a scalar field: the independent oracle for
// every gradient in this suite.
Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x,
                double h = 1e-6) {
  Vec g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    Vec hi = x, lo = x;
    hi[i] += h;
    lo[i] -= h;
    g[i] = (f(hi) - f(lo)) / (2.0 * h);
  }
  return g;
}

Vec fd_hessian_action(const std::function<Vec(const Vec&)>& grad, const Vec& x,
                      const Vec& v, double h = 1e-6) {
  Vec hi = x, lo = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    hi[i] += h * v[i];
    lo[i] -= h * v[i];
  }
  Vec ghi = grad(hi), glo = grad(lo);
  Vec out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = (ghi[i] - glo[i]) / (2.0 * h);
  return out;
}

Vec random_simplex(int n, Rng& rng, double floor = 0.02) {
  Vec w(static_cast<std::size_t>(n));
  double s = 0.0;
  for (double& v : w) {
    v = floor + rng.uniform();
    s += v;
  }
  for (double& v : w) v /= s;
  return w;
}

// Interior ball point with coordinates bounded away from zero so the Hessian
// diagonal stays finite for p < 2.
Vec random_ball_interior(int n, double p, Rng& rng, double max_norm = 0.9,
                         double coord_floor = 0.01) {
  Vec x(static_cast<std::size_t>(n));
  for (double& v : x) {
    double mag = coord_floor + rng.uniform(0.0, 1.0);
    v = (rng.sign() > 0 ? mag : -mag);
  }
  double norm = lp_norm(x, p);
  double target = rng.uniform(0.3, max_norm);
  for (double& v : x) v *= target / norm;
  return x;
}

double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace

TEST_CASE("hybrid regularizer closed forms") {
  SECTION("negentropy at uniform") {
    auto out = hybrid_eval(SimplexPoint({0.5, 0.5}), HybridParams(0.0));
    for (double g : out.grad) REQUIRE(g == Approx(1.0 + std::log(0.5)).margin(1e-12));
    for (double h : out.hess_diag) REQUIRE(h == Approx(2.0).margin(1e-12));
  }
  SECTION("hybrid at uniform, gamma = 0.1") {
    auto out = hybrid_eval(SimplexPoint({0.5, 0.5}), HybridParams(0.1));
    for (double g : out.grad) REQUIRE(g == Approx(0.106853).margin(1e-6));
    for (double h : out.hess_diag) REQUIRE(h == Approx(2.4).margin(1e-12));
  }
  SECTION("domain error on non-positive entries") {
    REQUIRE_THROWS_AS(SimplexPoint({1.0, 0.0}), std::domain_error);
    REQUIRE_THROWS_AS(hybrid_value(Vec{0.5, -0.5}, HybridParams(0.1)),
                      std::domain_error);
  }
}

TEST_CASE("hybrid finite-difference consistency and domination") {
  Rng rng(101);
  for (int trial = 0; trial < 100; ++trial) {
    int n = 2 + rng.uniform_int(6);
    double gamma = rng.uniform(0.0, 0.3);
    HybridParams params(gamma);
    Vec w = random_simplex(n, rng);
    auto out = hybrid_eval(SimplexPoint(w), params);

    auto value = [&](const Vec& x) { return hybrid_value(x, params); };
    Vec fng = fd_gradient(value, w);
    for (int i = 0; i < n; ++i) {
      REQUIRE(rel_err(out.grad[static_cast<std::size_t>(i)], fng[static_cast<std::size_t>(i)]) < 1e-5);
      // gamma/x^2 >= 0, so the hybrid Hessian dominates the negentropy one
      REQUIRE(out.hess_diag[static_cast<std::size_t>(i)] >=
              1.0 / w[static_cast<std::size_t>(i)] - 1e-12);
    }

    auto grad = [&](const Vec& x) {
      Vec g(x.size());
      for (std::size_t i = 0; i < x.size(); ++i)
        g[i] = 1.0 + std::log(x[i]) - gamma / x[i];
      return g;
    };
    Vec dir(static_cast<std::size_t>(n));
    for (double& d : dir) d = rng.uniform(-1.0, 1.0);
    Vec fh = fd_hessian_action(grad, w, dir);
    for (int i = 0; i < n; ++i)
      REQUIRE(rel_err(out.hess_diag[static_cast<std::size_t>(i)] * dir[static_cast<std::size_t>(i)],
                      fh[static_cast<std::size_t>(i)]) < 1e-4);
  }
}

TEST_CASE("gap barrier closed forms") {
  auto params = LpParams::make(2.0);
  SECTION("p = 2 at (0.5, 0)") {
    BallPoint x({0.5, 0.0}, params);
    REQUIRE(x.gap() == Approx(0.75).margin(1e-15));
    auto out = lp_eval(x, params);
    REQUIRE(out.grad[0] == Approx(4.0 / 3.0).margin(1e-12));
    REQUIRE(out.grad[1] == Approx(0.0).margin(1e-15));
    // finite-difference oracle on -log(1 - ||x||_2^2)
    auto value = [&](const Vec& v) {
      return -std::log(1.0 - v[0] * v[0] - v[1] * v[1]);
    };
    Vec fng = fd_gradient(value, {0.5, 0.0});
    REQUIRE(rel_err(out.grad[0], fng[0]) < 1e-6);
    REQUIRE(std::abs(out.grad[1] - fng[1]) < 1e-6);
  }
  SECTION("center has zero value and gradient for any p") {
    for (double p : {1.2, 1.7, 2.0}) {
      auto prm = LpParams::make(p);
      BallPoint zero = BallPoint::center(3, prm);
      auto out = lp_eval(zero, prm);
      REQUIRE(out.value == Approx(0.0).margin(1e-15));
      for (double g : out.grad) REQUIRE(g == 0.0);
    }
  }
  SECTION("points outside the ball are rejected") {
    REQUIRE_THROWS_AS(BallPoint({1.0, 0.2}, params), std::domain_error);
    REQUIRE_THROWS_AS(BallPoint({0.5, 0.0}, 0.9, params), std::domain_error);
  }
}

TEST_CASE("gap barrier Hessian: rank-one lower bound and singular coordinates") {
  auto params = LpParams::make(1.5);
  Rng rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    int n = 2 + rng.uniform_int(5);
    Vec xv = random_ball_interior(n, params.p, rng);
    BallPoint x(xv, params);
    Vec h(static_cast<std::size_t>(n));
    for (double& v : h) v = rng.uniform(-1.0, 1.0);
    Vec Hh = LpHessian(x, params)(h);
    double quad = dot(Hh, h);
    double diag_part = 0.0;
    for (int i = 0; i < n; ++i)
      diag_part += params.p * (params.p - 1.0) *
                   std::pow(std::abs(xv[static_cast<std::size_t>(i)]), params.p - 2.0) /
                   x.gap() * h[static_cast<std::size_t>(i)] * h[static_cast<std::size_t>(i)];
    REQUIRE(quad >= diag_part * (1.0 - 1e-12) - 1e-12);
  }

  BallPoint with_zero({0.5, 0.0}, params);
  LpHessian hess(with_zero, params);
  REQUIRE_THROWS_AS(hess(Vec{0.1, 0.2}), std::domain_error);
  REQUIRE_NOTHROW(hess(Vec{0.1, 0.0}));
}

TEST_CASE("gap barrier finite-difference consistency") {
  Rng rng(909);
  for (double p : {1.3, 1.5, 2.0}) {
    auto params = LpParams::make(p);
    for (int trial = 0; trial < 34; ++trial) {
      int n = 2 + rng.uniform_int(4);
      Vec xv = random_ball_interior(n, p, rng, 0.85, 0.05);
      BallPoint x(xv, params);
      auto out = lp_eval(x, params);

      auto value = [&](const Vec& v) {
        double s = 0.0;
        for (double c : v) s += std::pow(std::abs(c), p);
        return -std::log(1.0 - s);
      };
      Vec fng = fd_gradient(value, xv);
      for (int i = 0; i < n; ++i)
        REQUIRE(rel_err(out.grad[static_cast<std::size_t>(i)], fng[static_cast<std::size_t>(i)]) < 1e-5);

      auto grad = [&](const Vec& v) {
        return lp_gradient(BallPoint(v, params), params);
      };
      Vec dir(static_cast<std::size_t>(n));
      for (double& d : dir) d = rng.uniform(-1.0, 1.0);
      Vec fh = fd_hessian_action(grad, xv, dir, 1e-7);
      Vec Hh = out.hess_action(dir);
      for (int i = 0; i < n; ++i)
        REQUIRE(rel_err(Hh[static_cast<std::size_t>(i)], fh[static_cast<std::size_t>(i)]) < 1e-4);
    }
  }
}

TEST_CASE("gradient inversion") {
  SECTION("zero gradient maps to the center") {
    for (double p : {1.1, 1.5, 2.0}) {
      auto params = LpParams::make(p);
      auto x = lp_grad_inverse(Vec{0.0, 0.0, 0.0}, params);
      REQUIRE(x.gap() == 1.0);
      for (int i = 0; i < 3; ++i) REQUIRE(x[i] == 0.0);
    }
  }
  SECTION("p = 2 closed-form example") {
    auto x = lp_grad_inverse(Vec{4.0 / 3.0, 0.0}, LpParams::make(2.0));
    REQUIRE(x[0] == Approx(0.5).margin(1e-8));
    REQUIRE(x[1] == Approx(0.0).margin(1e-15));
  }
  SECTION("non-finite input is rejected") {
    REQUIRE_THROWS_AS(
        lp_grad_inverse(Vec{std::numeric_limits<double>::infinity(), 0.0},
                        LpParams::make(1.5)),
        std::invalid_argument);
  }
  SECTION("round-trip identity on random duals") {
    Rng rng(4242);
    for (double p : {1.1, 1.2, 1.5, 2.0}) {
      auto params = LpParams::make(p);
      for (int trial = 0; trial < 1000; ++trial) {
        int n = 1 + rng.uniform_int(8);
        double scale = std::pow(10.0, rng.uniform(-2.0, 3.0));
        Vec v(static_cast<std::size_t>(n));
        for (double& c : v) c = rng.uniform(-scale, scale);
        auto x = lp_grad_inverse(v, params);
        Vec g = lp_gradient(x, params);
        for (int i = 0; i < n; ++i) {
          double denom = std::max(1.0, std::abs(v[static_cast<std::size_t>(i)]));
          REQUIRE(std::abs(g[static_cast<std::size_t>(i)] - v[static_cast<std::size_t>(i)]) / denom < 1e-8);
        }
      }
    }
  }
}

TEST_CASE("dual local norms") {
  SECTION("diagonal examples") {
    REQUIRE(dual_norm_sq_diag(Vec{2.0, 2.0}, Vec{1.0, 0.0}) == Approx(0.5));
    Rng rng(5);
    Vec w = random_simplex(4, rng);
    Vec h{0.3, -0.2, 0.5, 0.1};
    Vec hess(4);
    double expected = 0.0;
    for (int i = 0; i < 4; ++i) {
      hess[static_cast<std::size_t>(i)] = 1.0 / w[static_cast<std::size_t>(i)];
      expected += w[static_cast<std::size_t>(i)] * h[static_cast<std::size_t>(i)] * h[static_cast<std::size_t>(i)];
    }
    REQUIRE(dual_norm_sq_diag(hess, h) == Approx(expected).margin(1e-14));
    REQUIRE_THROWS_AS(dual_norm_sq_diag(Vec{0.0, 1.0}, Vec{1.0, 1.0}),
                      std::domain_error);
  }

  SECTION("exact ball dual norm matches a dense solve") {
    // Independent oracle: materialize the Hessian columnwise through its
    // action and solve H z = h by Gaussian elimination.
    Rng rng(6);
    auto params = LpParams::make(1.5);
    for (int trial = 0; trial < 50; ++trial) {
      int n = 2 + rng.uniform_int(3);
      Vec xv = random_ball_interior(n, params.p, rng, 0.8, 0.05);
      BallPoint x(xv, params);
      LpHessian hess(x, params);
      std::vector<Vec> H(static_cast<std::size_t>(n));
      for (int j = 0; j < n; ++j) {
        Vec e(static_cast<std::size_t>(n), 0.0);
        e[static_cast<std::size_t>(j)] = 1.0;
        H[static_cast<std::size_t>(j)] = hess(e);
      }
      Vec h(static_cast<std::size_t>(n));
      for (double& v : h) v = rng.uniform(-1.0, 1.0);
      // Gaussian elimination on the (symmetric) column matrix
      std::vector<Vec> A(static_cast<std::size_t>(n), Vec(static_cast<std::size_t>(n)));
      for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) A[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] = H[static_cast<std::size_t>(c)][static_cast<std::size_t>(r)];
      Vec b = h;
      for (int c = 0; c < n; ++c) {
        int pivot = c;
        for (int r = c + 1; r < n; ++r)
          if (std::abs(A[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]) >
              std::abs(A[static_cast<std::size_t>(pivot)][static_cast<std::size_t>(c)]))
            pivot = r;
        std::swap(A[static_cast<std::size_t>(c)], A[static_cast<std::size_t>(pivot)]);
        std::swap(b[static_cast<std::size_t>(c)], b[static_cast<std::size_t>(pivot)]);
        for (int r = c + 1; r < n; ++r) {
          double f = A[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] / A[static_cast<std::size_t>(c)][static_cast<std::size_t>(c)];
          for (int k = c; k < n; ++k) A[static_cast<std::size_t>(r)][static_cast<std::size_t>(k)] -= f * A[static_cast<std::size_t>(c)][static_cast<std::size_t>(k)];
          b[static_cast<std::size_t>(r)] -= f * b[static_cast<std::size_t>(c)];
        }
      }
      Vec z(static_cast<std::size_t>(n));
      for (int r = n - 1; r >= 0; --r) {
        double acc = b[static_cast<std::size_t>(r)];
        for (int k = r + 1; k < n; ++k) acc -= A[static_cast<std::size_t>(r)][static_cast<std::size_t>(k)] * z[static_cast<std::size_t>(k)];
        z[static_cast<std::size_t>(r)] = acc / A[static_cast<std::size_t>(r)][static_cast<std::size_t>(r)];
      }
      double dense = dot(h, z);
      double exact = lp_dual_norm_sq_exact(x, params, h);
      REQUIRE(rel_err(exact, dense) < 1e-9);
    }
  }

  SECTION("diagonal bound dominates the exact norm") {
    Rng rng(7);
    for (double p : {1.2, 1.5, 2.0}) {
      auto params = LpParams::make(p);
      for (int trial = 0; trial < 334; ++trial) {
        int n = 2 + rng.uniform_int(5);
        Vec xv = random_ball_interior(n, p, rng, 0.95, 0.0);
        BallPoint x(xv, params);
        Vec h(static_cast<std::size_t>(n));
        for (double& v : h) v = rng.uniform(-1.0, 1.0);
        double exact = lp_dual_norm_sq_exact(x, params, h);
        double bound = lp_dual_norm_sq_bound(x, params, h);
        REQUIRE(exact <= bound * (1.0 + 1e-12) + 1e-15);
      }
    }
  }

  SECTION("single-coordinate direction: exact below bound") {
    Rng rng(8);
    auto params = LpParams::make(1.5);
    for (int trial = 0; trial < 100; ++trial) {
      int n = 2 + rng.uniform_int(4);
      Vec xv = random_ball_interior(n, params.p, rng);
      BallPoint x(xv, params);
      Vec h(static_cast<std::size_t>(n), 0.0);
      h[static_cast<std::size_t>(rng.uniform_int(n))] = rng.uniform(-1.0, 1.0);
      REQUIRE(lp_dual_norm_sq_exact(x, params, h) <=
              lp_dual_norm_sq_bound(x, params, h) * (1.0 + 1e-12));
    }
  }

  SECTION("hybrid dual norm never exceeds the negentropy dual norm") {
    Rng rng(9);
    for (int trial = 0; trial < 200; ++trial) {
      int n = 2 + rng.uniform_int(6);
      Vec w = random_simplex(n, rng);
      auto hyb = hybrid_eval(SimplexPoint(w), HybridParams(rng.uniform(0.001, 0.5)));
      auto neg = hybrid_eval(SimplexPoint(w), HybridParams(0.0));
      Vec h(static_cast<std::size_t>(n));
      for (double& v : h) v = rng.uniform(-1.0, 1.0);
      REQUIRE(dual_norm_sq_diag(hyb.hess_diag, h) <=
              dual_norm_sq_diag(neg.hess_diag, h) * (1.0 + 1e-12));
    }
  }
}

TEST_CASE("gap growth certificate under single-coordinate dual steps") {
  // d(y) <= 4 d(x) and |y_i| <= 2^{3/(p-1)} |x_i| + |2 l_i|^{1/(p-1)} when
  // grad Phi(y) = grad Phi(x) + l with one nonzero |l| <= 1 entry.
  Rng rng(1234);
  for (double p : {1.2, 1.5, 2.0}) {
    auto params = LpParams::make(p);
    const double coord_factor = std::pow(2.0, 3.0 / (p - 1.0));
    for (int trial = 0; trial < 1000; ++trial) {
      int n = 2 + rng.uniform_int(6);
      double scale = std::pow(10.0, rng.uniform(-1.0, 2.5));
      Vec v(static_cast<std::size_t>(n));
      for (double& c : v) c = rng.uniform(-scale, scale);
      Vec ell(static_cast<std::size_t>(n), 0.0);
      int j = rng.uniform_int(n);
      ell[static_cast<std::size_t>(j)] = rng.uniform(-1.0, 1.0);
      auto x = lp_grad_inverse(v, params);
      Vec v2 = v;
      v2[static_cast<std::size_t>(j)] += ell[static_cast<std::size_t>(j)];
      auto y = lp_grad_inverse(v2, params);
      REQUIRE(y.gap() <= 4.0 * x.gap() * (1.0 + 1e-12));
      for (int i = 0; i < n; ++i) {
        double cap = coord_factor * std::abs(x[i]) +
                     std::pow(std::abs(2.0 * ell[static_cast<std::size_t>(i)]), 1.0 / (p - 1.0));
        REQUIRE(std::abs(y[i]) <= cap * (1.0 + 1e-10) + 1e-300);
      }
    }
  }
}

TEST_CASE("dual-segment local norm certificate") {
  // Along the dual segment [grad Phi(x), grad Phi(x) + l] with a single
  // nonzero |l| <= 1 coordinate, the exact dual norm of l stays below
  // 2^{3/(p-1)} d(x)/(p(p-1)) * sum (|x_i|^{2-p} + |l_i|^{(2-p)/(p-1)}) l_i^2.
  Rng rng(4321);
  for (double p : {1.2, 1.5, 2.0}) {
    auto params = LpParams::make(p);
    const double factor = std::pow(2.0, 3.0 / (p - 1.0));
    for (int trial = 0; trial < 334; ++trial) {
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
        REQUIRE(exact <= rhs * (1.0 + 1e-9) + 1e-300);
      }
    }
  }
}
