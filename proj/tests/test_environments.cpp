#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>

#include "banditlab/environments.hpp"
#include "banditlab/strategies.hpp"

using namespace banditlab;
using Catch::Approx;

TEST_CASE("sparse generator budgets") {
  Rng rng(21);
  SECTION("s = 0 gives the zero sequence") {
    auto seq = gen_sparse(5, 40, 0, SparseStyle::random_support, rng);
    for (double v : seq.data) REQUIRE(v == 0.0);
  }
  SECTION("s = n is a full bounded adversary") {
    auto seq = gen_sparse(4, 200, 4, SparseStyle::random_support, rng);
    auto stats = sequence_stats(seq);
    REQUIRE(stats.in_range);
    REQUIRE(stats.max_sparsity <= 4);
  }
  SECTION("budget certificate holds for both styles") {
    for (auto style : {SparseStyle::random_support, SparseStyle::hidden_good_arm}) {
      for (int s : {1, 3, 6}) {
        auto seq = gen_sparse(6, 300, s, style, rng);
        auto stats = sequence_stats(seq);
        REQUIRE(stats.max_sparsity <= s);
        REQUIRE(stats.l2_sum <= static_cast<double>(s) * 300.0 + 1e-9);
        REQUIRE(stats.in_range);
      }
    }
  }
  SECTION("hidden good arm loses -1 every round") {
    auto seq = gen_sparse(6, 100, 3, SparseStyle::hidden_good_arm, rng);
    int good = static_cast<int>(seq.param("good_arm"));
    for (long t = 0; t < seq.T; ++t)
      REQUIRE(seq.row(t)[static_cast<std::size_t>(good)] == -1.0);
  }
  SECTION("out-of-range sparsity is rejected") {
    REQUIRE_THROWS_AS(gen_sparse(4, 10, 5, SparseStyle::random_support, rng),
                      std::invalid_argument);
  }
}

TEST_CASE("low-variation generator") {
  Rng rng(22);
  SECTION("Q = 0 is exactly constant") {
    auto seq = gen_low_variation(4, 100, 0.0, rng);
    auto stats = sequence_stats(seq);
    REQUIRE(stats.variation == 0.0);
    for (long t = 1; t < seq.T; ++t)
      for (int i = 0; i < seq.n; ++i)
        REQUIRE(seq.row(t)[static_cast<std::size_t>(i)] ==
                seq.row(0)[static_cast<std::size_t>(i)]);
  }
  SECTION("realized variation lands in [0.9Q, Q] and stays bounded") {
    for (int draw = 0; draw < 100; ++draw) {
      double Q = std::pow(10.0, rng.uniform(0.0, 3.0));
      auto seq = gen_low_variation(8, 500, Q, rng);
      auto stats = sequence_stats(seq);
      REQUIRE(stats.variation >= 0.9 * Q);
      REQUIRE(stats.variation <= Q * (1.0 + 1e-9));
      REQUIRE(stats.in_range);
      REQUIRE(seq.param("realized_Q") == Approx(stats.variation).margin(1e-6));
    }
  }
  SECTION("infeasible budgets are rejected") {
    REQUIRE_THROWS_AS(gen_low_variation(2, 10, 20.0, rng), std::invalid_argument);
    REQUIRE_THROWS_AS(gen_low_variation(2, 10, 21.0, rng), std::invalid_argument);
  }
}

TEST_CASE("ball iid generator stays in the polar body") {
  Rng rng(23);
  auto seq = gen_ball_iid(5, 400, 3.0, 0.5, 0.5, rng);
  for (long t = 0; t < seq.T; ++t)
    REQUIRE(lp_norm(seq.row(t), 3.0) <= 1.0 + 1e-12);
}

TEST_CASE("gaussian lower-bound environment") {
  SECTION("epsilon solves epsilon^q = C / sqrt(T)") {
    Rng rng(24);
    auto params = GaussianLbParams::make(10, 10000, 3.0, 0.1, rng);
    REQUIRE(params.q == Approx(1.5));
    REQUIRE(params.epsilon == Approx(0.01).margin(1e-12));
    REQUIRE(std::pow(params.epsilon, params.q) * std::sqrt(10000.0) ==
            Approx(0.1).margin(1e-12));
  }
  SECTION("moment formula matches frozen quadrature oracles") {
    REQUIRE(gauss_abs_moment(1.5, -1.0, 1.0) ==
            Approx(1.480265647865).margin(1e-9));
    REQUIRE(gauss_abs_moment(1.2, 0.3, 0.7) == Approx(0.588010284724).margin(1e-9));
    REQUIRE(gauss_abs_moment(1.9, -2.0, 0.5) ==
            Approx(3.931939530534).margin(1e-9));
  }
  SECTION("rescaled analytic moment equals one and Monte Carlo agrees") {
    Rng rng(25);
    auto params = GaussianLbParams::make(8, 20000, 3.0, 0.1, rng);
    auto seq = gen_gaussian_lb(params, rng);
    double rho = seq.param("rho");
    double q = params.q;
    // recompute the analytic moment at the rescaled parameters
    double sigma_z = std::pow(8.0, -1.0 / q);
    double analytic = gauss_abs_moment(q, -rho, rho) +
                      8.0 * gauss_abs_moment(q, rho * params.epsilon, rho * sigma_z);
    REQUIRE(analytic == Approx(1.0).margin(1e-10));
    double mc = 0.0, mc2 = 0.0;
    for (long t = 0; t < seq.T; ++t) {
      double v = 0.0;
      for (double x : seq.row(t)) v += std::pow(std::abs(x), q);
      mc += v;
      mc2 += v * v;
    }
    mc /= static_cast<double>(seq.T);
    mc2 /= static_cast<double>(seq.T);
    double se = std::sqrt((mc2 - mc * mc) / static_cast<double>(seq.T));
    REQUIRE(std::abs(mc - 1.0) <= 3.0 * se);
  }
  SECTION("zero epsilon makes the sign pattern unidentifiable") {
    Rng rng(26);
    auto params = GaussianLbParams::make(6, 5000, 3.0, 0.1, rng);
    params.epsilon = 0.0;
    auto seq = gen_gaussian_lb(params, rng);
    // every z column is mean zero within three sigma
    double sigma_z = std::pow(6.0, -1.0 / params.q) * seq.param("rho");
    for (int i = 1; i <= 6; ++i) {
      double mean = 0.0;
      for (long t = 0; t < seq.T; ++t) mean += seq.row(t)[static_cast<std::size_t>(i)];
      mean /= static_cast<double>(seq.T);
      REQUIRE(std::abs(mean) <= 3.0 * sigma_z / std::sqrt(static_cast<double>(seq.T)));
    }
  }
  SECTION("p <= 2 is rejected") {
    Rng rng(27);
    REQUIRE_THROWS_AS(GaussianLbParams::make(4, 100, 2.0, 0.1, rng),
                      std::invalid_argument);
  }
  SECTION("information diagnostic") {
    Rng rng(28);
    auto params = GaussianLbParams::make(4, 10000, 3.0, 0.1, rng);
    Vec apex{1.0, 0.0, 0.0, 0.0, 0.0};
    REQUIRE(info_diagnostic(apex, params) == 0.0);
    Vec pure_y{0.0, 0.5, 0.5, 0.5, 0.5};
    double y2 = 1.0;
    double expected = params.epsilon * params.epsilon * y2 /
                      (y2 * std::pow(4.0, -2.0 / params.q));
    REQUIRE(info_diagnostic(pure_y, params) == Approx(expected).margin(1e-12));
    Vec zero(5, 0.0);
    REQUIRE(info_diagnostic(zero, params) == 0.0);
  }
}

TEST_CASE("starved bernoulli environment") {
  Rng rng(29);
  SECTION("tail arms always lose 1") {
    auto seq = gen_starved_bernoulli(5, 400, 0.1, rng);
    for (long t = 0; t < seq.T; ++t)
      for (int i = 2; i < 5; ++i)
        REQUIRE(seq.row(t)[static_cast<std::size_t>(i)] == 1.0);
  }
  SECTION("first arm mean tracks 1/2 +- epsilon") {
    const long T = 100000;
    auto seq = gen_starved_bernoulli(3, T, 0.1, rng);
    double sign = seq.param("sign");
    double mean = 0.0;
    for (long t = 0; t < T; ++t) mean += seq.row(t)[0];
    mean /= static_cast<double>(T);
    double expected = 0.5 + sign * 0.1;
    REQUIRE(std::abs(mean - expected) <= 3.0 * 0.5 / std::sqrt(static_cast<double>(T)));
  }
  SECTION("zero epsilon leaves arms 1 and 2 exchangeable") {
    const long T = 100000;
    auto seq = gen_starved_bernoulli(2, T, 0.0, rng);
    double m0 = 0.0, m1 = 0.0;
    for (long t = 0; t < T; ++t) {
      m0 += seq.row(t)[0];
      m1 += seq.row(t)[1];
    }
    REQUIRE(std::abs(m0 - m1) / T <= 3.0 * std::sqrt(0.5 / T));
  }
}

TEST_CASE("starved wrapper") {
  SECTION("a canary that reads withheld feedback trips the contract") {
    struct Canary {
      using play_t = MabPlay;
      int dim() const { return 2; }
      play_t plan(Rng&) { return {0, PlayMode::exploit, 1.0}; }
      double loss_of(const play_t& play, std::span<const double> row) const {
        return row[static_cast<std::size_t>(play.arm)];
      }
      void learn(const play_t&, const Feedback& fb, Rng&) { (void)fb.require(); }
    };
    StarvedWrap<Canary> wrapped{Canary{}};
    Rng rng(30);
    auto play = wrapped.plan(rng);
    Feedback fb;
    fb.value = 0.5;
    REQUIRE_THROWS_AS(wrapped.learn(play, fb, rng), StarvedContractError);
  }
  SECTION("an always-exploring strategy sees ordinary bandit feedback") {
    // explore_scale large enough that the exploration probability is 1
    Rng env_rng(31);
    auto env = gen_starved_bernoulli(3, 500, 0.2, env_rng);
    StarvedEtcBaseline plain(3, 1e9);
    StarvedWrap<StarvedEtcBaseline> wrapped{StarvedEtcBaseline(3, 1e9)};
    Rng a(7), b(7);
    for (long t = 0; t < env.T; ++t) {
      auto row = env.row(t);
      auto play1 = plain.plan(a);
      Feedback fb1;
      fb1.value = plain.loss_of(play1, row);
      plain.learn(play1, fb1, a);
      auto play2 = wrapped.plan(b);
      Feedback fb2;
      fb2.value = wrapped.loss_of(play2, row);
      wrapped.learn(play2, fb2, b);
      REQUIRE(play1.arm == play2.arm);
    }
    REQUIRE(wrapped.exploration_rounds() == env.T);
  }
  SECTION("a never-exploring strategy observes nothing and stays constant") {
    Rng env_rng(32);
    auto env = gen_starved_bernoulli(4, 300, 0.2, env_rng);
    StarvedWrap<StarvedEtcBaseline> wrapped{StarvedEtcBaseline(4, 0.0)};
    Rng rng(8);
    int first_arm = -1;
    for (long t = 0; t < env.T; ++t) {
      auto play = wrapped.plan(rng);
      if (first_arm < 0) first_arm = play.arm;
      REQUIRE(play.arm == first_arm);
      Feedback fb;
      fb.value = wrapped.loss_of(play, env.row(t));
      wrapped.learn(play, fb, rng);
    }
    REQUIRE(wrapped.exploration_rounds() == 0);
  }
}

TEST_CASE("sequence statistics") {
  Rng rng(33);
  SECTION("constant and single-round sequences have zero variation") {
    auto flat = gen_low_variation(3, 50, 0.0, rng);
    REQUIRE(sequence_stats(flat).variation == 0.0);
    auto single = gen_sparse(4, 1, 3, SparseStyle::random_support, rng);
    REQUIRE(sequence_stats(single).variation == Approx(0.0).margin(1e-18));
  }
  SECTION("variation never exceeds the second moment") {
    for (int draw = 0; draw < 50; ++draw) {
      auto seq = gen_sparse(5, 100, 3, SparseStyle::random_support, rng);
      auto stats = sequence_stats(seq);
      REQUIRE(stats.variation <= stats.l2_sum + 1e-9);
    }
  }
}

TEST_CASE("sequence serialization round-trips bit-exactly") {
  namespace fs = std::filesystem;
  Rng rng(34);
  fs::path dir = fs::temp_directory_path() / "banditlab_seq_test";
  fs::create_directories(dir);
  auto path = (dir / "seq.bin").string();
  for (int draw = 0; draw < 5; ++draw) {
    LossSequence seq;
    switch (draw % 3) {
      case 0: seq = gen_sparse(6, 120, 2, SparseStyle::hidden_good_arm, rng, 42); break;
      case 1: seq = gen_low_variation(4, 80, 25.0, rng, 43); break;
      default: {
        auto params = GaussianLbParams::make(3, 60, 3.0, 0.1, rng);
        seq = gen_gaussian_lb(params, rng, 44);
      }
    }
    save_sequence(seq, path);
    auto loaded = load_sequence(path);
    REQUIRE(loaded.kind == seq.kind);
    REQUIRE(loaded.n == seq.n);
    REQUIRE(loaded.T == seq.T);
    REQUIRE(loaded.seed == seq.seed);
    REQUIRE(loaded.params.size() == seq.params.size());
    for (std::size_t i = 0; i < seq.params.size(); ++i) {
      REQUIRE(loaded.params[i].first == seq.params[i].first);
      REQUIRE(loaded.params[i].second == seq.params[i].second);  // bit-exact
    }
    REQUIRE(std::memcmp(loaded.data.data(), seq.data.data(),
                        seq.data.size() * sizeof(double)) == 0);
  }
  fs::remove_all(dir);
}
