#pragma once

#include <cmath>
#include <optional>
#include <tuple>

#include "banditlab/common.hpp"
#include "banditlab/estimators.hpp"
#include "banditlab/ftrl.hpp"
#include "banditlab/regularizers.hpp"
#include "banditlab/rng.hpp"

// The three bandit algorithms as round-by-round state machines. Each strategy
// exposes plan / loss_of / learn so an episode driver (or the starved-bandit
// wrapper) can run it against an oblivious loss sequence, plus a trace mode
// that records estimates and iterates for the Be-The-Leader audit.

namespace banditlab {

// Committed simplex action for one round.
struct MabPlay {
  int arm = -1;
  PlayMode mode = PlayMode::exploit;
  double probability = 1.0;
};

// ---------------------------------------------------------------------------
// Parameter recipes
// ---------------------------------------------------------------------------

// eta = min((1/5) sqrt(log(T)/L), 1/(15 n)), gamma = 2 eta.
inline std::pair<double, double> sparse_mab_params(int n, long T, double L) {
  if (n < 2 || T < 2) throw std::invalid_argument("sparse_mab_params: need n,T >= 2");
  if (!(L > 0.0)) throw std::invalid_argument("sparse_mab_params: L must be > 0");
  double eta = std::min(0.2 * std::sqrt(std::log(static_cast<double>(T)) / L),
                        1.0 / (15.0 * n));
  return {eta, 2.0 * eta};
}

// Defaults mirroring the sparse recipe with the variation budget in place of
// the loss budget, and a logarithmic reservoir size.
inline std::tuple<double, double, int> variation_mab_params(int n, long T, double Q) {
  if (n < 2 || T < 2) throw std::invalid_argument("variation_mab_params: need n,T >= 2");
  if (!(Q >= 0.0)) throw std::invalid_argument("variation_mab_params: Q must be >= 0");
  double cap = 1.0 / (15.0 * n);
  double eta = Q > 0.0
                   ? std::min(0.2 * std::sqrt(std::log(static_cast<double>(n)) / Q), cap)
                   : cap;
  int k = static_cast<int>(std::ceil(std::log(static_cast<double>(T))));
  return {eta, 2.0 * eta, std::max(k, 1)};
}

struct LpDefaults {
  double eta;
  double gamma;
  bool clamped;  // eta was reduced to keep gamma = n * eta below 1
};

// eta = sqrt(log(T)/(nT)) and gamma = n eta, so the gamma T bias term is of
// order sqrt(n T log T). If n eta would reach 1, eta is reduced instead.
inline LpDefaults default_lp_params(int n, long T) {
  if (n < 1 || T < 2) throw std::invalid_argument("default_lp_params: need n >= 1, T >= 2");
  double eta = std::sqrt(std::log(static_cast<double>(T)) /
                         (static_cast<double>(n) * static_cast<double>(T)));
  bool clamped = false;
  if (n * eta >= 1.0) {
    eta = 0.5 / n;
    clamped = true;
  }
  return {eta, n * eta, clamped};
}

// ---------------------------------------------------------------------------
// Configs
// ---------------------------------------------------------------------------

struct SparseMabConfig {
  int n = 0;
  long T = 0;
  double L = 0.0;  // budget on sum_t ||l_t||_2^2
  double eta = 0.0, gamma = 0.0;
  bool debug_checks = false;

  static SparseMabConfig make(int n, long T, double L,
                              std::optional<double> eta_override = {},
                              std::optional<double> gamma_override = {}) {
    auto [eta, gamma] = sparse_mab_params(n, T, L);
    SparseMabConfig cfg{n, T, L, eta_override.value_or(eta),
                        gamma_override.value_or(gamma)};
    if (!(cfg.eta > 0.0 && cfg.gamma > 0.0))
      throw std::invalid_argument("SparseMabConfig: eta and gamma must be > 0");
    return cfg;
  }
};

struct VariationMabConfig {
  int n = 0;
  long T = 0;
  double Q = 0.0;
  int k = 0;
  double eta = 0.0, gamma = 0.0;

  static VariationMabConfig make(int n, long T, double Q,
                                 std::optional<int> k_override = {},
                                 std::optional<double> eta_override = {},
                                 std::optional<double> gamma_override = {}) {
    auto [eta, gamma, k] = variation_mab_params(n, T, Q);
    VariationMabConfig cfg{n, T, Q, k_override.value_or(k),
                           eta_override.value_or(eta), gamma_override.value_or(gamma)};
    if (cfg.k < 1) throw std::invalid_argument("VariationMabConfig: k must be >= 1");
    if (!(cfg.eta > 0.0 && cfg.gamma > 0.0))
      throw std::invalid_argument("VariationMabConfig: eta and gamma must be > 0");
    return cfg;
  }
};

struct LpBallConfig {
  int n = 0;
  long T = 0;
  LpParams lp{0.0, 0.0};
  double eta = 0.0, gamma = 0.0;
  LpEstimatorVariant variant = LpEstimatorVariant::unbiased;

  static LpBallConfig make(int n, long T, double p,
                           std::optional<double> eta_override = {},
                           std::optional<double> gamma_override = {},
                           LpEstimatorVariant variant = LpEstimatorVariant::unbiased) {
    LpDefaults d = default_lp_params(n, T);
    LpBallConfig cfg;
    cfg.n = n;
    cfg.T = T;
    cfg.lp = LpParams::make(p);
    cfg.eta = eta_override.value_or(d.eta);
    cfg.gamma = gamma_override.value_or(d.gamma);
    cfg.variant = variant;
    if (!(cfg.eta > 0.0)) throw std::invalid_argument("LpBallConfig: eta must be > 0");
    if (cfg.gamma < n * cfg.eta - 1e-12)
      throw std::invalid_argument("LpBallConfig: gamma must be >= n * eta");
    if (!(cfg.gamma < 1.0)) throw std::invalid_argument("LpBallConfig: gamma must be < 1");
    return cfg;
  }
};

// ---------------------------------------------------------------------------
// Sparse multi-armed bandit (hybrid-regularizer FTRL)
// ---------------------------------------------------------------------------

class SparseMabStrategy {
 public:
  using play_t = MabPlay;

  explicit SparseMabStrategy(SparseMabConfig cfg)
      : cfg_(cfg), params_(cfg.gamma),
        cum_loss_(static_cast<std::size_t>(cfg.n), 0.0),
        iterate_(SimplexPoint::uniform(cfg.n)) {}

  int dim() const { return cfg_.n; }
  long round() const { return t_; }
  const SimplexPoint& iterate() const { return iterate_; }
  const Vec& cum_loss() const { return cum_loss_; }

  void enable_trace() { trace_ = true; }

  play_t plan(Rng& rng) {
    if (stale_) {
      iterate_ = simplex_argmin(cum_loss_, cfg_.eta, params_, &warm_);
      stale_ = false;
    }
    int arm = mab_sample(iterate_, rng);
    return {arm, PlayMode::exploit, iterate_[arm]};
  }

  double loss_of(const play_t& play, std::span<const double> row) const {
    return row[static_cast<std::size_t>(play.arm)];
  }

  void learn(const play_t& play, const Feedback& fb, Rng&) {
    Feedback f = fb;
    f.arm = play.arm;
    Vec est = mab_estimator(f, iterate_);
    if (cfg_.debug_checks) {
      // Estimates must stay within the conditioning regime |l~(a)| <= 1/x(a).
      double bound = (1.0 + 1e-9) / iterate_[play.arm];
      if (std::abs(est[static_cast<std::size_t>(play.arm)]) > bound)
        throw std::logic_error("sparse-mab: estimator magnitude outside regime");
    }
    if (trace_) {
      traced_estimates_.push_back(est);
      traced_iterates_.push_back(iterate_.weights());
    }
    for (std::size_t i = 0; i < cum_loss_.size(); ++i) {
      cum_loss_[i] += est[i];
      if (est[i] != 0.0) stale_ = true;
    }
    ++t_;
  }

  // Be-The-Leader audit over the traced episode. The one-past-the-end iterate
  // is recomputed from the final cumulative loss.
  AuditRecord audit(std::optional<Vec> comparator = {}) const {
    if (!trace_) throw std::logic_error("sparse-mab audit: trace not enabled");
    std::vector<Vec> iterates = traced_iterates_;
    SimplexWarm warm = warm_;
    iterates.push_back(simplex_argmin(cum_loss_, cfg_.eta, params_, &warm).weights());
    HybridParams params = params_;
    auto phi = [params](const Vec& x) { return hybrid_value(x, params); };
    return be_the_leader_audit(traced_estimates_, iterates, cfg_.eta, phi,
                               comparator.value_or(iterates.back()));
  }

 private:
  SparseMabConfig cfg_;
  HybridParams params_;
  Vec cum_loss_;
  long t_ = 1;
  SimplexWarm warm_;
  SimplexPoint iterate_;
  bool stale_ = true;  // iterate needs recomputing (cum_loss changed)
  bool trace_ = false;
  std::vector<Vec> traced_estimates_;
  std::vector<Vec> traced_iterates_;
};

// ---------------------------------------------------------------------------
// Variation-adaptive multi-armed bandit (reservoir-centered estimator)
// ---------------------------------------------------------------------------

class VariationMabStrategy {
 public:
  using play_t = MabPlay;

  explicit VariationMabStrategy(VariationMabConfig cfg)
      : cfg_(cfg), params_(cfg.gamma), reservoir_(cfg.n, cfg.k),
        cum_loss_(static_cast<std::size_t>(cfg.n), 0.0),
        iterate_(SimplexPoint::uniform(cfg.n)) {}

  int dim() const { return cfg_.n; }
  long round() const { return t_; }
  const Reservoir& reservoir() const { return reservoir_; }
  const SimplexPoint& iterate() const { return iterate_; }

  void enable_trace() { trace_ = true; }

  // Reservoir exploration (probability min(1, kn/t)) plays a uniform arm and
  // freezes FTRL; otherwise play from the FTRL iterate.
  play_t plan(Rng& rng) {
    double p = std::min(1.0, static_cast<double>(cfg_.k) * cfg_.n /
                                 static_cast<double>(t_));
    if (rng.uniform() < p) {
      int arm = rng.uniform_int(cfg_.n);
      if (trace_) refresh();
      return {arm, PlayMode::explore, p / cfg_.n};
    }
    refresh();
    int arm = mab_sample(iterate_, rng);
    return {arm, PlayMode::exploit, (1.0 - p) * iterate_[arm]};
  }

  double loss_of(const play_t& play, std::span<const double> row) const {
    return row[static_cast<std::size_t>(play.arm)];
  }

  void learn(const play_t& play, const Feedback& fb, Rng& rng) {
    if (play.mode == PlayMode::explore) {
      reservoir_.observe(play.arm, fb.require(), rng);
      if (trace_) {
        traced_estimates_.emplace_back(static_cast<std::size_t>(cfg_.n), 0.0);
        traced_iterates_.push_back(iterate_.weights());
      }
      ++t_;
      return;
    }
    Feedback f = fb;
    f.arm = play.arm;
    // Until every arm has a sample the center is zero, which reduces the
    // centered estimator to the plain importance-weighted one.
    Vec mu = reservoir_.mean().value_or(Vec(static_cast<std::size_t>(cfg_.n), 0.0));
    Vec est = centered_estimator(f, iterate_, mu);
    if (trace_) {
      traced_estimates_.push_back(est);
      traced_iterates_.push_back(iterate_.weights());
    }
    for (std::size_t i = 0; i < cum_loss_.size(); ++i) {
      cum_loss_[i] += est[i];
      if (est[i] != 0.0) stale_ = true;
    }
    ++t_;
  }

  AuditRecord audit(std::optional<Vec> comparator = {}) const {
    if (!trace_) throw std::logic_error("variation-mab audit: trace not enabled");
    std::vector<Vec> iterates = traced_iterates_;
    SimplexWarm warm = warm_;
    iterates.push_back(simplex_argmin(cum_loss_, cfg_.eta, params_, &warm).weights());
    HybridParams params = params_;
    auto phi = [params](const Vec& x) { return hybrid_value(x, params); };
    return be_the_leader_audit(traced_estimates_, iterates, cfg_.eta, phi,
                               comparator.value_or(iterates.back()));
  }

 private:
  void refresh() {
    if (!stale_) return;
    iterate_ = simplex_argmin(cum_loss_, cfg_.eta, params_, &warm_);
    stale_ = false;
  }

  VariationMabConfig cfg_;
  HybridParams params_;
  Reservoir reservoir_;
  Vec cum_loss_;
  long t_ = 1;
  SimplexWarm warm_;
  SimplexPoint iterate_;
  bool stale_ = true;
  bool trace_ = false;
  std::vector<Vec> traced_estimates_;
  std::vector<Vec> traced_iterates_;
};

// ---------------------------------------------------------------------------
// Linear bandit on the l_p ball (gap-barrier FTRL)
// ---------------------------------------------------------------------------

// Feedback is consumed only on exploration rounds, which is exactly what the
// starved protocol with mu = uniform signed basis delivers; wrapping this
// strategy in StarvedWrap must not change its trajectory.
class LpBallStrategy {
 public:
  using play_t = LpPlay;

  explicit LpBallStrategy(LpBallConfig cfg)
      : cfg_(cfg), cum_loss_(static_cast<std::size_t>(cfg.n), 0.0),
        iterate_(BallPoint::center(cfg.n, cfg.lp)) {}

  int dim() const { return cfg_.n; }
  long round() const { return t_; }
  const BallPoint& iterate() const { return iterate_; }
  const Vec& cum_loss() const { return cum_loss_; }

  void enable_trace() { trace_ = true; }

  play_t plan(Rng& rng) {
    if (stale_) {
      iterate_ = ball_argmin(cum_loss_, cfg_.eta, cfg_.lp);
      stale_ = false;
    }
    return lp_sample(iterate_, cfg_.gamma, cfg_.lp, rng);
  }

  double loss_of(const play_t& play, std::span<const double> row) const {
    return dot(play.action, row);
  }

  void learn(const play_t& play, const Feedback& fb, Rng&) {
    std::optional<double> observed;
    if (play.mode == PlayMode::explore) observed = fb.require();
    Vec est = lp_estimator(play, observed, iterate_, cfg_.gamma, cfg_.lp, cfg_.variant);
    if (trace_) {
      traced_estimates_.push_back(est);
      traced_iterates_.push_back(iterate_.coords());
    }
    for (std::size_t i = 0; i < cum_loss_.size(); ++i) {
      cum_loss_[i] += est[i];
      if (est[i] != 0.0) stale_ = true;
    }
    ++t_;
  }

  AuditRecord audit(std::optional<Vec> comparator = {}) const {
    if (!trace_) throw std::logic_error("lp-ball audit: trace not enabled");
    std::vector<Vec> iterates = traced_iterates_;
    iterates.push_back(ball_argmin(cum_loss_, cfg_.eta, cfg_.lp).coords());
    LpParams lp = cfg_.lp;
    auto phi = [lp](const Vec& x) {
      double s = 0.0;
      for (double v : x) s += std::pow(std::abs(v), lp.p);
      return -std::log(1.0 - s);
    };
    return be_the_leader_audit(traced_estimates_, iterates, cfg_.eta, phi,
                               comparator.value_or(iterates.back()));
  }

 private:
  LpBallConfig cfg_;
  Vec cum_loss_;
  long t_ = 1;
  BallPoint iterate_;
  bool stale_ = true;
  bool trace_ = false;
  std::vector<Vec> traced_estimates_;
  std::vector<Vec> traced_iterates_;
};

// ---------------------------------------------------------------------------
// Starved explore-then-commit baseline
// ---------------------------------------------------------------------------

// Uniform-exploration baseline for the starved multi-armed bandit: play from
// mu (uniform over arms) with probability min(1, (n/t)^{1/3}), otherwise
// commit to the best empirical arm seen on exploration rounds. It only ever
// reads feedback on mu rounds, so it is starved-valid by construction.
class StarvedEtcBaseline {
 public:
  using play_t = MabPlay;

  explicit StarvedEtcBaseline(int n, double explore_scale = 1.0)
      : n_(n), explore_scale_(explore_scale),
        sums_(static_cast<std::size_t>(n), 0.0),
        counts_(static_cast<std::size_t>(n), 0) {
    if (n < 1) throw std::invalid_argument("StarvedEtcBaseline: need n >= 1");
  }

  int dim() const { return n_; }

  play_t plan(Rng& rng) {
    double p = std::min(1.0, explore_scale_ * std::cbrt(static_cast<double>(n_) /
                                                        static_cast<double>(t_)));
    if (rng.uniform() < p) return {rng.uniform_int(n_), PlayMode::explore, p / n_};
    int best = 0;
    double best_mean = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n_; ++i) {
      double m = counts_[static_cast<std::size_t>(i)] > 0
                     ? sums_[static_cast<std::size_t>(i)] / counts_[static_cast<std::size_t>(i)]
                     : 0.0;
      if (m < best_mean) {
        best_mean = m;
        best = i;
      }
    }
    return {best, PlayMode::exploit, 1.0 - p};
  }

  double loss_of(const play_t& play, std::span<const double> row) const {
    return row[static_cast<std::size_t>(play.arm)];
  }

  void learn(const play_t& play, const Feedback& fb, Rng&) {
    ++t_;
    if (play.mode != PlayMode::explore) return;  // never reads withheld feedback
    sums_[static_cast<std::size_t>(play.arm)] += fb.require();
    ++counts_[static_cast<std::size_t>(play.arm)];
  }

 private:
  int n_;
  double explore_scale_;
  long t_ = 1;
  Vec sums_;
  std::vector<long> counts_;
};

// ---------------------------------------------------------------------------
// Single-round helpers
// ---------------------------------------------------------------------------

struct MabRound {
  int arm;
  double suffered;
  bool explored;
};

template <class MabStrategy>
MabRound mab_round(MabStrategy& strategy, Rng& rng, std::span<const double> loss_row) {
  auto play = strategy.plan(rng);
  double suffered = strategy.loss_of(play, loss_row);
  Feedback fb;
  fb.value = suffered;
  fb.arm = play.arm;
  fb.mode = play.mode;
  fb.probability = play.probability;
  strategy.learn(play, fb, rng);
  return {play.arm, suffered, play.mode == PlayMode::explore};
}

inline MabRound sparse_mab_round(SparseMabStrategy& s, Rng& rng,
                                 std::span<const double> loss_row) {
  return mab_round(s, rng, loss_row);
}

inline MabRound variation_mab_round(VariationMabStrategy& s, Rng& rng,
                                    std::span<const double> loss_row) {
  return mab_round(s, rng, loss_row);
}

struct BallRound {
  Vec action;
  double suffered;
  bool explored;
};

inline BallRound lp_ball_round(LpBallStrategy& s, Rng& rng,
                               std::span<const double> loss_row) {
  auto play = s.plan(rng);
  double suffered = s.loss_of(play, loss_row);
  Feedback fb;
  fb.value = suffered;
  fb.mode = play.mode;
  fb.probability = play.probability;
  s.learn(play, fb, rng);
  return {play.action, suffered, play.mode == PlayMode::explore};
}

}  // namespace banditlab
