#pragma once

#include <cmath>
#include <functional>
#include <optional>

#include "banditlab/common.hpp"
#include "banditlab/regularizers.hpp"
#include "banditlab/rng.hpp"

// Sampling schemes and loss estimators: the identity scheme with
// importance-weighted estimator on the simplex, its centered variant, the
// reservoir estimator of the running mean loss, and the signed-basis
// exploration scheme with its estimator on the l_p ball.

namespace banditlab {

enum class PlayMode { exploit, explore };

// One round of bandit feedback: the suffered loss of the realized action.
// `value` is empty when the starved protocol withheld it.
struct Feedback {
  std::optional<double> value;
  int arm = -1;  // realized arm for simplex play
  PlayMode mode = PlayMode::exploit;
  double probability = 1.0;  // probability of the realized branch

  double require() const {
    if (!value) throw StarvedContractError();
    return *value;
  }
};

// ---------------------------------------------------------------------------
// Simplex sampling and estimation
// ---------------------------------------------------------------------------

// Identity sampling scheme: arm i with probability x_i.
inline int mab_sample(const SimplexPoint& x, Rng& rng) {
  double u = rng.uniform();
  double acc = 0.0;
  int last = x.size() - 1;
  for (int i = 0; i < last; ++i) {
    acc += x[i];
    if (u < acc) return i;
  }
  return last;
}

// Importance-weighted estimator: l(arm)/x(arm) on the played arm, 0 elsewhere.
inline Vec mab_estimator(const Feedback& fb, const SimplexPoint& x) {
  if (fb.arm < 0 || fb.arm >= x.size())
    throw std::invalid_argument("mab_estimator: arm out of range");
  if (x[fb.arm] <= kSimplexFloor)
    throw std::domain_error("mab_estimator: played arm at probability floor");
  Vec est(static_cast<std::size_t>(x.size()), 0.0);
  est[static_cast<std::size_t>(fb.arm)] = fb.require() / x[fb.arm];
  return est;
}

// Centered variant: (l - mu_hat)(arm)/x(arm) on the played arm, plus mu_hat
// everywhere. Conditionally unbiased given mu_hat.
inline Vec centered_estimator(const Feedback& fb, const SimplexPoint& x,
                              std::span<const double> mu_hat) {
  if (fb.arm < 0 || fb.arm >= x.size())
    throw std::invalid_argument("centered_estimator: arm out of range");
  if (static_cast<int>(mu_hat.size()) != x.size())
    throw std::invalid_argument("centered_estimator: mu_hat size mismatch");
  require_finite(mu_hat, "centered_estimator mu_hat");
  if (x[fb.arm] <= kSimplexFloor)
    throw std::domain_error("centered_estimator: played arm at probability floor");
  Vec est(mu_hat.begin(), mu_hat.end());
  est[static_cast<std::size_t>(fb.arm)] +=
      (fb.require() - mu_hat[static_cast<std::size_t>(fb.arm)]) / x[fb.arm];
  return est;
}

// ---------------------------------------------------------------------------
// Reservoir estimator of the running mean loss
// ---------------------------------------------------------------------------

// Per-arm reservoirs of capacity k over the observed loss values. Exploring
// with probability min(1, kn/t) at round t keeps each arm's buffer an
// (approximately) uniform sample of its past losses, so the buffer mean
// estimates mu_t(i) = (1/t) sum_{s<=t} l_s(i) with variance Q/(kt).
class Reservoir {
 public:
  Reservoir(int n, int k) : k_(k), buffers_(static_cast<std::size_t>(n)),
                            counts_(static_cast<std::size_t>(n), 0) {
    if (n < 1 || k < 1) throw std::invalid_argument("Reservoir: n and k must be >= 1");
  }

  int arms() const { return static_cast<int>(buffers_.size()); }
  int capacity() const { return k_; }
  long count(int arm) const { return counts_[static_cast<std::size_t>(arm)]; }

  bool ready() const {
    for (const auto& b : buffers_)
      if (b.empty()) return false;
    return true;
  }

  // Standard reservoir update: the j-th observation of an arm displaces a
  // uniformly random slot with probability k/j.
  void observe(int arm, double value, Rng& rng) {
    auto& buf = buffers_[static_cast<std::size_t>(arm)];
    long c = ++counts_[static_cast<std::size_t>(arm)];
    if (static_cast<int>(buf.size()) < k_) {
      buf.push_back(value);
      return;
    }
    long j = rng.uniform_int(static_cast<int>(c));
    if (j < k_) buf[static_cast<std::size_t>(j)] = value;
  }

  // Per-arm buffer means; empty when any arm has no observation yet.
  std::optional<Vec> mean() const {
    Vec mu(buffers_.size());
    for (std::size_t i = 0; i < buffers_.size(); ++i) {
      if (buffers_[i].empty()) return std::nullopt;
      mu[i] = sum(buffers_[i]) / static_cast<double>(buffers_[i].size());
    }
    return mu;
  }

  const Vec& buffer(int arm) const { return buffers_[static_cast<std::size_t>(arm)]; }

 private:
  int k_;
  std::vector<Vec> buffers_;
  std::vector<long> counts_;
};

struct ReservoirStep {
  bool explored = false;
  int arm = -1;
  double value = 0.0;  // observed loss of the explored arm
};

// With probability min(1, kn/t) marks round t as exploration, picks an arm
// uniformly, observes its loss through `loss_of_arm`, and feeds the reservoir.
inline ReservoirStep reservoir_step(Reservoir& res, long t, Rng& rng,
                                    const std::function<double(int)>& loss_of_arm) {
  if (t < 1) throw std::invalid_argument("reservoir_step: t must be >= 1");
  double p = std::min(1.0, static_cast<double>(res.capacity()) * res.arms() /
                               static_cast<double>(t));
  if (rng.uniform() >= p) return {};
  ReservoirStep step;
  step.explored = true;
  step.arm = rng.uniform_int(res.arms());
  step.value = loss_of_arm(step.arm);
  res.observe(step.arm, step.value, rng);
  return step;
}

inline std::optional<Vec> reservoir_mean(const Reservoir& res) { return res.mean(); }

// ---------------------------------------------------------------------------
// l_p ball sampling and estimation
// ---------------------------------------------------------------------------

// Committed action on the ball: either a uniformly drawn signed basis vector
// (exploration, probability max(d(x), gamma)) or the boundary projection
// x/||x||_p (exploitation).
struct LpPlay {
  Vec action;
  PlayMode mode = PlayMode::exploit;
  double probability = 1.0;  // probability of the realized branch
  int coord = -1;            // explored coordinate
  int sign = 0;              // explored sign
};

inline LpPlay lp_sample(const BallPoint& x, double gamma, const LpParams& params,
                        Rng& rng) {
  if (!(gamma > 0.0 && gamma < 1.0))
    throw std::invalid_argument("lp_sample: gamma must lie in (0,1)");
  const int n = x.size();
  double p_explore = std::max(x.gap(), gamma);
  LpPlay play;
  if (rng.uniform() < p_explore) {
    int atom = rng.uniform_int(2 * n);
    play.mode = PlayMode::explore;
    play.probability = p_explore;
    play.coord = atom / 2;
    play.sign = (atom % 2 == 0) ? 1 : -1;
    play.action.assign(static_cast<std::size_t>(n), 0.0);
    play.action[static_cast<std::size_t>(play.coord)] = play.sign;
    return play;
  }
  double norm = lp_norm(x.coords(), params.p);
  // d(0) = 1 makes the exploit branch unreachable at the center.
  if (!(norm > 0.0)) throw std::logic_error("lp_sample: exploit branch at center");
  play.mode = PlayMode::exploit;
  play.probability = 1.0 - p_explore;
  play.action.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) play.action[static_cast<std::size_t>(i)] = x[i] / norm;
  return play;
}

enum class LpEstimatorVariant {
  unbiased,       // denominator max(d(x), gamma): exactly unbiased
  paper_literal,  // denominator max(1 - ||x||_p, gamma): biased by a factor in [1, p]
};

// Exploration rounds yield n * value / D on the explored signed coordinate;
// exploitation rounds yield the zero vector (their feedback is never used).
inline Vec lp_estimator(const LpPlay& play, std::optional<double> observed,
                        const BallPoint& x, double gamma, const LpParams& params,
                        LpEstimatorVariant variant = LpEstimatorVariant::unbiased) {
  Vec est(static_cast<std::size_t>(x.size()), 0.0);
  if (play.mode == PlayMode::exploit) return est;
  if (play.coord < 0 || play.coord >= x.size() || (play.sign != 1 && play.sign != -1))
    throw std::invalid_argument("lp_estimator: explore feedback without basis action");
  if (!observed) throw StarvedContractError();
  double denom;
  if (variant == LpEstimatorVariant::unbiased) {
    denom = std::max(x.gap(), gamma);
  } else {
    denom = std::max(1.0 - lp_norm(x.coords(), params.p), gamma);
  }
  est[static_cast<std::size_t>(play.coord)] =
      static_cast<double>(x.size()) * *observed / denom * play.sign;
  return est;
}

}  // namespace banditlab
