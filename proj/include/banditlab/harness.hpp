#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "banditlab/common.hpp"
#include "banditlab/environments.hpp"
#include "banditlab/strategies.hpp"

// Episode runner, pseudo-regret computation against the best fixed action,
// log-log scaling fits, and CSV persistence. Episodes replay byte-identically
// from (config, seed); sweeps reduce per-seed results in seed order so their
// output is schedule-independent.

namespace banditlab {

struct RegretCurve {
  Vec cum_player;  // cumulative suffered loss, per round
  Vec cum_best;    // cumulative loss of the best fixed action, per round
  Vec regret;      // their difference
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;

  double final_regret() const { return regret.empty() ? 0.0 : regret.back(); }
};

enum class ComparatorDomain { simplex, lp_ball, gaussian };

// Measures the best fixed action against the realized oblivious sequence.
// `final_comparator` fixes the comparator on the full horizon (the
// pseudo-regret convention used everywhere here); the per-prefix mode exists
// for plotting only.
inline Vec best_fixed_loss(const LossSequence& seq, ComparatorDomain domain,
                           double q = 2.0, bool final_comparator = true) {
  Vec out(static_cast<std::size_t>(seq.T));
  if (domain == ComparatorDomain::simplex) {
    Vec totals(static_cast<std::size_t>(seq.n), 0.0);
    for (long t = 0; t < seq.T; ++t) {
      auto row = seq.row(t);
      for (int i = 0; i < seq.n; ++i) totals[static_cast<std::size_t>(i)] += row[static_cast<std::size_t>(i)];
    }
    if (final_comparator) {
      std::size_t best = argmin_index(totals);
      double acc = 0.0;
      for (long t = 0; t < seq.T; ++t) {
        acc += seq.row(t)[best];
        out[static_cast<std::size_t>(t)] = acc;
      }
    } else {
      Vec prefix(static_cast<std::size_t>(seq.n), 0.0);
      for (long t = 0; t < seq.T; ++t) {
        auto row = seq.row(t);
        for (int i = 0; i < seq.n; ++i) prefix[static_cast<std::size_t>(i)] += row[static_cast<std::size_t>(i)];
        out[static_cast<std::size_t>(t)] = prefix[argmin_index(prefix)];
      }
    }
    return out;
  }
  if (domain == ComparatorDomain::lp_ball) {
    // Holder extremizer of the final cumulative loss: x*_i proportional to
    // -sign(S_i) |S_i|^{q-1}, normalized onto the l_p sphere, where <S,x*> =
    // -||S||_q.
    Vec total(static_cast<std::size_t>(seq.n), 0.0);
    for (long t = 0; t < seq.T; ++t) {
      auto row = seq.row(t);
      for (int i = 0; i < seq.n; ++i) total[static_cast<std::size_t>(i)] += row[static_cast<std::size_t>(i)];
    }
    double norm_q = lp_norm(total, q);
    Vec comparator(static_cast<std::size_t>(seq.n), 0.0);
    if (norm_q > 0.0)
      for (int i = 0; i < seq.n; ++i) {
        double s = total[static_cast<std::size_t>(i)];
        comparator[static_cast<std::size_t>(i)] =
            -std::copysign(std::pow(std::abs(s) / norm_q, q - 1.0), s);
      }
    double acc = 0.0;
    for (long t = 0; t < seq.T; ++t) {
      acc += dot(seq.row(t), comparator);
      out[static_cast<std::size_t>(t)] = acc;
    }
    return out;
  }
  // Gaussian lower-bound environment: the comparator on expected losses has
  // the closed form -rho (1 + eps^q n)^{1/q} per round.
  double qq = seq.param("q");
  double eps = seq.param("epsilon");
  double rho = seq.param("rho");
  double ydim = seq.param("ydim");
  double per_round = -rho * std::pow(1.0 + std::pow(eps, qq) * ydim, 1.0 / qq);
  for (long t = 0; t < seq.T; ++t)
    out[static_cast<std::size_t>(t)] = per_round * static_cast<double>(t + 1);
  return out;
}

struct EpisodeOptions {
  bool debug_audit = false;   // trace the episode and check the FTRL audit
  double audit_tolerance = 1e-6;
  std::uint64_t config_hash = 0;
  ComparatorDomain domain = ComparatorDomain::simplex;
  double comparator_q = 2.0;  // dual exponent for the ball comparator
};

// Plays strategy against the pregenerated sequence for T rounds. The
// strategy's random stream is derived from the episode seed, independent of
// the environment stream.
template <class Strategy>
RegretCurve run_episode(Strategy& strategy, const LossSequence& env,
                        std::uint64_t seed, const EpisodeOptions& opts = {}) {
  if (strategy.dim() != env.n)
    throw std::invalid_argument("run_episode: strategy/environment dimension mismatch");
  Rng rng(derive_seed(seed, 1));
  RegretCurve curve;
  curve.seed = seed;
  curve.config_hash = opts.config_hash;
  curve.cum_player.resize(static_cast<std::size_t>(env.T));
  double acc = 0.0;
  for (long t = 0; t < env.T; ++t) {
    auto play = strategy.plan(rng);
    double suffered = strategy.loss_of(play, env.row(t));
    Feedback fb;
    fb.value = suffered;
    fb.mode = play.mode;
    fb.probability = play.probability;
    strategy.learn(play, fb, rng);
    acc += suffered;
    curve.cum_player[static_cast<std::size_t>(t)] = acc;
  }
  curve.cum_best = best_fixed_loss(env, opts.domain, opts.comparator_q);
  curve.regret.resize(curve.cum_player.size());
  for (std::size_t t = 0; t < curve.regret.size(); ++t)
    curve.regret[t] = curve.cum_player[t] - curve.cum_best[t];
  return curve;
}

// Run one episode per seed, possibly concurrently; results are ordered by
// their position in `seeds` regardless of scheduling.
inline std::vector<RegretCurve> run_seeds(
    const std::vector<std::uint64_t>& seeds,
    const std::function<RegretCurve(std::uint64_t)>& episode, int threads = 0) {
  std::vector<RegretCurve> curves(seeds.size());
  if (threads <= 0)
    threads = static_cast<int>(std::thread::hardware_concurrency());
  threads = std::max(1, std::min<int>(threads, static_cast<int>(seeds.size())));
  if (threads == 1) {
    for (std::size_t i = 0; i < seeds.size(); ++i) curves[i] = episode(seeds[i]);
    return curves;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = static_cast<std::size_t>(w); i < seeds.size();
             i += static_cast<std::size_t>(threads))
          curves[i] = episode(seeds[i]);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& err : errors)
    if (err) std::rethrow_exception(err);
  return curves;
}

inline double mean_final_regret(const std::vector<RegretCurve>& curves) {
  double s = 0.0;
  for (const auto& c : curves) s += c.final_regret();
  return s / static_cast<double>(curves.size());
}

inline double stderr_final_regret(const std::vector<RegretCurve>& curves) {
  if (curves.size() < 2) return 0.0;
  double mean = mean_final_regret(curves);
  double ss = 0.0;
  for (const auto& c : curves) {
    double d = c.final_regret() - mean;
    ss += d * d;
  }
  return std::sqrt(ss / (static_cast<double>(curves.size()) *
                         (static_cast<double>(curves.size()) - 1.0)));
}

// ---------------------------------------------------------------------------
// Scaling fit
// ---------------------------------------------------------------------------

struct ScalingFit {
  double slope = 0.0;
  double stderr_slope = 0.0;
  double intercept = 0.0;
};

// Least-squares slope in log-log space with its standard error.
inline ScalingFit scaling_fit(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 3) throw std::invalid_argument("scaling_fit: need >= 3 points");
  std::size_t m = points.size();
  double mx = 0.0, my = 0.0;
  std::vector<double> xs(m), ys(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (!(points[i].first > 0.0 && points[i].second > 0.0))
      throw std::invalid_argument("scaling_fit: points must be positive");
    xs[i] = std::log(points[i].first);
    ys[i] = std::log(points[i].second);
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(m);
  my /= static_cast<double>(m);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  ScalingFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    double r = ys[i] - (fit.intercept + fit.slope * xs[i]);
    rss += r * r;
  }
  if (m > 2) fit.stderr_slope = std::sqrt(rss / (static_cast<double>(m) - 2.0) / sxx);
  return fit;
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

inline void save_curve_csv(const RegretCurve& curve, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_curve_csv: cannot open " + path);
  out << "# config_hash=" << curve.config_hash << " seed=" << curve.seed << "\n";
  out << "t,cum_player,cum_best,regret\n";
  char buf[128];
  for (std::size_t t = 0; t < curve.regret.size(); ++t) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g\n", t + 1,
                  curve.cum_player[t], curve.cum_best[t], curve.regret[t]);
    out << buf;
  }
}

struct LoadedCurve {
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  Vec cum_player, cum_best, regret;
};

inline LoadedCurve load_curve_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_curve_csv: cannot open " + path);
  LoadedCurve curve;
  std::string line;
  std::getline(in, line);
  if (std::sscanf(line.c_str(), "# config_hash=%llu seed=%llu",
                  reinterpret_cast<unsigned long long*>(&curve.config_hash),
                  reinterpret_cast<unsigned long long*>(&curve.seed)) != 2)
    throw std::runtime_error("load_curve_csv: bad header in " + path);
  std::getline(in, line);  // column names
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::size_t t;
    double cp, cb, r;
    if (std::sscanf(line.c_str(), "%zu,%lg,%lg,%lg", &t, &cp, &cb, &r) != 4)
      throw std::runtime_error("load_curve_csv: bad row in " + path);
    curve.cum_player.push_back(cp);
    curve.cum_best.push_back(cb);
    curve.regret.push_back(r);
  }
  return curve;
}

}  // namespace banditlab
