#pragma once

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "banditlab/common.hpp"
#include "banditlab/estimators.hpp"
#include "banditlab/rng.hpp"

// Oblivious loss-sequence generators for each strategy's hypothesis class,
// the Gaussian lower-bound construction for l_p balls with p > 2, the
// starved-bandit protocol wrapper, and sequence statistics. Sequences are
// generated before play and immutable afterwards.

namespace banditlab {

enum class SeqKind {
  sparse_random,
  sparse_hidden_good,
  low_variation,
  gaussian_lb,
  starved_bernoulli,
  ball_iid,
};

inline const char* seq_kind_name(SeqKind k) {
  switch (k) {
    case SeqKind::sparse_random: return "sparse-random";
    case SeqKind::sparse_hidden_good: return "sparse-hidden-good";
    case SeqKind::low_variation: return "low-variation";
    case SeqKind::gaussian_lb: return "gaussian-lb";
    case SeqKind::starved_bernoulli: return "starved-bernoulli";
    case SeqKind::ball_iid: return "ball-iid";
  }
  throw std::invalid_argument("seq_kind_name: unknown kind");
}

inline SeqKind seq_kind_from_name(const std::string& name) {
  for (SeqKind k : {SeqKind::sparse_random, SeqKind::sparse_hidden_good,
                    SeqKind::low_variation, SeqKind::gaussian_lb,
                    SeqKind::starved_bernoulli, SeqKind::ball_iid})
    if (name == seq_kind_name(k)) return k;
  throw std::invalid_argument("unknown sequence kind: " + name);
}

// T x n loss matrix, row-major. Entries lie in [-1, 1] for all bounded kinds;
// the Gaussian kind is unclipped and carries its budget certificate in
// `params` instead.
struct LossSequence {
  SeqKind kind;
  int n = 0;
  long T = 0;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, double>> params;
  Vec data;

  std::span<const double> row(long t) const {
    return std::span<const double>(data).subspan(static_cast<std::size_t>(t) *
                                                     static_cast<std::size_t>(n),
                                                 static_cast<std::size_t>(n));
  }

  double param(const std::string& key) const {
    for (const auto& [k, v] : params)
      if (k == key) return v;
    throw std::invalid_argument("LossSequence: missing param " + key);
  }

  bool has_param(const std::string& key) const {
    for (const auto& [k, v] : params)
      if (k == key) return true;
    return false;
  }
};

// ---------------------------------------------------------------------------
// Bounded adversaries
// ---------------------------------------------------------------------------

enum class SparseStyle { random_support, hidden_good_arm };

// s-sparse losses in [-1,1]^n. `random_support` scatters s uniform values per
// round; `hidden_good_arm` plants one fixed arm at loss -1 every round among
// the s nonzeros, which makes a single good arm hide in a sea of zero-mean
// noise. Both guarantee ||l_t||_0 <= s, hence sum ||l_t||_2^2 <= sT.
inline LossSequence gen_sparse(int n, long T, int s, SparseStyle style, Rng& rng,
                               std::uint64_t seed_tag = 0) {
  if (n < 1 || T < 1) throw std::invalid_argument("gen_sparse: need n,T >= 1");
  if (s < 0 || s > n) throw std::invalid_argument("gen_sparse: s out of range");
  LossSequence seq;
  seq.kind = style == SparseStyle::random_support ? SeqKind::sparse_random
                                                  : SeqKind::sparse_hidden_good;
  seq.n = n;
  seq.T = T;
  seq.seed = seed_tag;
  seq.data.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(T), 0.0);

  int good = -1;
  if (style == SparseStyle::hidden_good_arm && s >= 1) good = rng.uniform_int(n);

  std::vector<int> picks(static_cast<std::size_t>(std::max(s, 1)));
  for (long t = 0; t < T; ++t) {
    double* row = seq.data.data() + static_cast<std::size_t>(t) * n;
    if (style == SparseStyle::random_support) {
      if (s > 0) {
        rng.sample_without_replacement(n, s, std::span<int>(picks.data(), s));
        for (int j = 0; j < s; ++j) row[picks[static_cast<std::size_t>(j)]] = rng.uniform(-1.0, 1.0);
      }
    } else if (s >= 1) {
      row[good] = -1.0;
      int extra = s - 1;
      if (extra > 0) {
        rng.sample_without_replacement(n - 1, extra, std::span<int>(picks.data(), extra));
        for (int j = 0; j < extra; ++j) {
          int idx = picks[static_cast<std::size_t>(j)];
          if (idx >= good) ++idx;  // skip the planted arm
          row[idx] = rng.uniform(-1.0, 1.0);
        }
      }
    }
  }
  seq.params.emplace_back("s", static_cast<double>(s));
  if (good >= 0) seq.params.emplace_back("good_arm", static_cast<double>(good));
  return seq;
}

// Near-stationary sequence: a base vector plus centered perturbations scaled
// so the realized variation lands in [0.9 Q, Q] while entries stay in [-1,1].
inline LossSequence gen_low_variation(int n, long T, double Q, Rng& rng,
                                      std::uint64_t seed_tag = 0) {
  if (n < 1 || T < 1) throw std::invalid_argument("gen_low_variation: need n,T >= 1");
  double nT = static_cast<double>(n) * static_cast<double>(T);
  if (!(Q >= 0.0 && Q <= nT))
    throw std::invalid_argument("gen_low_variation: Q must lie in [0, nT]");

  const double target = 0.95 * Q;
  const double delta = Q > 0.0 ? std::sqrt(3.0 * target / nT) : 0.0;
  const double margin = 3.0 * delta;
  if (margin >= 1.0)
    throw std::invalid_argument("gen_low_variation: infeasible (Q, delta) pair");

  LossSequence seq;
  seq.kind = SeqKind::low_variation;
  seq.n = n;
  seq.T = T;
  seq.seed = seed_tag;

  Vec base(static_cast<std::size_t>(n));
  for (double& b : base) b = rng.uniform(-(1.0 - margin), 1.0 - margin);

  seq.data.resize(static_cast<std::size_t>(n) * static_cast<std::size_t>(T));
  if (Q == 0.0) {
    for (long t = 0; t < T; ++t)
      std::copy(base.begin(), base.end(),
                seq.data.begin() + static_cast<std::size_t>(t) * n);
    seq.params.emplace_back("Q", 0.0);
    seq.params.emplace_back("realized_Q", 0.0);
    return seq;
  }

  // Raw perturbations, exactly centered per coordinate so the sequence mean
  // equals `base` and the variation is the perturbation energy.
  Vec u(static_cast<std::size_t>(n) * static_cast<std::size_t>(T));
  Vec mean(static_cast<std::size_t>(n), 0.0);
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = rng.uniform(-delta, delta);
  for (long t = 0; t < T; ++t)
    for (int i = 0; i < n; ++i) mean[static_cast<std::size_t>(i)] += u[static_cast<std::size_t>(t) * n + i];
  for (double& m : mean) m /= static_cast<double>(T);
  double energy = 0.0;
  for (long t = 0; t < T; ++t)
    for (int i = 0; i < n; ++i) {
      double& v = u[static_cast<std::size_t>(t) * n + i];
      v -= mean[static_cast<std::size_t>(i)];
      energy += v * v;
    }

  double alpha = std::sqrt(target / energy);
  for (int i = 0; i < n; ++i) {
    double peak = 0.0;
    for (long t = 0; t < T; ++t)
      peak = std::max(peak, std::abs(u[static_cast<std::size_t>(t) * n + i]));
    if (peak > 0.0)
      alpha = std::min(alpha, (1.0 - std::abs(base[static_cast<std::size_t>(i)])) / peak);
  }
  double realized = alpha * alpha * energy;
  if (realized < 0.9 * Q)
    throw std::invalid_argument("gen_low_variation: infeasible (Q, delta) pair");

  for (long t = 0; t < T; ++t)
    for (int i = 0; i < n; ++i)
      seq.data[static_cast<std::size_t>(t) * n + i] =
          base[static_cast<std::size_t>(i)] + alpha * u[static_cast<std::size_t>(t) * n + i];
  seq.params.emplace_back("Q", Q);
  seq.params.emplace_back("realized_Q", realized);
  return seq;
}

// I.i.d. bounded losses for the ball game: a fixed drift direction plus
// uniform noise, capped so that ||l_t||_q <= 1 (the polar-body constraint).
inline LossSequence gen_ball_iid(int n, long T, double q, double mean_scale,
                                 double noise_scale, Rng& rng,
                                 std::uint64_t seed_tag = 0) {
  if (n < 1 || T < 1) throw std::invalid_argument("gen_ball_iid: need n,T >= 1");
  if (!(q > 1.0)) throw std::invalid_argument("gen_ball_iid: q must be > 1");
  if (!(mean_scale >= 0.0 && mean_scale < 1.0))
    throw std::invalid_argument("gen_ball_iid: mean_scale must lie in [0,1)");
  LossSequence seq;
  seq.kind = SeqKind::ball_iid;
  seq.n = n;
  seq.T = T;
  seq.seed = seed_tag;

  Vec drift(static_cast<std::size_t>(n));
  for (double& d : drift) d = rng.normal();
  double dn = lp_norm(drift, q);
  for (double& d : drift) d *= mean_scale / dn;

  const double amp = noise_scale / std::pow(static_cast<double>(n), 1.0 / q);
  seq.data.resize(static_cast<std::size_t>(n) * static_cast<std::size_t>(T));
  for (long t = 0; t < T; ++t) {
    double* row = seq.data.data() + static_cast<std::size_t>(t) * n;
    for (int i = 0; i < n; ++i)
      row[i] = drift[static_cast<std::size_t>(i)] + rng.uniform(-amp, amp);
    double norm = lp_norm(std::span<const double>(row, static_cast<std::size_t>(n)), q);
    if (norm > 1.0)
      for (int i = 0; i < n; ++i) row[i] /= norm * (1.0 + 1e-12);
  }
  seq.params.emplace_back("q", q);
  seq.params.emplace_back("mean_scale", mean_scale);
  seq.params.emplace_back("noise_scale", noise_scale);
  return seq;
}

// ---------------------------------------------------------------------------
// Gaussian lower-bound environment (l_p ball, p > 2)
// ---------------------------------------------------------------------------

// Kummer's confluent hypergeometric 1F1(a; b; z) by series, after reflecting
// negative arguments through 1F1(a,b,z) = e^z 1F1(b-a, b, -z) so every term
// is positive.
inline double hyp1f1(double a, double b, double z) {
  if (z < 0.0) return std::exp(z) * hyp1f1(b - a, b, -z);
  double term = 1.0, total = 1.0;
  for (int k = 0; k < 500; ++k) {
    term *= (a + k) * z / ((b + k) * (k + 1));
    total += term;
    if (std::abs(term) <= 1e-17 * total) return total;
  }
  throw NumericError("hyp1f1: series did not converge");
}

// E |X|^q for X ~ N(m, sigma^2), via the Gamma/confluent closed form.
inline double gauss_abs_moment(double q, double m, double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("gauss_abs_moment: sigma must be > 0");
  double c = std::pow(sigma, q) * std::pow(2.0, q / 2.0) *
             std::tgamma((q + 1.0) / 2.0) / std::sqrt(M_PI);
  return c * hyp1f1(-q / 2.0, 0.5, -m * m / (2.0 * sigma * sigma));
}

// Parameters of the hard Gaussian environment on K = {(x,y): |x|^p + ||y||_p^p <= 1}.
// epsilon solves epsilon^q = C / sqrt(T); xi is a uniformly drawn sign vector.
struct GaussianLbParams {
  int n = 0;  // dimension of the y block; ambient dimension is n + 1
  long T = 0;
  double p = 0.0, q = 0.0;
  double C = 0.0;
  double epsilon = 0.0;
  std::vector<int> xi;
  bool large_T_regime = true;  // T >= n^max(2, (p-1)/(p-2)); advisory only

  static GaussianLbParams make(int n, long T, double p, double C, Rng& rng) {
    if (!(p > 2.0)) throw std::invalid_argument("GaussianLbParams: p must be > 2");
    if (!(C > 0.0 && C < 1.0)) throw std::invalid_argument("GaussianLbParams: C in (0,1)");
    if (n < 1 || T < 1) throw std::invalid_argument("GaussianLbParams: need n,T >= 1");
    GaussianLbParams params;
    params.n = n;
    params.T = T;
    params.p = p;
    params.q = p / (p - 1.0);
    params.C = C;
    params.epsilon = std::pow(C / std::sqrt(static_cast<double>(T)), 1.0 / params.q);
    params.xi.resize(static_cast<std::size_t>(n));
    for (int& s : params.xi) s = rng.sign();
    double power = std::max(2.0, (p - 1.0) / (p - 2.0));
    params.large_T_regime =
        static_cast<double>(T) >= std::pow(static_cast<double>(n), power);
    return params;
  }
};

// Losses l_t = (w_t, z_t) with w_t ~ N(-1,1) and z_t ~ N(eps xi, n^{-2/q} I),
// rescaled by the constant rho that makes the analytic moment E||l||_q^q
// equal 1. The certificate params record rho and the moments.
inline LossSequence gen_gaussian_lb(const GaussianLbParams& params, Rng& rng,
                                    std::uint64_t seed_tag = 0) {
  const int n = params.n;
  const double q = params.q;
  const double sigma_z = std::pow(static_cast<double>(n), -1.0 / q);

  double moment_w = gauss_abs_moment(q, -1.0, 1.0);
  double moment_z = gauss_abs_moment(q, params.epsilon, sigma_z);
  double raw_moment = moment_w + n * moment_z;
  double rho = std::pow(raw_moment, -1.0 / q);

  LossSequence seq;
  seq.kind = SeqKind::gaussian_lb;
  seq.n = n + 1;
  seq.T = params.T;
  seq.seed = seed_tag;
  seq.data.resize(static_cast<std::size_t>(seq.n) * static_cast<std::size_t>(params.T));
  for (long t = 0; t < params.T; ++t) {
    double* row = seq.data.data() + static_cast<std::size_t>(t) * seq.n;
    row[0] = rho * rng.normal(-1.0, 1.0);
    for (int i = 0; i < n; ++i)
      row[i + 1] = rho * rng.normal(params.epsilon * params.xi[static_cast<std::size_t>(i)],
                                    sigma_z);
  }
  seq.params.emplace_back("p", params.p);
  seq.params.emplace_back("q", q);
  seq.params.emplace_back("C", params.C);
  seq.params.emplace_back("epsilon", params.epsilon);
  seq.params.emplace_back("ydim", static_cast<double>(n));
  seq.params.emplace_back("rho", rho);
  seq.params.emplace_back("raw_moment", raw_moment);
  return seq;
}

// Per-round information content of an action (x, y) against the Gaussian
// environment: eps^2 ||y||_2^2 / sigma^2 with sigma^2 = x^2 + ||y||_2^2 / n^{2/q}.
// Summed over rounds this is the quantity that caps how fast xi is learned.
inline double info_diagnostic(std::span<const double> action,
                              const GaussianLbParams& params) {
  if (static_cast<int>(action.size()) != params.n + 1)
    throw std::invalid_argument("info_diagnostic: action must have dimension n+1");
  double x = action[0];
  double y2 = 0.0;
  for (int i = 1; i <= params.n; ++i) y2 += action[static_cast<std::size_t>(i)] * action[static_cast<std::size_t>(i)];
  if (y2 == 0.0) return 0.0;
  double sigma2 = x * x + y2 * std::pow(static_cast<double>(params.n), -2.0 / params.q);
  return params.epsilon * params.epsilon * y2 / sigma2;
}

// ---------------------------------------------------------------------------
// Starved multi-armed bandit environment
// ---------------------------------------------------------------------------

// Arm 0: Bernoulli(1/2 +- eps) loss (sign drawn once per episode); arm 1:
// Bernoulli(1/2); every other arm: loss 1 each round.
inline LossSequence gen_starved_bernoulli(int n, long T, double epsilon, Rng& rng,
                                          std::uint64_t seed_tag = 0) {
  if (n < 2) throw std::invalid_argument("gen_starved_bernoulli: need n >= 2");
  if (!(epsilon >= 0.0 && epsilon < 0.5))
    throw std::invalid_argument("gen_starved_bernoulli: epsilon must lie in [0, 1/2)");
  LossSequence seq;
  seq.kind = SeqKind::starved_bernoulli;
  seq.n = n;
  seq.T = T;
  seq.seed = seed_tag;
  int sign = rng.sign();
  double mean1 = 0.5 + sign * epsilon;
  seq.data.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(T), 1.0);
  for (long t = 0; t < T; ++t) {
    double* row = seq.data.data() + static_cast<std::size_t>(t) * n;
    row[0] = rng.uniform() < mean1 ? 1.0 : 0.0;
    row[1] = rng.uniform() < 0.5 ? 1.0 : 0.0;
  }
  seq.params.emplace_back("epsilon", epsilon);
  seq.params.emplace_back("sign", static_cast<double>(sign));
  return seq;
}

// Enforces the starved-bandit feedback contract around any strategy that
// declares, per round, whether it played from the fixed exploration
// distribution mu (mode == explore) or from its own policy. Policy rounds
// never materialize the loss value, so a strategy reading it trips
// StarvedContractError by construction.
template <class Inner>
class StarvedWrap {
 public:
  using play_t = typename Inner::play_t;

  explicit StarvedWrap(Inner inner) : inner_(std::move(inner)) {}

  int dim() const { return inner_.dim(); }

  play_t plan(Rng& rng) { return inner_.plan(rng); }

  double loss_of(const play_t& play, std::span<const double> row) const {
    return inner_.loss_of(play, row);
  }

  void learn(const play_t& play, const Feedback& fb, Rng& rng) {
    Feedback filtered = fb;
    if (play.mode != PlayMode::explore) {
      filtered.value.reset();  // from-policy branch: feedback withheld
    } else {
      ++exploration_rounds_;
    }
    inner_.learn(play, filtered, rng);
  }

  long exploration_rounds() const { return exploration_rounds_; }
  const Inner& inner() const { return inner_; }
  Inner& inner() { return inner_; }

 private:
  Inner inner_;
  long exploration_rounds_ = 0;
};

// ---------------------------------------------------------------------------
// Sequence statistics and serialization
// ---------------------------------------------------------------------------

struct SequenceStats {
  double l2_sum = 0.0;     // sum_t ||l_t||_2^2
  double variation = 0.0;  // sum_t ||l_t - mean||_2^2
  int max_sparsity = 0;    // max_t ||l_t||_0
  bool in_range = true;    // all entries within [-1, 1]
};

inline SequenceStats sequence_stats(const LossSequence& seq) {
  SequenceStats stats;
  Vec mean(static_cast<std::size_t>(seq.n), 0.0);
  for (long t = 0; t < seq.T; ++t) {
    auto row = seq.row(t);
    int nnz = 0;
    for (int i = 0; i < seq.n; ++i) {
      double v = row[static_cast<std::size_t>(i)];
      stats.l2_sum += v * v;
      mean[static_cast<std::size_t>(i)] += v;
      if (v != 0.0) ++nnz;
      if (std::abs(v) > 1.0) stats.in_range = false;
    }
    stats.max_sparsity = std::max(stats.max_sparsity, nnz);
  }
  for (double& m : mean) m /= static_cast<double>(seq.T);
  for (long t = 0; t < seq.T; ++t) {
    auto row = seq.row(t);
    for (int i = 0; i < seq.n; ++i) {
      double d = row[static_cast<std::size_t>(i)] - mean[static_cast<std::size_t>(i)];
      stats.variation += d * d;
    }
  }
  return stats;
}

// One text header line (kind, dims, seed, params), then T*n raw native-endian
// float64 values; the round-trip is bit-exact.
inline void save_sequence(const LossSequence& seq, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_sequence: cannot open " + path);
  out << "banditlab-seq v1 kind=" << seq_kind_name(seq.kind) << " n=" << seq.n
      << " T=" << seq.T << " seed=" << seq.seed;
  char buf[64];
  for (const auto& [key, value] : seq.params) {
    std::snprintf(buf, sizeof buf, " %s=%.17g", key.c_str(), value);
    out << buf;
  }
  out << "\n";
  out.write(reinterpret_cast<const char*>(seq.data.data()),
            static_cast<std::streamsize>(seq.data.size() * sizeof(double)));
  if (!out) throw std::runtime_error("save_sequence: write failed for " + path);
}

inline LossSequence load_sequence(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_sequence: cannot open " + path);
  std::string header;
  std::getline(in, header);
  std::istringstream hs(header);
  std::string magic, version;
  hs >> magic >> version;
  if (magic != "banditlab-seq" || version != "v1")
    throw std::runtime_error("load_sequence: bad header in " + path);
  LossSequence seq;
  std::string token;
  while (hs >> token) {
    auto eq = token.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("load_sequence: malformed header token " + token);
    std::string key = token.substr(0, eq);
    std::string value = token.substr(eq + 1);
    if (key == "kind") {
      seq.kind = seq_kind_from_name(value);
    } else if (key == "n") {
      seq.n = std::stoi(value);
    } else if (key == "T") {
      seq.T = std::stol(value);
    } else if (key == "seed") {
      seq.seed = std::stoull(value);
    } else {
      seq.params.emplace_back(key, std::stod(value));
    }
  }
  seq.data.resize(static_cast<std::size_t>(seq.n) * static_cast<std::size_t>(seq.T));
  in.read(reinterpret_cast<char*>(seq.data.data()),
          static_cast<std::streamsize>(seq.data.size() * sizeof(double)));
  if (in.gcount() != static_cast<std::streamsize>(seq.data.size() * sizeof(double)))
    throw std::runtime_error("load_sequence: truncated data in " + path);
  return seq;
}

}  // namespace banditlab
