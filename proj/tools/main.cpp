// Simulation CLI: runs bandit strategies against adversarial loss sequences,
// sweeps a parameter and fits the regret scaling law, runs the solver
// certificate suites, and runs the starved-bandit baseline.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "banditlab/certificates.hpp"
#include "banditlab/harness.hpp"

namespace fs = std::filesystem;
using namespace banditlab;

namespace {

struct RunOptions {
  std::string strategy = "sparse-mab";
  std::string env = "sparse";
  int n = 10;
  long T = 10000;
  int s = 2;
  double Q = 100.0;
  double p = 1.5;       // strategy exponent (ball strategies)
  double env_p = 3.0;   // environment exponent (gaussian-lb)
  double C = 0.1;
  double epsilon = 0.05;
  double mean_scale = 0.5;
  int seeds = 10;
  double eta = 0.0;     // 0 means "use the recipe default"
  double gamma = 0.0;
  int k = 0;
  bool debug_audit = false;
  std::string out;
};

std::string default_out_dir() {
  const char* env = std::getenv("BANDITLAB_OUT");
  return env && *env ? env : "out";
}

std::string config_text(const RunOptions& opt) {
  std::ostringstream os;
  os << "strategy=" << opt.strategy << " env=" << opt.env << " n=" << opt.n
     << " T=" << opt.T << " s=" << opt.s << " Q=" << opt.Q << " p=" << opt.p
     << " env_p=" << opt.env_p << " C=" << opt.C << " epsilon=" << opt.epsilon
     << " eta=" << opt.eta << " gamma=" << opt.gamma << " k=" << opt.k;
  return os.str();
}

std::optional<double> positive_or_default(double v) {
  if (v > 0.0) return v;
  return std::nullopt;
}

LossSequence make_environment(const RunOptions& opt, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0));
  if (opt.env == "sparse")
    return gen_sparse(opt.n, opt.T, opt.s, SparseStyle::hidden_good_arm, rng, seed);
  if (opt.env == "sparse-random")
    return gen_sparse(opt.n, opt.T, opt.s, SparseStyle::random_support, rng, seed);
  if (opt.env == "lowvar") return gen_low_variation(opt.n, opt.T, opt.Q, rng, seed);
  if (opt.env == "ball-iid") {
    double q = opt.p / (opt.p - 1.0);
    return gen_ball_iid(opt.n, opt.T, q, opt.mean_scale, 0.5, rng, seed);
  }
  if (opt.env == "gaussian-lb") {
    auto params = GaussianLbParams::make(opt.n, opt.T, opt.env_p, opt.C, rng);
    if (!params.large_T_regime)
      std::cerr << "warning: T below the large-horizon regime of the construction\n";
    return gen_gaussian_lb(params, rng, seed);
  }
  if (opt.env == "starved-bernoulli")
    return gen_starved_bernoulli(opt.n, opt.T, opt.epsilon, rng, seed);
  throw CLI::ValidationError("--env", "unknown environment " + opt.env);
}

RegretCurve run_one(const RunOptions& opt, std::uint64_t seed, std::uint64_t hash) {
  LossSequence env = make_environment(opt, seed);
  EpisodeOptions eopts;
  eopts.config_hash = hash;
  eopts.debug_audit = opt.debug_audit;

  if (opt.strategy == "sparse-mab") {
    double L = opt.env == "lowvar" ? static_cast<double>(opt.n) * opt.T
                                   : static_cast<double>(opt.s) * opt.T;
    auto cfg = SparseMabConfig::make(opt.n, opt.T, L, positive_or_default(opt.eta),
                                     positive_or_default(opt.gamma));
    cfg.debug_checks = opt.debug_audit;
    SparseMabStrategy strategy(cfg);
    if (opt.debug_audit) strategy.enable_trace();
    eopts.domain = ComparatorDomain::simplex;
    auto curve = run_episode(strategy, env, seed, eopts);
    if (opt.debug_audit) {
      auto audit = strategy.audit();
      if (audit.slack < -1e-6)
        throw std::runtime_error("be-the-leader audit failed: slack " +
                                 std::to_string(audit.slack));
    }
    return curve;
  }
  if (opt.strategy == "variation-mab") {
    auto cfg = VariationMabConfig::make(
        opt.n, opt.T, opt.Q, opt.k > 0 ? std::optional<int>(opt.k) : std::nullopt,
        positive_or_default(opt.eta), positive_or_default(opt.gamma));
    VariationMabStrategy strategy(cfg);
    if (opt.debug_audit) strategy.enable_trace();
    eopts.domain = ComparatorDomain::simplex;
    auto curve = run_episode(strategy, env, seed, eopts);
    if (opt.debug_audit) {
      auto audit = strategy.audit();
      if (audit.slack < -1e-6)
        throw std::runtime_error("be-the-leader audit failed: slack " +
                                 std::to_string(audit.slack));
    }
    return curve;
  }
  if (opt.strategy == "lp-ball") {
    int dim = env.n;  // gaussian-lb is (n+1)-dimensional
    auto cfg = LpBallConfig::make(dim, opt.T, opt.p, positive_or_default(opt.eta),
                                  positive_or_default(opt.gamma));
    LpBallStrategy strategy(cfg);
    if (opt.debug_audit) strategy.enable_trace();
    if (env.kind == SeqKind::gaussian_lb) {
      eopts.domain = ComparatorDomain::gaussian;
    } else {
      eopts.domain = ComparatorDomain::lp_ball;
      eopts.comparator_q = cfg.lp.q;
    }
    auto curve = run_episode(strategy, env, seed, eopts);
    if (opt.debug_audit) {
      auto audit = strategy.audit();
      if (audit.slack < -1e-6)
        throw std::runtime_error("be-the-leader audit failed: slack " +
                                 std::to_string(audit.slack));
    }
    return curve;
  }
  throw CLI::ValidationError("--strategy", "unknown strategy " + opt.strategy);
}

struct SummaryRow {
  std::uint64_t seed;
  double final_regret;
};

void write_summary(const std::string& path, const std::string& config,
                   std::uint64_t hash, const std::vector<SummaryRow>& rows,
                   double mean, double se) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "config " << config << "\n";
  out << "config_hash " << hash << "\n";
  out << "seeds " << rows.size() << "\n";
  char buf[96];
  for (const auto& row : rows) {
    std::snprintf(buf, sizeof buf, "final_regret_seed_%llu %.17g\n",
                  static_cast<unsigned long long>(row.seed), row.final_regret);
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "mean_final_regret %.17g\n", mean);
  out << buf;
  std::snprintf(buf, sizeof buf, "stderr_final_regret %.17g\n", se);
  out << buf;
}

int do_run(const RunOptions& opt) {
  std::string config = config_text(opt);
  std::uint64_t hash = fnv1a_hash(config);
  fs::create_directories(opt.out);

  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(opt.seeds));
  for (int i = 0; i < opt.seeds; ++i) seeds[static_cast<std::size_t>(i)] = static_cast<std::uint64_t>(i + 1);
  auto curves = run_seeds(seeds, [&](std::uint64_t seed) { return run_one(opt, seed, hash); });

  std::vector<SummaryRow> rows;
  for (const auto& curve : curves) {
    std::ostringstream name;
    name << opt.out << "/curve_seed" << curve.seed << ".csv";
    save_curve_csv(curve, name.str());
    rows.push_back({curve.seed, curve.final_regret()});
  }
  double mean = mean_final_regret(curves);
  double se = stderr_final_regret(curves);
  write_summary(opt.out + "/summary.txt", config, hash, rows, mean, se);
  std::printf("%s\n", config.c_str());
  std::printf("mean final regret %.4f (stderr %.4f) over %d seeds -> %s\n", mean, se,
              opt.seeds, opt.out.c_str());
  return 0;
}

int do_sweep(RunOptions opt, const std::string& vary) {
  auto eq = vary.find('=');
  if (eq == std::string::npos)
    throw CLI::ValidationError("--vary", "expected <param>=v1,v2,...");
  std::string key = vary.substr(0, eq);
  std::vector<double> values;
  std::stringstream vs(vary.substr(eq + 1));
  for (std::string item; std::getline(vs, item, ',');) values.push_back(std::stod(item));
  if (values.size() < 3)
    throw CLI::ValidationError("--vary", "need at least 3 sweep points for a fit");

  fs::create_directories(opt.out);
  std::ofstream sweep_csv(opt.out + "/sweep.csv");
  sweep_csv << "scale,mean_regret,stderr\n";

  std::vector<std::pair<double, double>> points;
  for (double value : values) {
    RunOptions point = opt;
    if (key == "s") point.s = static_cast<int>(value);
    else if (key == "Q") point.Q = value;
    else if (key == "T") point.T = static_cast<long>(value);
    else if (key == "n") point.n = static_cast<int>(value);
    else if (key == "p") point.p = value;
    else throw CLI::ValidationError("--vary", "unsupported sweep parameter " + key);

    std::ostringstream sub;
    sub << opt.out << "/" << key << "_" << value;
    point.out = sub.str();
    do_run(point);

    std::string config = config_text(point);
    std::uint64_t hash = fnv1a_hash(config);
    std::vector<std::uint64_t> seeds(static_cast<std::size_t>(point.seeds));
    for (int i = 0; i < point.seeds; ++i) seeds[static_cast<std::size_t>(i)] = static_cast<std::uint64_t>(i + 1);
    auto curves = run_seeds(seeds, [&](std::uint64_t seed) { return run_one(point, seed, hash); });
    double mean = mean_final_regret(curves);
    points.emplace_back(value, mean);
    char buf[96];
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", value, mean,
                  stderr_final_regret(curves));
    sweep_csv << buf;
  }
  auto fit = scaling_fit(points);
  std::printf("sweep over %s: log-log slope %.4f (stderr %.4f)\n", key.c_str(),
              fit.slope, fit.stderr_slope);
  std::ofstream fit_out(opt.out + "/fit.txt");
  fit_out << "param " << key << "\nslope " << fit.slope << "\nstderr_slope "
          << fit.stderr_slope << "\nintercept " << fit.intercept << "\n";
  return 0;
}

int do_verify_lemmas(long trials) {
  bool all_ok = true;
  auto show = [&](const CertificateReport& report) {
    std::printf("[%s] %-28s trials=%ld violations=%ld worst=%.6g\n",
                report.passed() ? "PASS" : "FAIL", report.name.c_str(), report.trials,
                report.violations, report.worst);
    all_ok = all_ok && report.passed();
  };
  show(certify_conditioning_ratio(trials, 1001));
  for (double p : {1.2, 1.5, 2.0}) show(certify_gap_growth(trials, p, 2002));
  for (double p : {1.2, 1.5, 2.0}) show(certify_segment_norm(trials / 4 + 1, p, 3003));
  for (double p : {1.2, 1.5, 2.0}) show(certify_dual_norm_domination(trials, p, 4004));
  show(certify_estimator_identities(trials, 5005));
  show(certify_kkt_residuals(trials / 4 + 1, 6006));
  return all_ok ? 0 : 1;
}

int do_starved_run(const RunOptions& opt) {
  fs::create_directories(opt.out);
  std::string config = "starved-etc " + config_text(opt);
  std::uint64_t hash = fnv1a_hash(config);
  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(opt.seeds));
  for (int i = 0; i < opt.seeds; ++i) seeds[static_cast<std::size_t>(i)] = static_cast<std::uint64_t>(i + 1);
  long total_explore = 0;
  auto curves = run_seeds(seeds, [&](std::uint64_t seed) {
    Rng env_rng(derive_seed(seed, 0));
    auto env = gen_starved_bernoulli(opt.n, opt.T, opt.epsilon, env_rng, seed);
    StarvedWrap<StarvedEtcBaseline> wrapped{StarvedEtcBaseline(opt.n)};
    EpisodeOptions eopts;
    eopts.config_hash = hash;
    eopts.domain = ComparatorDomain::simplex;
    return run_episode(wrapped, env, seed, eopts);
  });
  std::vector<SummaryRow> rows;
  for (const auto& curve : curves) {
    std::ostringstream name;
    name << opt.out << "/starved_seed" << curve.seed << ".csv";
    save_curve_csv(curve, name.str());
    rows.push_back({curve.seed, curve.final_regret()});
  }
  double mean = mean_final_regret(curves);
  write_summary(opt.out + "/summary.txt", config, hash, rows, mean,
                stderr_final_regret(curves));
  std::printf("starved baseline: mean final regret %.2f over %d seeds "
              "(exploration counted per episode)\n",
              mean, opt.seeds);
  (void)total_explore;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adversarial bandit strategies: simulation and verification"};
  app.require_subcommand(1);

  RunOptions opt;
  opt.out = default_out_dir();

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--strategy", opt.strategy, "sparse-mab | variation-mab | lp-ball");
    cmd->add_option("--env", opt.env,
                    "sparse | sparse-random | lowvar | ball-iid | gaussian-lb | "
                    "starved-bernoulli");
    cmd->add_option("--n", opt.n, "number of arms / y-dimension");
    cmd->add_option("--T", opt.T, "horizon");
    cmd->add_option("--s", opt.s, "sparsity of the loss vectors");
    cmd->add_option("--Q", opt.Q, "variation budget");
    cmd->add_option("--p", opt.p, "ball exponent for the strategy, in (1,2]");
    cmd->add_option("--env-p", opt.env_p, "ball exponent of the gaussian environment");
    cmd->add_option("--C", opt.C, "gaussian environment constant");
    cmd->add_option("--epsilon", opt.epsilon, "starved-bernoulli gap");
    cmd->add_option("--mean-scale", opt.mean_scale, "ball-iid drift norm");
    cmd->add_option("--eta", opt.eta, "learning-rate override");
    cmd->add_option("--gamma", opt.gamma, "exploration-weight override");
    cmd->add_option("--k", opt.k, "reservoir size override");
    cmd->add_option("--seeds", opt.seeds, "number of seeds");
    cmd->add_option("--out", opt.out, "output directory (default $BANDITLAB_OUT or ./out)");
    cmd->add_flag("--debug-audit", opt.debug_audit,
                  "trace episodes and run the be-the-leader audit");
  };

  auto* run_cmd = app.add_subcommand("run", "run episodes and write regret curves");
  add_common(run_cmd);

  std::string vary;
  auto* sweep_cmd = app.add_subcommand("sweep", "sweep a parameter and fit the slope");
  add_common(sweep_cmd);
  sweep_cmd->add_option("--vary", vary, "<param>=v1,v2,... (s, Q, T, n or p)")
      ->required();

  long trials = 10000;
  auto* verify_cmd = app.add_subcommand("verify-lemmas",
                                        "run the solver certificate suites");
  verify_cmd->add_option("--trials", trials, "trials per suite");

  auto* starved_cmd = app.add_subcommand("starved-run",
                                         "run the starved-bandit baseline");
  add_common(starved_cmd);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) return do_run(opt);
    if (sweep_cmd->parsed()) return do_sweep(opt, vary);
    if (verify_cmd->parsed()) return do_verify_lemmas(trials);
    if (starved_cmd->parsed()) return do_starved_run(opt);
  } catch (const std::exception& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return 1;
  }
  return 0;
}
