// Acceptance suite: `selshare_acceptance N` runs criterion N, `selshare_acceptance` runs all.
// Each criterion prints one PASS/FAIL line; indented lines before it are diagnostics.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <unistd.h>
#include <vector>

#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "selshare/bootstrap.hpp"
#include "selshare/cli.hpp"
#include "selshare/counterfactual.hpp"
#include "selshare/joint_likelihood.hpp"
#include "selshare/mcmc.hpp"
#include "selshare/model.hpp"
#include "selshare/normal.hpp"
#include "selshare/reduced_form.hpp"
#include "selshare/selection.hpp"
#include "selshare/simulator.hpp"

using namespace selshare;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

unsigned worker_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

const ModelParams kJointMeans{-0.813, -2.739, 0.267, 0.172, 0.174, 0.025};

std::string fmt(double v, int digits = 4) {
  std::ostringstream o;
  o.precision(digits);
  o << std::fixed << v;
  return o.str();
}

std::string sci(double v) {
  std::ostringstream o;
  o.precision(2);
  o << std::scientific << v;
  return o.str();
}

void note(const std::string& line) { std::cout << "  " << line << std::endl; }

SimConfig desk_config(std::uint64_t seed) {
  SimConfig c;
  c.n_subjects = 100'000;
  c.n_offers = 4'000;
  c.exposure_distribution = ExposureDistribution::negative_binomial(60.0, 1.1);
  c.seed = seed;
  c.threads = worker_threads();
  return c;
}

// ---- 1 ---------------------------------------------------------------------------------

Outcome kernel_oracles() {
  int failures = 0;
  auto check = [&](bool ok, const std::string& what) {
    if (!ok && failures++ < 5) note("mismatch: " + what);
  };
  for (double x = -30.0; x <= 30.0; x += 0.01) {
    const double e = oracle::normal_pdf(x);
    check(std::abs(std_normal_pdf(x) - e) <= 1e-12 * e, "pdf at " + fmt(x));
  }
  for (double x = -38.0; x <= 38.0; x += 0.01) {
    const double e = oracle::normal_cdf(x);
    check(std::abs(std_normal_cdf(x) - e) <= 1e-12, "cdf at " + fmt(x));
    // Relative accuracy is checked only while the value is a normal double.
    if (x <= 0.0 && x >= -37.0) check(std::abs(std_normal_cdf(x) / e - 1.0) <= 1e-12, "cdf tail at " + fmt(x));
  }
  for (double x = -30.0; x <= 60.0; x += 0.05) {
    const double e = oracle::inverse_mills(x);
    check(std::abs(inverse_mills(x) / e - 1.0) <= 1e-12, "inverse Mills at " + fmt(x));
  }
  const int kernel_failures = failures;

  // Truncated expectations by Monte Carlo, 10^7 draws per configuration.
  std::mt19937_64 gen(20260102);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  constexpr int kDraws = 10'000'000;
  int eq_failures = 0;
  double worst = 0.0;
  for (int cfg = 0; cfg < 20; ++cfg) {
    ModelParams p;
    p.alpha = -1.5 + 2.5 * u(gen);
    p.gamma = -3.0 + 3.0 * u(gen);
    p.sigma_mu = 0.1 + 1.4 * u(gen);
    p.sigma_lambda = 0.1 + 1.4 * u(gen);
    p.rho = -0.9 + 1.8 * u(gen);
    p.psi = -0.9 + 1.8 * u(gen);
    const double eps = -1.5 + 3.0 * u(gen);
    const double mu = -1.5 + 3.0 * u(gen);
    std::normal_distribution<double> z;

    // Product channel: the offer-level sharing effect is zero-mean; condition on it exceeding -eps.
    // The location-shifted variant conditions on alpha + effect + eps >= 0.
    double s1 = 0, q1 = 0, s2 = 0, q2 = 0;
    long n1 = 0, n2 = 0;
    const double root = std::sqrt(1 - p.rho * p.rho);
    for (int i = 0; i < kDraws; ++i) {
      const double z1 = z(gen), z2 = z(gen);
      const double effect = p.sigma_mu * z1;
      const double lambda = p.gamma + p.sigma_lambda * (p.rho * z1 + root * z2);
      if (effect >= -eps) s1 += lambda, q1 += lambda * lambda, ++n1;
      if (p.alpha + effect + eps >= 0) s2 += lambda, q2 += lambda * lambda, ++n2;
    }
    // Dyad channel: condition on eps_ik >= -mu.
    double s3 = 0, q3 = 0;
    long n3 = 0;
    const double proot = std::sqrt(1 - p.psi * p.psi);
    for (int i = 0; i < kDraws; ++i) {
      const double z1 = z(gen), z2 = z(gen);
      if (z1 >= -mu) {
        const double nu = p.psi * z1 + proot * z2;
        s3 += nu, q3 += nu * nu, ++n3;
      }
    }
    auto z_score = [](double value, double s, double q, long n) {
      const double mean = s / n;
      const double se = std::sqrt((q / n - mean * mean) / n);
      return std::abs(value - mean) / se;
    };
    const double za = z_score(conditional_mean_product(p, eps), s1, q1, n1);
    const double zb = z_score(truncated_mean_product(p, eps), s2, q2, n2);
    const double zc = z_score(conditional_mean_dyad(p, mu), s3, q3, n3);
    worst = std::max({worst, za, zb, zc});
    if (za > 3 || zb > 3 || zc > 3) {
      ++eq_failures;
      note("config " + std::to_string(cfg) + ": |z| product " + fmt(za, 2) + ", shifted " + fmt(zb, 2) + ", dyad " +
           fmt(zc, 2));
    }
  }
  note("largest Monte Carlo |z| over 20 configurations: " + fmt(worst, 2));
  return {kernel_failures == 0 && eq_failures == 0,
          "kernel mismatches " + std::to_string(kernel_failures) + ", closed-form mismatches " +
              std::to_string(eq_failures) + " of 20"};
}

// ---- 2 ---------------------------------------------------------------------------------

Outcome icc() {
  const double a = intraclass_correlation(0.262), b = intraclass_correlation(0.172);
  const bool ok = std::round(a * 1000) == 64 && std::round(b * 1000) == 29;
  return {ok, "share " + fmt(a, 4) + ", adoption " + fmt(b, 4)};
}

// ---- 3 ---------------------------------------------------------------------------------

Outcome reduced_form_recovery() {
  using clock = std::chrono::steady_clock;
  SimConfig c;
  c.n_subjects = 500'000;
  c.n_offers = 20'000;
  c.treatment_probability = 1.0;
  c.seed = 303;
  c.threads = worker_threads();
  const ModelParams share_truth{-0.812, -2.742, 0.262, 0.172, 0.0, 0.0};
  auto t0 = clock::now();
  FitOptions options;
  options.threads = worker_threads();
  const auto share = fit_share_probit(simulate(share_truth, c), options);
  note("share: alpha " + fmt(share.alpha_hat) + " (se " + fmt(share.standard_errors.alpha) + "), sigma_mu " +
       fmt(share.sigma_mu_hat) + " (se " + fmt(share.standard_errors.sigma_mu) + "), " +
       fmt(std::chrono::duration<double>(clock::now() - t0).count(), 1) + " s");
  const bool share_ok = std::abs(share.alpha_hat - share_truth.alpha) <= 0.02 &&
                        std::abs(share.sigma_mu_hat - share_truth.sigma_mu) <= 0.02;

  SimConfig a;
  a.n_subjects = 700'000;
  a.n_offers = 20'000;
  a.seed = 304;
  a.threads = worker_threads();
  const ReducedAdoptionTruth adopt_truth{-2.742, 0.022, 0.172};
  t0 = clock::now();
  const Dataset adopt_data = simulate_reduced_adoption(adopt_truth, a);
  const auto adopt = fit_adopt_binomial(adopt_data, options);
  note("adopt (" + std::to_string(adopt.n_obs) + " records): gamma " + fmt(adopt.gamma_hat) + ", beta " +
       fmt(adopt.beta_hat) + " (se " + fmt(adopt.standard_errors.beta) + "), sigma_lambda " +
       fmt(adopt.sigma_lambda_hat) + ", " + fmt(std::chrono::duration<double>(clock::now() - t0).count(), 1) + " s");
  const bool adopt_ok = std::abs(adopt.gamma_hat - adopt_truth.gamma) <= 0.02 &&
                        std::abs(adopt.beta_hat - adopt_truth.beta) <= 0.012 &&
                        std::abs(adopt.sigma_lambda_hat - adopt_truth.sigma_lambda) <= 0.02;
  return {share_ok && adopt_ok, std::string("share ") + (share_ok ? "recovered" : "missed") + ", adoption " +
                                    (adopt_ok ? "recovered" : "missed")};
}

// ---- 4 and 5 ---------------------------------------------------------------------------

struct RepeatResult {
  bool converged = false;
  int covered = 0;
  std::array<PosteriorSummary, ModelParams::kCount> summary{};
  double max_rhat = 0.0;
};

RepeatResult joint_repeat(const ModelParams& truth, std::uint64_t seed) {
  const Dataset d = simulate(truth, desk_config(seed));
  McmcConfig cfg;
  cfg.seed = seed;
  cfg.threads = worker_threads();
  const auto post = fit_joint(d, cfg);
  RepeatResult r;
  r.converged = post.converged;
  const auto t = truth.to_array();
  std::string line = "seed " + std::to_string(seed) + ":";
  for (std::size_t i = 0; i < ModelParams::kCount; ++i) {
    r.summary[i] = post.summary(static_cast<Param>(i));
    r.max_rhat = std::max(r.max_rhat, post.rhat[i]);
    const bool in = r.summary[i].q025 <= t[i] && t[i] <= r.summary[i].q975;
    r.covered += in;
    line += " " + std::string(ModelParams::kNames[i]) + " " + fmt(r.summary[i].mean) + " [" + fmt(r.summary[i].q025) +
            ", " + fmt(r.summary[i].q975) + "]" + (in ? "" : "*");
  }
  note(line + " max rhat " + fmt(r.max_rhat, 3));
  return r;
}

Outcome joint_recovery() {
  int good = 0;
  bool all_converged = true;
  double rho_sum = 0.0, psi_sum = 0.0;
  constexpr int kRepeats = 5;
  for (int rep = 0; rep < kRepeats; ++rep) {
    const auto r = joint_repeat(kJointMeans, 4000 + rep);
    all_converged = all_converged && r.converged;
    good += r.covered >= 5;
    rho_sum += r.summary[static_cast<std::size_t>(Param::rho)].mean;
    psi_sum += r.summary[static_cast<std::size_t>(Param::psi)].mean;
  }
  const double rho = rho_sum / kRepeats, psi = psi_sum / kRepeats;
  const bool ok = all_converged && good == kRepeats && rho >= 0.05 && rho <= 0.30 && psi >= 0.01 && psi <= 0.05;
  return {ok, "converged " + std::string(all_converged ? "all" : "not all") + ", repeats covering >= 5 of 6: " +
                  std::to_string(good) + "/5, mean rho " + fmt(rho) + ", mean psi " + fmt(psi)};
}

Outcome null_recovery() {
  ModelParams truth = kJointMeans;
  truth.rho = truth.psi = 0.0;
  int both = 0;
  for (int rep = 0; rep < 5; ++rep) {
    const auto r = joint_repeat(truth, 5000 + rep);
    const auto& rho = r.summary[static_cast<std::size_t>(Param::rho)];
    const auto& psi = r.summary[static_cast<std::size_t>(Param::psi)];
    both += rho.q025 <= 0 && 0 <= rho.q975 && psi.q025 <= 0 && 0 <= psi.q975;
  }
  return {both >= 4, "both intervals contain 0 in " + std::to_string(both) + "/5 repeats"};
}

// ---- 6 ---------------------------------------------------------------------------------

Outcome tiny_oracles() {
  double worst = 0.0;
  // Share model: 3 offers x 50 subjects.
  {
    SimConfig c;
    c.n_subjects = 150;
    c.n_offers = 3;
    c.treatment_probability = 1.0;
    c.seed = 61;
    const Dataset d = simulate(ModelParams{-0.5, -1.0, 0.6, 0.3, 0.0, 0.0}, c);
    for (double alpha : {-1.2, -0.5, 0.3}) {
      for (double sigma : {0.05, 0.3, 0.9, 2.0}) {
        worst = std::max(worst, std::abs(share_probit_log_likelihood(d, alpha, sigma) -
                                         oracle::share_loglik_trapezoid(d, alpha, sigma)));
      }
    }
  }
  // Adoption model: 5 offers, 100 subjects.
  {
    SimConfig c;
    c.n_subjects = 100;
    c.n_offers = 5;
    c.seed = 62;
    const Dataset d = simulate_reduced_adoption({-1.8, 0.2, 0.4}, c);
    for (double gamma : {-2.5, -1.8}) {
      for (double beta : {-0.2, 0.3}) {
        for (double sigma : {0.05, 0.4, 1.0}) {
          worst = std::max(worst, std::abs(adopt_binomial_log_likelihood(d, gamma, beta, sigma) -
                                           oracle::adopt_loglik_trapezoid(d, gamma, beta, sigma)));
        }
      }
    }
  }
  note("largest reduced-form log-likelihood gap: " + sci(worst));
  const bool reduced_ok = worst <= 1e-4;

  // Joint mode over (alpha, gamma, rho, psi) with the scales held at their true values.
  SimConfig c;
  c.n_subjects = 40;
  c.n_offers = 2;
  c.seed = 63;
  c.exposure_distribution = ExposureDistribution::negative_binomial(20.0, 2.0);
  const ModelParams truth{-0.2, -1.0, 0.7, 0.5, 0.3, 0.3};
  const Dataset d = simulate(truth, c);
  const std::array<bool, ModelParams::kCount> fixed{false, false, true, true, false, false};
  const auto mode = joint_posterior_mode(d, truth, fixed);

  std::map<long long, oracle::JointGrid> grids;
  auto value = [&](const std::array<double, 4>& x) {
    const long long key = std::llround(x[3] * 1e9);
    auto it = grids.find(key);
    if (it == grids.end()) {
      it = grids.emplace(key, oracle::JointGrid(d, truth.sigma_mu, truth.sigma_lambda, x[3], -8.0, 8.0, -9.0, 6.0, 201))
               .first;
    }
    return it->second.log_likelihood(x[0], x[1], x[2]);
  };
  // Pattern search on a lattice that is refined when no neighbour improves.
  const std::array<double, 4> lo{-8.0, -8.0, -0.99, -0.99}, hi{8.0, 8.0, 0.99, 0.99};
  std::array<double, 4> best{truth.alpha, truth.gamma, truth.rho, truth.psi};
  double best_value = value(best);
  constexpr double kResolution = 0.01;
  for (double step = 0.16; step >= kResolution - 1e-12;) {
    bool moved = false;
    for (int code = 0; code < 81; ++code) {
      std::array<double, 4> x = best;
      int rest = code;
      for (int k = 0; k < 4; ++k, rest /= 3) x[k] = std::clamp(x[k] + (rest % 3 - 1) * step, lo[k], hi[k]);
      const double v = value(x);
      if (v > best_value + 1e-12) best_value = v, best = x, moved = true;
    }
    if (!moved) step /= 2.0;
  }
  const std::array<double, 4> m{mode.params.alpha, mode.params.gamma, mode.params.rho, mode.params.psi};
  double gap = 0.0;
  for (int k = 0; k < 4; ++k) gap = std::max(gap, std::abs(m[k] - best[k]));
  note("mode (" + fmt(m[0]) + ", " + fmt(m[1]) + ", " + fmt(m[2]) + ", " + fmt(m[3]) + ") log-lik " +
       fmt(mode.log_posterior, 5));
  note("grid (" + fmt(best[0]) + ", " + fmt(best[1]) + ", " + fmt(best[2]) + ", " + fmt(best[3]) + ") log-lik " +
       fmt(best_value, 5) + " at resolution " + fmt(kResolution, 3));
  const bool joint_ok = mode.converged && gap <= kResolution;
  return {reduced_ok && joint_ok, "reduced-form gap " + sci(worst) + ", mode-grid gap " + fmt(gap)};
}

// ---- 7 and 8 ---------------------------------------------------------------------------

SimConfig population_config(std::uint64_t seed) {
  SimConfig c;
  c.n_subjects = 1'000'000;
  c.n_offers = 4'000;
  c.exposure_distribution = ExposureDistribution::negative_binomial(60.0, 1.1);
  c.seed = seed;
  c.threads = worker_threads();
  return c;
}

Outcome decomposition_headline() {
  DecomposeOptions o;
  o.iterations = 100;
  const auto r = decompose(PosteriorDraws::degenerate(kJointMeans), population_config(707), o);
  const double total = r.rr_total.point, product = r.rr_product.point, dyad = r.rr_dyad.point;
  note("model closed forms: total " + fmt(model_relative_risk(kJointMeans)));
  const bool ok = total >= 1.04 && total <= 1.15 && dyad - 1 > product - 1 && (dyad - 1) > 0.5 * (total - 1);
  return {ok, "RR total " + fmt(total) + " [" + fmt(r.rr_total.lower) + ", " + fmt(r.rr_total.upper) + "], product " +
                  fmt(product) + ", dyad " + fmt(dyad) + ", dyad share of excess " +
                  fmt((dyad - 1) / (total - 1), 3)};
}

Outcome decomposition_null() {
  ModelParams p = kJointMeans;
  p.rho = p.psi = 0.0;
  DecomposeOptions o;
  o.iterations = 50;
  const auto r = decompose(PosteriorDraws::degenerate(p), population_config(808), o);
  bool ok = true;
  for (const auto* e : {&r.rr_total, &r.rr_product, &r.rr_dyad}) ok = ok && std::abs(e->point - 1.0) <= 0.03;
  return {ok, "RR total " + fmt(r.rr_total.point) + ", product " + fmt(r.rr_product.point) + ", dyad " +
                  fmt(r.rr_dyad.point)};
}

// ---- 9 ---------------------------------------------------------------------------------

Outcome bootstrap_validity() {
  const WeightedStatistic rr = [](const Dataset& d, std::span<const double> w) { return relative_risk(d, w); };
  bool exact = true;
  for (std::uint64_t s : {1, 2, 3}) {
    const Dataset d = simulate(kJointMeans, desk_config(900 + s));
    const std::vector<double> ones(d.size(), 1.0);
    BootstrapConfig cfg;
    cfg.replicates = 10;
    exact = exact && relative_risk(d, ones) == relative_risk(d) && multiway_bootstrap(d, rr, cfg).point == relative_risk(d);
  }
  const double truth = model_relative_risk(kJointMeans);
  int covered = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const Dataset d = simulate(kJointMeans, desk_config(9000 + rep));
    BootstrapConfig cfg;
    cfg.seed = 19000 + rep;
    cfg.threads = worker_threads();
    const auto est = multiway_bootstrap(d, rr, cfg);
    covered += est.lower <= truth && truth <= est.upper;
  }
  note("population relative risk " + fmt(truth));
  return {exact && covered >= 90, std::string("unit weights ") + (exact ? "exact" : "differ") + ", coverage " +
                                      std::to_string(covered) + "/100"};
}

// ---- 10 --------------------------------------------------------------------------------

std::map<std::string, std::string> run_pipeline(const fs::path& dir, const std::string& threads, bool& ok) {
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto p = [&](const std::string& name) { return (dir / name).string(); };
  std::ofstream(dir / "sim.cfg") << "n_subjects = 20000\nn_offers = 800\nexposure_distribution = negative_binomial(60, 1.1)\n";
  std::ofstream(dir / "params.cfg") << "alpha = -0.813\ngamma = -2.739\nsigma_mu = 0.267\nsigma_lambda = 0.172\n"
                                       "rho = 0.174\npsi = 0.025\n";
  std::ofstream(dir / "pop.cfg") << "n_subjects = 20000\nn_offers = 800\n";
  const std::vector<std::vector<std::string>> commands{
      {"simulate", "--config", p("sim.cfg"), "--params", p("params.cfg"), "--out", p("data.csv")},
      {"fit", "--model", "share", "--data", p("data.csv"), "--out", p("share.json")},
      {"fit", "--model", "adopt", "--data", p("data.csv"), "--out", p("adopt.json")},
      {"fit", "--model", "joint", "--data", p("data.csv"), "--chains", "2", "--iterations", "200", "--burn-in", "100",
       "--out", p("joint.json")},
      {"decompose", "--posterior", p("joint.json"), "--config", p("pop.cfg"), "--iterations", "5", "--force", "--out",
       p("decompose.json")},
      {"bootstrap", "--data", p("data.csv"), "--replicates", "50", "--out", p("bootstrap.json")},
      {"summarize", "--data", p("data.csv"), "--out", p("summary.json")},
  };
  for (auto args : commands) {
    args.insert(args.begin(), {"--seed", "1010", "--threads", threads});
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    if (code != cli::kOk && code != cli::kConvergenceFailure) {
      note(args[4] + " exited " + std::to_string(code) + ": " + err.str());
      ok = false;
    }
  }
  std::map<std::string, std::string> digests;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (name.size() > 5 && name.substr(name.size() - 4) == ".cfg") continue;
    if (name.find(".manifest.json") != std::string::npos) {
      std::ifstream in(entry.path());
      auto j = nlohmann::json::parse(in);
      j.erase("started");
      j.erase("finished");
      digests[name] = cli::sha256_hex(j.dump());
    } else {
      digests[name] = cli::sha256_file(entry.path());
    }
  }
  return digests;
}

Outcome determinism() {
  const fs::path dir = fs::temp_directory_path() / ("selshare_acceptance_" + std::to_string(::getpid()));
  bool ok = true;
  const auto first = run_pipeline(dir, "1", ok);
  const auto second = run_pipeline(dir, "1", ok);
  int differing = 0;
  for (const auto& [name, digest] : first) {
    const auto it = second.find(name);
    if (it == second.end() || it->second != digest) {
      note("differs between runs: " + name);
      ++differing;
    }
  }
  // Thread count must not change artifacts either (manifests record the command line, so skip them).
  const auto threaded = run_pipeline(dir, "3", ok);
  for (const auto& [name, digest] : first) {
    if (name.find(".manifest.json") != std::string::npos) continue;
    const auto it = threaded.find(name);
    if (it == threaded.end() || it->second != digest) {
      note("differs with 3 threads: " + name);
      ++differing;
    }
  }
  fs::remove_all(dir);
  return {ok && differing == 0 && first.size() == second.size() && first.size() >= 14,
          std::to_string(first.size()) + " artifacts compared, " + std::to_string(differing) + " differing"};
}

struct Criterion {
  const char* title;
  Outcome (*run)();
};

const Criterion kCriteria[] = {
    {"kernel oracle suite", kernel_oracles},
    {"intraclass correlation reproduction", icc},
    {"reduced-form parameter recovery", reduced_form_recovery},
    {"joint-model recovery at desk scale", joint_recovery},
    {"null recovery of selection correlations", null_recovery},
    {"oracle equivalence on tiny instances", tiny_oracles},
    {"decomposition headline finding", decomposition_headline},
    {"null decomposition", decomposition_null},
    {"bootstrap validity", bootstrap_validity},
    {"command determinism", determinism},
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> which;
  for (int i = 1; i < argc; ++i) {
    const int n = std::atoi(argv[i]);
    if (n < 1 || n > 10) {
      std::cerr << "usage: selshare_acceptance [criterion 1-10 ...]\n";
      return 2;
    }
    which.push_back(n);
  }
  if (which.empty()) {
    for (int n = 1; n <= 10; ++n) which.push_back(n);
  }
  int failed = 0;
  for (int n : which) {
    const auto& c = kCriteria[n - 1];
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << n << ": " << c.title << " (" << o.detail << "; "
              << fmt(secs, 1) << " s)" << std::endl;
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
