#include "selshare/reduced_form.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "selshare/binomial_probit.hpp"
#include "selshare/errors.hpp"
#include "selshare/normal.hpp"
#include "selshare/optimize.hpp"
#include "selshare/parallel.hpp"
#include "selshare/quadrature.hpp"

namespace selshare {
namespace {

constexpr double kSigmaFloor = 1e-4;
constexpr double kSigmaCeiling = 10.0;
constexpr double kSqrt2 = 1.41421356237309504880;

double normal_log_density(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return -0.5 * z * z - std::log(sd) - kLogSqrt2Pi;
}

// log of the integral of exp(h) given its mode and curvature, by Gauss-Hermite
// nodes centred and scaled at the mode.
template <class H>
double adaptive_gh(const QuadratureRule& rule, H&& h, double mode, double curvature) {
  const double scale = curvature < 0.0 ? 1.0 / std::sqrt(-curvature) : 1.0;
  thread_local std::vector<double> terms;
  terms.resize(rule.nodes.size());
  for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
    const double x = rule.nodes[j];
    terms[j] = std::log(rule.weights[j]) + h(mode + kSqrt2 * scale * x) + x * x;
  }
  return log_sum_exp(terms.begin(), terms.end()) + std::log(kSqrt2 * scale);
}

// Safeguarded Newton for a concave function given value/derivative/curvature.
template <class Eval>
std::pair<double, double> newton_mode(Eval&& eval, double start) {
  double x = start;
  auto [f, d1, d2] = eval(x);
  for (int iter = 0; iter < 60; ++iter) {
    double step = d2 < 0.0 ? -d1 / d2 : (d1 > 0.0 ? 0.5 : -0.5);
    step = std::clamp(step, -2.0, 2.0);
    for (int halve = 0; halve < 40; ++halve) {
      auto [fn, d1n, d2n] = eval(x + step);
      if (fn >= f - 1e-12 * std::abs(f)) {
        x += step;
        f = fn;
        d1 = d1n;
        d2 = d2n;
        break;
      }
      step *= 0.5;
    }
    if (std::abs(step) < 1e-10) break;
  }
  return {x, d2};
}

// ---- share probit -------------------------------------------------------------

struct ShareGroups {
  // Offers with identical (trials, successes) contribute identical integrals.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> counts;  // (m, s)
  std::vector<std::uint64_t> multiplicity;
  std::uint64_t n_groups = 0;
  std::uint64_t n_obs = 0;
  std::uint64_t successes = 0;
};

ShareGroups share_groups(const Dataset& dataset) {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> per_offer(dataset.n_offers(), {0, 0});
  std::vector<bool> has_active(dataset.n_offers(), false);
  ShareGroups g;
  const auto slots = dataset.record_offers();
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& r = dataset.records()[i];
    if (r.treatment != Treatment::active) continue;
    auto& c = per_offer[slots[i]];
    ++c.first;
    if (r.shared) ++c.second;
    has_active[slots[i]] = true;
    ++g.n_obs;
    if (r.shared) ++g.successes;
  }
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint64_t> tally;
  for (std::size_t k = 0; k < per_offer.size(); ++k) {
    if (!has_active[k]) continue;
    ++tally[per_offer[k]];
    ++g.n_groups;
  }
  for (const auto& [key, count] : tally) {
    g.counts.push_back(key);
    g.multiplicity.push_back(count);
  }
  return g;
}

double share_group_log_integral(const QuadratureRule& rule, std::uint32_t trials, std::uint32_t successes,
                                double alpha, double sigma) {
  const auto s = static_cast<double>(successes);
  const auto fail = static_cast<double>(trials - successes);
  auto h = [&](double mu) {
    double v = normal_log_density(mu, alpha, sigma);
    if (s > 0) v += s * std_normal_log_cdf(mu);
    if (fail > 0) v += fail * std_normal_log_cdf(-mu);
    return v;
  };
  auto eval = [&](double mu) {
    const double r = inverse_mills(-mu);  // phi(mu) / Phi(mu)
    const double q = inverse_mills(mu);   // phi(mu) / Phi(-mu)
    const double d1 = s * r - fail * q - (mu - alpha) / (sigma * sigma);
    const double d2 = -s * r * (r + mu) - fail * q * (q - mu) - 1.0 / (sigma * sigma);
    return std::tuple{h(mu), d1, d2};
  };
  const auto [mode, curvature] = newton_mode(eval, alpha);
  return adaptive_gh(rule, h, mode, curvature);
}

double share_log_likelihood(const ShareGroups& g, const QuadratureRule& rule, double alpha, double sigma) {
  double total = 0.0;
  for (std::size_t i = 0; i < g.counts.size(); ++i) {
    total += static_cast<double>(g.multiplicity[i]) *
             share_group_log_integral(rule, g.counts[i].first, g.counts[i].second, alpha, sigma);
  }
  return total;
}

// ---- adoption model -----------------------------------------------------------

struct AdoptData {
  std::vector<std::size_t> offer_begin;  // CSR offsets into entries
  std::vector<int> table_index;
  std::vector<std::uint8_t> active;
  std::unique_ptr<BinomialProbitTable> table;
  std::uint64_t n_obs = 0;
  std::uint64_t n_active = 0;
  double pooled_rate = 0.0;

  std::size_t n_groups() const { return offer_begin.empty() ? 0 : offer_begin.size() - 1; }
};

AdoptData adopt_data(const Dataset& dataset) {
  AdoptData d;
  std::vector<std::vector<std::size_t>> by_offer(dataset.n_offers());
  const auto slots = dataset.record_offers();
  std::vector<BinomialProbitTable::Pair> pairs;
  std::uint64_t exposed = 0, adopted = 0;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& r = dataset.records()[i];
    if (!r.shared || r.peers_exposed == 0) continue;
    by_offer[slots[i]].push_back(i);
    pairs.emplace_back(r.peers_exposed, r.peer_adoptions);
    exposed += r.peers_exposed;
    adopted += r.peer_adoptions;
  }
  d.table = std::make_unique<BinomialProbitTable>(pairs);
  d.offer_begin.push_back(0);
  for (const auto& list : by_offer) {
    if (list.empty()) continue;
    for (std::size_t i : list) {
      const auto& r = dataset.records()[i];
      d.table_index.push_back(d.table->index_of(r.peers_exposed, r.peer_adoptions));
      const bool is_active = r.treatment == Treatment::active;
      d.active.push_back(is_active ? 1 : 0);
      d.n_active += is_active ? 1 : 0;
    }
    d.offer_begin.push_back(d.table_index.size());
  }
  d.n_obs = d.table_index.size();
  d.pooled_rate = exposed > 0 ? static_cast<double>(adopted) / static_cast<double>(exposed) : 0.0;
  return d;
}

double adopt_offer_log_integral(const AdoptData& d, const QuadratureRule& rule, std::size_t k, double gamma,
                                double beta, double sigma, double start) {
  const std::size_t b = d.offer_begin[k];
  const std::size_t e = d.offer_begin[k + 1];
  auto h = [&](double lambda) {
    double v = normal_log_density(lambda, gamma, sigma);
    for (std::size_t j = b; j < e; ++j) v += d.table->log_value(d.table_index[j], lambda + (d.active[j] ? beta : 0.0));
    return v;
  };
  auto slope = [&](double lambda) {
    double v = -(lambda - gamma) / (sigma * sigma);
    for (std::size_t j = b; j < e; ++j) v += d.table->log_slope(d.table_index[j], lambda + (d.active[j] ? beta : 0.0));
    return v;
  };
  auto eval = [&](double lambda) {
    constexpr double delta = 1e-3;
    const double d2 = (slope(lambda + delta) - slope(lambda - delta)) / (2.0 * delta);
    return std::tuple{h(lambda), slope(lambda), d2};
  };
  const auto [mode, curvature] = newton_mode(eval, start);
  return adaptive_gh(rule, h, mode, curvature);
}

double adopt_log_likelihood(const AdoptData& d, const QuadratureRule& rule, double gamma, double beta, double sigma,
                            unsigned threads) {
  const std::size_t groups = d.n_groups();
  std::vector<double> per_offer(groups, 0.0);
  parallel_for(groups, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) per_offer[k] = adopt_offer_log_integral(d, rule, k, gamma, beta, sigma, gamma);
  });
  return std::accumulate(per_offer.begin(), per_offer.end(), 0.0);
}

double safe_sqrt(double v) { return v > 0.0 ? std::sqrt(v) : std::numeric_limits<double>::quiet_NaN(); }

}  // namespace

double share_probit_log_likelihood(const Dataset& dataset, double alpha, double sigma_mu, int quadrature_nodes) {
  if (!(sigma_mu > 0.0)) throw DomainError("share_probit_log_likelihood: sigma_mu must be positive");
  const ShareGroups g = share_groups(dataset);
  return share_log_likelihood(g, gauss_hermite(quadrature_nodes), alpha, sigma_mu);
}

ReducedFormShareFit fit_share_probit(const Dataset& dataset, const FitOptions& options) {
  const ShareGroups g = share_groups(dataset);
  if (g.n_groups < 2) throw IdentificationError("share probit needs active-arm records from at least two offers");
  const QuadratureRule rule = gauss_hermite(options.quadrature_nodes);

  ReducedFormShareFit fit;
  fit.n_groups = g.n_groups;
  fit.n_obs = g.n_obs;

  constexpr double kAlphaBound = 8.0;
  if (g.successes == 0 || g.successes == g.n_obs) {
    fit.alpha_hat = g.successes == 0 ? -kAlphaBound : kAlphaBound;
    fit.sigma_mu_hat = kSigmaFloor;
    fit.at_boundary = true;
    fit.log_likelihood = share_log_likelihood(g, rule, fit.alpha_hat, fit.sigma_mu_hat);
    fit.standard_errors.alpha = std::numeric_limits<double>::quiet_NaN();
    fit.standard_errors.sigma_mu = std::numeric_limits<double>::quiet_NaN();
    fit.warnings.emplace_back(g.successes == 0 ? "no active subject shared; estimates at bounds"
                                               : "every active subject shared; estimates at bounds");
    return fit;
  }

  const double rate = static_cast<double>(g.successes) / static_cast<double>(g.n_obs);
  const double sigma0 = 0.3;
  const std::vector<double> x0{std_normal_quantile(rate) * std::sqrt(1.0 + sigma0 * sigma0), std::log(sigma0)};
  auto objective = [&](const std::vector<double>& x) { return share_log_likelihood(g, rule, x[0], std::exp(x[1])); };
  MaximizeOptions mo;
  mo.tolerance = options.tolerance;
  const auto best = powell_maximize(objective, x0, {-kAlphaBound, std::log(kSigmaFloor)},
                                    {kAlphaBound, std::log(kSigmaCeiling)}, mo);
  fit.alpha_hat = best.x[0];
  fit.sigma_mu_hat = std::exp(best.x[1]);
  fit.log_likelihood = best.value;
  if (!best.converged) fit.warnings.emplace_back("optimizer stopped before meeting its tolerance");

  if (fit.sigma_mu_hat < 1e-3) {
    fit.at_boundary = true;
    fit.warnings.emplace_back("sigma_mu at its lower bound: no detectable offer-level variance");
    fit.standard_errors.sigma_mu = std::numeric_limits<double>::quiet_NaN();
    const double h = 1e-3;
    const double curv = (share_log_likelihood(g, rule, fit.alpha_hat + h, fit.sigma_mu_hat) - 2.0 * fit.log_likelihood +
                         share_log_likelihood(g, rule, fit.alpha_hat - h, fit.sigma_mu_hat)) /
                        (h * h);
    fit.standard_errors.alpha = safe_sqrt(-1.0 / curv);
    return fit;
  }
  auto natural = [&](const std::vector<double>& x) { return share_log_likelihood(g, rule, x[0], x[1]); };
  const auto hess = numerical_hessian(natural, {fit.alpha_hat, fit.sigma_mu_hat},
                                      {1e-3, std::min(1e-3, 0.1 * fit.sigma_mu_hat)});
  const auto cov = invert_spd({{-hess[0][0], -hess[0][1]}, {-hess[1][0], -hess[1][1]}});
  if (cov.empty()) {
    fit.warnings.emplace_back("observed information not positive definite; standard errors unavailable");
    fit.standard_errors.alpha = fit.standard_errors.sigma_mu = std::numeric_limits<double>::quiet_NaN();
  } else {
    fit.standard_errors.alpha = safe_sqrt(cov[0][0]);
    fit.standard_errors.sigma_mu = safe_sqrt(cov[1][1]);
  }
  return fit;
}

double adopt_binomial_log_likelihood(const Dataset& dataset, double gamma, double beta, double sigma_lambda,
                                     int quadrature_nodes) {
  if (!(sigma_lambda > 0.0)) throw DomainError("adopt_binomial_log_likelihood: sigma_lambda must be positive");
  const AdoptData d = adopt_data(dataset);
  return adopt_log_likelihood(d, gauss_hermite(quadrature_nodes), gamma, beta, sigma_lambda, 1);
}

ReducedFormAdoptFit fit_adopt_binomial(const Dataset& dataset, const FitOptions& options) {
  const AdoptData d = adopt_data(dataset);
  if (d.n_groups() < 2) throw IdentificationError("adoption model needs exposed sharers from at least two offers");
  if (d.n_active == 0 || d.n_active == d.n_obs) {
    throw IdentificationError("treatment is constant among exposed sharers; beta is not identified");
  }
  if (d.pooled_rate <= 0.0 || d.pooled_rate >= 1.0) {
    throw IdentificationError("adoption counts are all zero or all complete; gamma is not identified");
  }
  const QuadratureRule rule = gauss_hermite(options.quadrature_nodes);

  ReducedFormAdoptFit fit;
  fit.n_groups = d.n_groups();
  fit.n_obs = d.n_obs;

  const double sigma0 = 0.2;
  const std::vector<double> x0{std_normal_quantile(d.pooled_rate) * std::sqrt(2.0 + sigma0 * sigma0), 0.0,
                               std::log(sigma0)};
  auto objective = [&](const std::vector<double>& x) {
    return adopt_log_likelihood(d, rule, x[0], x[1], std::exp(x[2]), options.threads);
  };
  MaximizeOptions mo;
  mo.tolerance = options.tolerance;
  mo.max_step = 1.0;
  const auto best = powell_maximize(objective, x0, {-7.0, -3.0, std::log(kSigmaFloor)},
                                    {3.0, 3.0, std::log(kSigmaCeiling)}, mo);
  fit.gamma_hat = best.x[0];
  fit.beta_hat = best.x[1];
  fit.sigma_lambda_hat = std::exp(best.x[2]);
  fit.log_likelihood = best.value;
  if (!best.converged) fit.warnings.emplace_back("optimizer stopped before meeting its tolerance");
  if (fit.sigma_lambda_hat < 1e-3) {
    fit.at_boundary = true;
    fit.warnings.emplace_back("sigma_lambda at its lower bound: no detectable offer-level variance");
  }

  auto natural = [&](const std::vector<double>& x) {
    return adopt_log_likelihood(d, rule, x[0], x[1], x[2], options.threads);
  };
  const double s_step = std::min(1e-3, 0.1 * fit.sigma_lambda_hat);
  const auto hess = numerical_hessian(natural, {fit.gamma_hat, fit.beta_hat, fit.sigma_lambda_hat}, {1e-3, 1e-3, s_step});
  std::vector<std::vector<double>> info(3, std::vector<double>(3));
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) info[i][j] = -hess[i][j];
  }
  const auto cov = invert_spd(info);
  if (cov.empty()) {
    fit.warnings.emplace_back("observed information not positive definite; standard errors unavailable");
    fit.standard_errors.gamma = fit.standard_errors.beta = fit.standard_errors.sigma_lambda =
        std::numeric_limits<double>::quiet_NaN();
  } else {
    fit.standard_errors.gamma = safe_sqrt(cov[0][0]);
    fit.standard_errors.beta = safe_sqrt(cov[1][1]);
    fit.standard_errors.sigma_lambda = safe_sqrt(cov[2][2]);
  }
  return fit;
}

double intraclass_correlation(double sigma_group) {
  if (!(sigma_group >= 0.0) || !std::isfinite(sigma_group)) {
    throw DomainError("intraclass_correlation: sigma must be nonnegative");
  }
  const double v = sigma_group * sigma_group;
  return v / (v + 1.0);
}

}  // namespace selshare
