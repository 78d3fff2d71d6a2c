#include "selshare/joint_likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "selshare/binomial_probit.hpp"
#include "selshare/errors.hpp"
#include "selshare/normal.hpp"
#include "selshare/optimize.hpp"
#include "selshare/quadrature.hpp"

namespace selshare {
namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;

struct OfferRecords {
  std::uint32_t non_sharers = 0;        // active, s = 0
  std::uint32_t silent_sharers = 0;     // active, s = 1, n = 0
  std::vector<std::pair<std::uint32_t, std::uint32_t>> active;   // active sharers with n > 0
  std::vector<std::pair<std::uint32_t, std::uint32_t>> passive;  // passive with n > 0
};

std::vector<OfferRecords> group_by_offer(const Dataset& dataset) {
  std::vector<OfferRecords> offers(dataset.n_offers());
  const auto slots = dataset.record_offers();
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& r = dataset.records()[i];
    auto& o = offers[slots[i]];
    if (r.treatment == Treatment::active) {
      if (!r.shared) {
        ++o.non_sharers;
      } else if (r.peers_exposed == 0) {
        ++o.silent_sharers;
      } else {
        o.active.emplace_back(r.peers_exposed, r.peer_adoptions);
      }
    } else if (r.peers_exposed > 0) {
      o.passive.emplace_back(r.peers_exposed, r.peer_adoptions);
    }
  }
  return offers;
}

// log of  C(n,a) * integral of Phi(x)^a Phi(-x)^(n-a) * Phi((mu + psi nu)/s) * phi(nu) dnu,  x = lambda + nu.
// `select` false drops the sharing factor (passive peers).
double record_log_integral(const QuadratureRule& rule, std::uint32_t n, std::uint32_t a, double lambda, double mu,
                           double psi, bool select) {
  const double s = std::sqrt(1.0 - psi * psi);
  const double fail = static_cast<double>(n - a);
  auto eval = [&](double nu, double& d1, double& d2) {
    const double x = lambda + nu;
    double v = -0.5 * nu * nu;
    d1 = -nu;
    d2 = -1.0;
    if (a > 0) {
      const double r = inverse_mills(-x);
      v += a * std_normal_log_cdf(x);
      d1 += a * r;
      d2 -= a * r * (r + x);
    }
    if (fail > 0) {
      const double q = inverse_mills(x);
      v += fail * std_normal_log_cdf(-x);
      d1 -= fail * q;
      d2 -= fail * q * (q - x);
    }
    if (select) {
      const double u = (mu + psi * nu) / s;
      const double r = inverse_mills(-u);
      const double k = psi / s;
      v += std_normal_log_cdf(u);
      d1 += k * r;
      d2 -= k * k * r * (r + u);
    }
    return v;
  };
  double nu = 0.0, d1 = 0.0, d2 = 0.0;
  double f = eval(nu, d1, d2);
  for (int iter = 0; iter < 100; ++iter) {
    double step = std::clamp(-d1 / d2, -3.0, 3.0);
    double n1 = 0.0, n2 = 0.0;
    double fn = eval(nu + step, n1, n2);
    int halvings = 0;
    while (fn < f && halvings < 50) {
      step *= 0.5;
      fn = eval(nu + step, n1, n2);
      ++halvings;
    }
    if (fn < f) break;
    nu += step;
    f = fn;
    d1 = n1;
    d2 = n2;
    if (std::abs(step) < 1e-11) break;
  }
  const double scale = 1.0 / std::sqrt(-d2);
  std::vector<double> terms(rule.nodes.size());
  for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
    const double t = rule.nodes[j];
    double g1 = 0.0, g2 = 0.0;
    terms[j] = std::log(rule.weights[j]) + t * t + eval(nu + kSqrt2 * scale * t, g1, g2);
  }
  return log_sum_exp(terms.begin(), terms.end()) + std::log(kSqrt2 * scale) - kLogSqrt2Pi +
         log_binomial_coefficient(n, a);
}

class OfferIntegrand {
 public:
  OfferIntegrand(const OfferRecords& records, const ModelParams& p, const QuadratureRule& inner)
      : records_(records), p_(p), inner_(inner) {
    root_ = std::sqrt(1.0 - p.rho * p.rho);
    log_norm_ = -std::log(2.0 * std::numbers::pi * p.sigma_mu * p.sigma_lambda * root_);
  }

  double operator()(double mu, double lambda) const {
    const double z1 = (mu - p_.alpha) / p_.sigma_mu;
    const double z2 = ((lambda - p_.gamma) / p_.sigma_lambda - p_.rho * z1) / root_;
    double v = log_norm_ - 0.5 * (z1 * z1 + z2 * z2);
    if (records_.non_sharers > 0) v += records_.non_sharers * std_normal_log_cdf(-mu);
    if (records_.silent_sharers > 0) v += records_.silent_sharers * std_normal_log_cdf(mu);
    for (const auto& [n, a] : records_.active) v += record_log_integral(inner_, n, a, lambda, mu, p_.psi, true);
    for (const auto& [n, a] : records_.passive) v += record_log_integral(inner_, n, a, lambda, mu, p_.psi, false);
    return v;
  }

 private:
  const OfferRecords& records_;
  const ModelParams& p_;
  const QuadratureRule& inner_;
  double root_ = 1.0;
  double log_norm_ = 0.0;
};

double offer_log_integral(const OfferIntegrand& f, const QuadratureRule& outer, const ModelParams& p) {
  // Mode by damped Newton with finite-difference derivatives.
  double x = p.alpha, y = p.gamma;
  double fx = f(x, y);
  double hxx = -1.0 / (p.sigma_mu * p.sigma_mu), hyy = -1.0 / (p.sigma_lambda * p.sigma_lambda), hxy = 0.0;
  for (int iter = 0; iter < 100; ++iter) {
    const double h = 1e-4;
    const double fxp = f(x + h, y), fxm = f(x - h, y), fyp = f(x, y + h), fym = f(x, y - h);
    const double fpp = f(x + h, y + h), fpm = f(x + h, y - h), fmp = f(x - h, y + h), fmm = f(x - h, y - h);
    const double gx = (fxp - fxm) / (2 * h), gy = (fyp - fym) / (2 * h);
    hxx = (fxp - 2 * fx + fxm) / (h * h);
    hyy = (fyp - 2 * fx + fym) / (h * h);
    hxy = (fpp - fpm - fmp + fmm) / (4 * h * h);
    const double det = hxx * hyy - hxy * hxy;
    double dx, dy;
    if (hxx < 0 && det > 0) {
      dx = -(hyy * gx - hxy * gy) / det;
      dy = -(-hxy * gx + hxx * gy) / det;
    } else {
      dx = 0.1 * gx;
      dy = 0.1 * gy;
    }
    const double len = std::hypot(dx, dy);
    if (len > 2.0) {
      dx *= 2.0 / len;
      dy *= 2.0 / len;
    }
    double fn = f(x + dx, y + dy);
    int halvings = 0;
    while (fn < fx && halvings < 50) {
      dx *= 0.5;
      dy *= 0.5;
      fn = f(x + dx, y + dy);
      ++halvings;
    }
    if (fn < fx) break;
    x += dx;
    y += dy;
    fx = fn;
    if (std::hypot(dx, dy) < 1e-9) break;
  }
  {
    const double h = 1e-3;
    const double fxp = f(x + h, y), fxm = f(x - h, y), fyp = f(x, y + h), fym = f(x, y - h);
    const double fpp = f(x + h, y + h), fpm = f(x + h, y - h), fmp = f(x - h, y + h), fmm = f(x - h, y - h);
    const double cxx = (fxp - 2 * fx + fxm) / (h * h);
    const double cyy = (fyp - 2 * fx + fym) / (h * h);
    const double cxy = (fpp - fpm - fmp + fmm) / (4 * h * h);
    if (cxx < 0 && cxx * cyy - cxy * cxy > 0) {
      hxx = cxx;
      hyy = cyy;
      hxy = cxy;
    }
  }
  // Covariance = (-H)^{-1}; scale nodes by its Cholesky factor.
  const double a = -hxx, b = -hxy, c = -hyy;
  const double det = a * c - b * b;
  if (!(a > 0) || !(det > 0)) throw DomainError("joint_log_likelihood: offer integrand is not locally concave");
  const double vxx = c / det, vxy = -b / det, vyy = a / det;
  const double l11 = std::sqrt(vxx);
  const double l21 = vxy / l11;
  const double l22 = std::sqrt(std::max(vyy - l21 * l21, 0.0));
  std::vector<double> terms;
  terms.reserve(outer.nodes.size() * outer.nodes.size());
  for (std::size_t i = 0; i < outer.nodes.size(); ++i) {
    for (std::size_t j = 0; j < outer.nodes.size(); ++j) {
      const double t1 = outer.nodes[i], t2 = outer.nodes[j];
      const double u1 = kSqrt2 * t1, u2 = kSqrt2 * t2;
      terms.push_back(std::log(outer.weights[i] * outer.weights[j]) + t1 * t1 + t2 * t2 +
                      f(x + l11 * u1, y + l21 * u1 + l22 * u2));
    }
  }
  return log_sum_exp(terms.begin(), terms.end()) + std::log(2.0 * l11 * l22);
}

}  // namespace

double joint_log_likelihood(const Dataset& dataset, const ModelParams& params, const JointQuadrature& quadrature) {
  params.validate();
  if (std::abs(params.rho) >= 1.0 || std::abs(params.psi) >= 1.0) {
    throw DomainError("joint_log_likelihood: requires |rho| < 1 and |psi| < 1");
  }
  const auto offers = group_by_offer(dataset);
  const QuadratureRule outer = gauss_hermite(quadrature.offer_nodes);
  const QuadratureRule inner = gauss_hermite(quadrature.record_nodes);
  double total = 0.0;
  for (const auto& o : offers) total += offer_log_integral(OfferIntegrand(o, params, inner), outer, params);
  return total;
}

JointModeResult joint_posterior_mode(const Dataset& dataset, const ModelParams& start,
                                     const std::array<bool, ModelParams::kCount>& fixed,
                                     const JointQuadrature& quadrature) {
  start.validate();
  const std::array<double, ModelParams::kCount> lo{-8.0, -8.0, 1e-3, 1e-3, -0.99, -0.99};
  const std::array<double, ModelParams::kCount> hi{8.0, 8.0, 10.0, 10.0, 0.99, 0.99};
  const auto base = start.to_array();
  std::vector<std::size_t> free;
  for (std::size_t i = 0; i < ModelParams::kCount; ++i) {
    if (!fixed[i]) free.push_back(i);
  }
  auto unpack = [&](const std::vector<double>& x) {
    auto v = base;
    for (std::size_t j = 0; j < free.size(); ++j) v[free[j]] = x[j];
    return ModelParams::from_array(v);
  };
  std::vector<double> x0, lower, upper;
  for (std::size_t i : free) {
    x0.push_back(std::clamp(base[i], lo[i], hi[i]));
    lower.push_back(lo[i]);
    upper.push_back(hi[i]);
  }
  JointModeResult result;
  if (free.empty()) {
    result.params = start;
    result.log_posterior = joint_log_likelihood(dataset, start, quadrature);
    result.converged = true;
    return result;
  }
  auto objective = [&](const std::vector<double>& x) { return joint_log_likelihood(dataset, unpack(x), quadrature); };
  MaximizeOptions options;
  options.max_step = 1.0;
  const auto best = powell_maximize(objective, x0, lower, upper, options);
  result.params = unpack(best.x);
  result.log_posterior = best.value;
  result.converged = best.converged;
  return result;
}

}  // namespace selshare
