#include "selshare/binomial_probit.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "selshare/errors.hpp"
#include "selshare/normal.hpp"
#include "selshare/quadrature.hpp"

namespace selshare {
namespace {

constexpr double kNormalReach = 8.5;  // phi mass beyond this is < 1e-16

std::uint64_t pair_key(std::uint32_t n, std::uint32_t a) noexcept {
  return (static_cast<std::uint64_t>(n) << 32) | a;
}

// Binomial factor without its coefficient.
double log_binomial_kernel(std::uint32_t n, std::uint32_t a, double u) {
  double v = 0.0;
  if (a > 0) v += a * std_normal_log_cdf(u);
  if (n > a) v += (n - a) * std_normal_log_cdf(-u);
  return v;
}

}  // namespace

double log_binomial_coefficient(std::uint32_t n, std::uint32_t a) {
  if (a > n) throw DomainError("log_binomial_coefficient: a > n");
  return std::lgamma(n + 1.0) - std::lgamma(a + 1.0) - std::lgamma(n - a + 1.0);
}

double log_binomial_probit(std::uint32_t n, std::uint32_t a, double u) {
  return log_binomial_coefficient(n, a) + log_binomial_kernel(n, a, u);
}

double log_binomial_probit_marginal(std::uint32_t n, std::uint32_t a, double x) {
  if (a > n) throw DomainError("log_binomial_probit_marginal: a > n");
  if (!std::isfinite(x)) throw DomainError("log_binomial_probit_marginal: non-finite argument");
  if (n == 0) return 0.0;
  auto integrand = [&](double nu) { return log_binomial_kernel(n, a, x + nu) - 0.5 * nu * nu - kLogSqrt2Pi; };
  // Start near the binomial mode pulled toward the prior.
  const double target = std_normal_quantile((a + 0.5) / (n + 1.0));
  const double guess = std::clamp(0.5 * (target - x), -6.0, 6.0);
  return log_binomial_coefficient(n, a) + log_integrate_unimodal(integrand, guess);
}

BinomialProbitTable::BinomialProbitTable(std::span<const Pair> pairs, Options options) : options_(options) {
  if (!(options_.step > 0.0) || !(options_.x_max > options_.x_min)) {
    throw ConfigError("BinomialProbitTable: invalid grid");
  }
  const double h = options_.step;
  points_ = static_cast<std::size_t>(std::llround((options_.x_max - options_.x_min) / h)) + 1;
  options_.x_max = options_.x_min + h * static_cast<double>(points_ - 1);

  for (const auto& [n, a] : pairs) {
    if (a > n) throw DomainError("BinomialProbitTable: a > n");
    if (index_.try_emplace(pair_key(n, a), static_cast<int>(pairs_.size())).second) pairs_.emplace_back(n, a);
  }

  const auto reach = static_cast<std::size_t>(std::ceil(kNormalReach / h));
  const std::size_t u_points = points_ + 2 * reach;
  std::vector<double> kernel(2 * reach + 1);
  for (std::size_t d = 0; d < kernel.size(); ++d) {
    const double offset = (static_cast<double>(d) - static_cast<double>(reach)) * h;
    kernel[d] = h * kInvSqrt2Pi * std::exp(-0.5 * offset * offset);
  }

  values_.assign(pairs_.size() * points_, 0.0);
  slopes_.assign(pairs_.size() * points_, 0.0);
  std::vector<double> log_kernel(u_points);
  std::vector<double> scaled(u_points);

  for (std::size_t p = 0; p < pairs_.size(); ++p) {
    const auto [n, a] = pairs_[p];
    double* out = values_.data() + p * points_;
    if (n == 0) {
      std::fill(out, out + points_, 0.0);
      continue;
    }
    const double log_coef = log_binomial_coefficient(n, a);
    double top = -std::numeric_limits<double>::infinity();
    std::size_t argmax = 0;
    for (std::size_t j = 0; j < u_points; ++j) {
      const double u = options_.x_min + (static_cast<double>(j) - static_cast<double>(reach)) * h;
      log_kernel[j] = log_binomial_kernel(n, a, u);
      if (log_kernel[j] > top) {
        top = log_kernel[j];
        argmax = j;
      }
    }
    // A binomial factor narrower than a few grid steps is not resolved by the
    // shared grid; evaluate those pairs directly.
    bool resolved = true;
    if (a > 0 && a < n && argmax > 0 && argmax + 1 < u_points) {
      const double curvature = (log_kernel[argmax + 1] - 2.0 * log_kernel[argmax] + log_kernel[argmax - 1]) / (h * h);
      if (curvature < 0.0 && 1.0 / std::sqrt(-curvature) < 4.0 * h) resolved = false;
    }
    if (!resolved) {
      for (std::size_t i = 0; i < points_; ++i) {
        out[i] = log_binomial_probit_marginal(n, a, options_.x_min + static_cast<double>(i) * h);
      }
      continue;
    }
    std::size_t lo = u_points, hi = 0;
    for (std::size_t j = 0; j < u_points; ++j) {
      const double v = log_kernel[j] - top;
      scaled[j] = v > -700.0 ? std::exp(v) : 0.0;
      if (scaled[j] > 0.0) {
        lo = std::min(lo, j);
        hi = j;
      }
    }
    for (std::size_t i = 0; i < points_; ++i) {
      // Grid point x_i sits at u index i + reach.
      const std::size_t from = std::max(i, lo);
      const std::size_t to = std::min(i + 2 * reach, hi);
      double sum = 0.0;
      for (std::size_t j = from; j <= to && from <= to; ++j) sum += scaled[j] * kernel[j - i];
      if (sum > 1e-250) {
        out[i] = log_coef + top + std::log(sum);
      } else {
        out[i] = log_binomial_probit_marginal(n, a, options_.x_min + static_cast<double>(i) * h);
      }
    }
  }

  for (std::size_t p = 0; p < pairs_.size(); ++p) {
    const double* v = values_.data() + p * points_;
    double* s = slopes_.data() + p * points_;
    for (std::size_t i = 0; i < points_; ++i) {
      if (i >= 2 && i + 2 < points_) {
        s[i] = (-v[i + 2] + 8.0 * v[i + 1] - 8.0 * v[i - 1] + v[i - 2]) / (12.0 * h);
      } else if (i >= 1 && i + 1 < points_) {
        s[i] = (v[i + 1] - v[i - 1]) / (2.0 * h);
      } else if (i == 0) {
        s[i] = (v[1] - v[0]) / h;
      } else {
        s[i] = (v[i] - v[i - 1]) / h;
      }
    }
  }
}

int BinomialProbitTable::index_of(std::uint32_t n, std::uint32_t a) const noexcept {
  const auto it = index_.find(pair_key(n, a));
  return it == index_.end() ? -1 : it->second;
}

double BinomialProbitTable::log_value(int index, double x) const {
  const auto [n, a] = pairs_[static_cast<std::size_t>(index)];
  const double h = options_.step;
  const double pos = (x - options_.x_min) / h;
  if (!(pos >= 0.0) || pos >= static_cast<double>(points_ - 1)) return log_binomial_probit_marginal(n, a, x);
  const auto i = static_cast<std::size_t>(pos);
  const double t = pos - static_cast<double>(i);
  const double* v = values_.data() + static_cast<std::size_t>(index) * points_;
  const double* s = slopes_.data() + static_cast<std::size_t>(index) * points_;
  const double t2 = t * t;
  const double t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * v[i] + (t3 - 2 * t2 + t) * h * s[i] + (-2 * t3 + 3 * t2) * v[i + 1] +
         (t3 - t2) * h * s[i + 1];
}

double BinomialProbitTable::log_slope(int index, double x) const {
  const double h = options_.step;
  const double pos = (x - options_.x_min) / h;
  if (!(pos >= 0.0) || pos >= static_cast<double>(points_ - 1)) {
    const auto [n, a] = pairs_[static_cast<std::size_t>(index)];
    const double dx = 1e-4;
    return (log_binomial_probit_marginal(n, a, x + dx) - log_binomial_probit_marginal(n, a, x - dx)) / (2 * dx);
  }
  const auto i = static_cast<std::size_t>(pos);
  const double t = pos - static_cast<double>(i);
  const double* v = values_.data() + static_cast<std::size_t>(index) * points_;
  const double* s = slopes_.data() + static_cast<std::size_t>(index) * points_;
  const double t2 = t * t;
  return ((6 * t2 - 6 * t) * v[i] + (3 * t2 - 4 * t + 1) * h * s[i] + (-6 * t2 + 6 * t) * v[i + 1] +
          (3 * t2 - 2 * t) * h * s[i + 1]) /
         h;
}

}  // namespace selshare
