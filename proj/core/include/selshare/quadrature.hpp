#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace selshare {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Gauss-Hermite rule for integrals of exp(-x^2) f(x) over the real line.
QuadratureRule gauss_hermite(int n);

/// Gauss-Hermite rule rescaled so that sum w_i f(x_i) approximates E[f(Z)], Z ~ N(0, 1).
QuadratureRule standard_normal_rule(int n);

/// log(sum exp(v)) over a range, stable for large magnitudes.
template <class It>
double log_sum_exp(It first, It last) {
  if (first == last) return -std::numeric_limits<double>::infinity();
  const double top = *std::max_element(first, last);
  if (!std::isfinite(top)) return top;
  double sum = 0.0;
  for (It it = first; it != last; ++it) sum += std::exp(*it - top);
  return top + std::log(sum);
}

/// log of the integral of exp(logf(x)) dx for a smooth unimodal (typically
/// log-concave) integrand with Gaussian or faster decay. Locates the mode by a
/// safeguarded Newton iteration on finite differences, then applies the
/// trapezoid rule at spacing sd/4 around it until the integrand has fallen by
/// 46 nats on both sides. `guess` only needs to be in the right neighbourhood.
template <class LogF>
double log_integrate_unimodal(LogF&& logf, double guess) {
  double x = guess;
  double fx = logf(x);
  double curvature = -1.0;
  for (int iter = 0; iter < 100; ++iter) {
    const double h = 1e-4 * std::max(1.0, std::abs(x));
    const double fp = logf(x + h);
    const double fm = logf(x - h);
    const double d1 = (fp - fm) / (2.0 * h);
    const double d2 = (fp - 2.0 * fx + fm) / (h * h);
    double step = d2 < -1e-12 ? -d1 / d2 : (d1 > 0 ? 1.0 : -1.0);
    step = std::clamp(step, -2.0, 2.0);
    double next = x + step;
    double fnext = logf(next);
    int halvings = 0;
    while (!(fnext >= fx) && halvings < 40) {
      step *= 0.5;
      next = x + step;
      fnext = logf(next);
      ++halvings;
    }
    if (!(fnext >= fx)) {
      curvature = d2;
      break;
    }
    x = next;
    fx = fnext;
    curvature = d2;
    if (std::abs(step) < 1e-9 * std::max(1.0, std::abs(x))) break;
  }
  {
    const double h = 1e-3 * std::max(1.0, std::abs(x));
    const double d2 = (logf(x + h) - 2.0 * fx + logf(x - h)) / (h * h);
    if (d2 < -1e-10) curvature = d2;
  }
  const double sd = curvature < -1e-10 ? 1.0 / std::sqrt(-curvature) : 1.0;
  const double step = sd / 4.0;
  constexpr double kDrop = 46.0;
  constexpr int kMaxSide = 4000;

  std::vector<double> values;
  values.reserve(160);
  values.push_back(fx);
  double top = fx;
  for (int i = 1; i <= kMaxSide; ++i) {
    const double v = logf(x + i * step);
    values.push_back(v);
    top = std::max(top, v);
    if (v < top - kDrop) break;
  }
  for (int i = 1; i <= kMaxSide; ++i) {
    const double v = logf(x - i * step);
    values.push_back(v);
    top = std::max(top, v);
    if (v < top - kDrop) break;
  }
  return log_sum_exp(values.begin(), values.end()) + std::log(step);
}

}  // namespace selshare
