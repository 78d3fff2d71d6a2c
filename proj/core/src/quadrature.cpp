#include "selshare/quadrature.hpp"

#include <cmath>

#include "selshare/errors.hpp"

namespace selshare {

QuadratureRule gauss_hermite(int n) {
  if (n < 1 || n > 200) throw DomainError("gauss_hermite: node count must be in [1, 200]");
  constexpr double kPiM4 = 0.7511255444649425;  // pi^(-1/4)
  QuadratureRule rule;
  rule.nodes.assign(n, 0.0);
  rule.weights.assign(n, 0.0);
  const int half = (n + 1) / 2;
  double z = 0.0;
  for (int i = 0; i < half; ++i) {
    if (i == 0) {
      z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -0.16667);
    } else if (i == 1) {
      z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
    } else if (i == 2) {
      z = 1.86 * z - 0.86 * rule.nodes[0];
    } else if (i == 3) {
      z = 1.91 * z - 0.91 * rule.nodes[1];
    } else {
      z = 2.0 * z - rule.nodes[i - 2];
    }
    double derivative = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p1 = kPiM4;
      double p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1)) * p3;
      }
      derivative = std::sqrt(2.0 * n) * p2;
      const double previous = z;
      z = previous - p1 / derivative;
      if (std::abs(z - previous) <= 3e-15 * std::max(1.0, std::abs(z))) break;
    }
    rule.nodes[i] = z;
    rule.nodes[n - 1 - i] = -z;
    rule.weights[i] = 2.0 / (derivative * derivative);
    rule.weights[n - 1 - i] = rule.weights[i];
  }
  return rule;
}

QuadratureRule standard_normal_rule(int n) {
  QuadratureRule rule = gauss_hermite(n);
  constexpr double kSqrt2 = 1.41421356237309504880;
  constexpr double kInvSqrtPi = 0.56418958354775628695;
  for (int i = 0; i < n; ++i) {
    rule.nodes[i] *= kSqrt2;
    rule.weights[i] *= kInvSqrtPi;
  }
  return rule;
}

}  // namespace selshare
