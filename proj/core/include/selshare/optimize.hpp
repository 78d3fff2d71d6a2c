#pragma once

#include <functional>
#include <vector>

namespace selshare {

struct MaximizeOptions {
  /// Stop when a full sweep improves the objective by less than this.
  double tolerance = 1e-8;
  int max_iterations = 200;
  /// Largest move along one direction per line search.
  double max_step = 2.0;
};

struct MaximizeResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
};

/// Derivative-free maximisation inside the box [lower, upper]: Powell's
/// conjugate-direction method with bounded Brent line searches.
MaximizeResult powell_maximize(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x0,
                               const std::vector<double>& lower, const std::vector<double>& upper,
                               const MaximizeOptions& options = {});

/// Central-difference Hessian of f at x with per-coordinate steps.
std::vector<std::vector<double>> numerical_hessian(const std::function<double(const std::vector<double>&)>& f,
                                                   const std::vector<double>& x, const std::vector<double>& steps);

/// Inverse of a small symmetric positive-definite matrix (Cholesky); empty when not positive definite.
std::vector<std::vector<double>> invert_spd(const std::vector<std::vector<double>>& m);

}  // namespace selshare
