#pragma once

#include <utility>

#include "selshare/rng.hpp"

namespace selshare {

inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;
inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;

/// Standard normal density. Throws DomainError on non-finite input.
double std_normal_pdf(double x);

/// Standard normal distribution function, via the complementary error function
/// so the lower tail keeps full relative precision.
double std_normal_cdf(double x);

/// log Phi(x), finite for every finite x (asymptotic form far in the lower tail).
double std_normal_log_cdf(double x);

/// Inverse Mills ratio phi(x) / (1 - Phi(x)).
/// For x > 5 a continued fraction for the Mills ratio replaces the direct ratio.
double inverse_mills(double x);

/// Quantile of the standard normal; p must lie in (0, 1).
double std_normal_quantile(double p);

/// P(X <= h, Y <= k) for standard bivariate normal (X, Y) with correlation r.
/// Genz's refinement of the Drezner-Wesolowsky method; absolute error below 1e-14.
double bivariate_normal_cdf(double h, double k, double r);

struct BivariateSpec {
  double mean_a = 0.0;
  double mean_b = 0.0;
  double sd_a = 1.0;
  double sd_b = 1.0;
  double corr = 0.0;

  /// Throws DomainError unless sd_a > 0, sd_b > 0 and |corr| <= 1.
  void validate() const;
};

/// Maps two independent standard normals onto the specified bivariate normal.
/// a depends only on z1, so draws that share z1 stay paired across specs.
std::pair<double, double> bivariate_from_standard(const BivariateSpec& spec, double z1, double z2) noexcept;

std::pair<double, double> sample_bivariate(const BivariateSpec& spec, RngStream& rng);

/// Draw from N(mean, sd^2) restricted to [lower, upper]; either bound may be infinite.
double sample_truncated_normal(double mean, double sd, double lower, double upper, RngStream& rng);

}  // namespace selshare
