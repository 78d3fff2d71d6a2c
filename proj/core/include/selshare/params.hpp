#pragma once

#include <array>
#include <cstddef>
#include <string_view>

namespace selshare {

/// Structural parameters of the joint sharing / peer adoption model.
///
/// Sharing:  s = 1{mu_k + eps_ik >= 0} in the active condition, always 1 in the passive one.
/// Adoption: each exposed peer adopts with probability Phi(lambda_k + nu_ik).
/// (mu_k, lambda_k) are bivariate normal with correlation rho (product selection);
/// (eps_ik, nu_ik) are standard bivariate normal with correlation psi (dyad selection).
struct ModelParams {
  double alpha = 0.0;         ///< mean product sharing utility
  double gamma = 0.0;         ///< mean product adoption utility
  double sigma_mu = 1.0;      ///< sd of product sharing utility
  double sigma_lambda = 1.0;  ///< sd of product adoption utility
  double rho = 0.0;           ///< product-selection correlation
  double psi = 0.0;           ///< dyad-selection correlation

  // Identification scale; not free parameters.
  static constexpr double sigma_eps = 1.0;
  static constexpr double sigma_nu = 1.0;

  static constexpr std::size_t kCount = 6;
  static constexpr std::array<std::string_view, kCount> kNames{"alpha",        "gamma", "sigma_mu",
                                                               "sigma_lambda", "rho",   "psi"};

  /// Throws DomainError unless both sigmas are positive and finite and |rho|, |psi| <= 1.
  void validate() const;

  std::array<double, kCount> to_array() const noexcept {
    return {alpha, gamma, sigma_mu, sigma_lambda, rho, psi};
  }
  static ModelParams from_array(const std::array<double, kCount>& v) noexcept {
    return {v[0], v[1], v[2], v[3], v[4], v[5]};
  }

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

enum class Param : std::size_t { alpha = 0, gamma, sigma_mu, sigma_lambda, rho, psi };

/// Index of a parameter name in ModelParams::kNames, or kCount when unknown.
std::size_t param_index(std::string_view name) noexcept;

}  // namespace selshare
