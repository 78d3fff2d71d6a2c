#include "selshare/selection.hpp"

#include "selshare/errors.hpp"
#include "selshare/normal.hpp"

namespace selshare {

double conditional_mean_product(const ModelParams& params, double eps) {
  if (!(params.sigma_mu > 0.0)) throw DomainError("conditional_mean_product: sigma_mu must be positive");
  return params.gamma + params.sigma_lambda * params.rho * inverse_mills(-eps / params.sigma_mu);
}

double truncated_mean_product(const ModelParams& params, double eps) {
  if (!(params.sigma_mu > 0.0)) throw DomainError("truncated_mean_product: sigma_mu must be positive");
  return params.gamma + params.sigma_lambda * params.rho * inverse_mills((-eps - params.alpha) / params.sigma_mu);
}

double conditional_mean_dyad(const ModelParams& params, double mu) {
  constexpr double sigma_nu = ModelParams::sigma_nu;
  return sigma_nu * params.psi * inverse_mills(-mu / sigma_nu);
}

}  // namespace selshare
