#include "selshare/params.hpp"

#include <cmath>
#include <string>

#include "selshare/errors.hpp"

namespace selshare {

void ModelParams::validate() const {
  const auto values = to_array();
  for (std::size_t i = 0; i < kCount; ++i) {
    if (!std::isfinite(values[i])) throw DomainError("ModelParams: " + std::string(kNames[i]) + " is not finite");
  }
  if (!(sigma_mu > 0.0)) throw DomainError("ModelParams: sigma_mu must be positive");
  if (!(sigma_lambda > 0.0)) throw DomainError("ModelParams: sigma_lambda must be positive");
  if (std::abs(rho) > 1.0) throw DomainError("ModelParams: rho outside [-1, 1]");
  if (std::abs(psi) > 1.0) throw DomainError("ModelParams: psi outside [-1, 1]");
}

std::size_t param_index(std::string_view name) noexcept {
  for (std::size_t i = 0; i < ModelParams::kCount; ++i) {
    if (ModelParams::kNames[i] == name) return i;
  }
  return ModelParams::kCount;
}

}  // namespace selshare
