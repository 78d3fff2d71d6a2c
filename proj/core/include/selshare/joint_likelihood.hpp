#pragma once

#include <array>

#include "selshare/model.hpp"
#include "selshare/params.hpp"

namespace selshare {

/// Quadrature settings for the exact joint marginal likelihood. Each offer's
/// (mu, lambda) integral uses a tensor Gauss-Hermite rule centred and scaled at
/// the integrand's mode; each exposed sharer's nu integral uses a 1-D adaptive rule.
struct JointQuadrature {
  int offer_nodes = 20;   ///< nodes per dimension of the (mu, lambda) rule
  int record_nodes = 24;  ///< nodes of the per-record nu rule
};

/// log p(data | params) for the full model with every latent variable integrated out.
/// Cost grows as offers x offer_nodes^2 x records, so this is meant for small datasets.
/// Requires |rho| < 1 and |psi| < 1.
double joint_log_likelihood(const Dataset& dataset, const ModelParams& params, const JointQuadrature& quadrature = {});

struct JointModeResult {
  ModelParams params;
  double log_posterior = 0.0;
  bool converged = false;
};

/// Posterior mode under flat priors (sigmas in [1e-3, 10], rho and psi in [-0.99, 0.99],
/// alpha and gamma in [-8, 8]). Parameters flagged in `fixed` stay at their `start` values.
JointModeResult joint_posterior_mode(const Dataset& dataset, const ModelParams& start,
                                     const std::array<bool, ModelParams::kCount>& fixed = {},
                                     const JointQuadrature& quadrature = {});

}  // namespace selshare
