#pragma once

#include "selshare/params.hpp"

namespace selshare {

/// Mean adoption utility of a product given that it was shared by an adopter
/// whose idiosyncratic sharing utility is `eps`:
///   gamma + sigma_lambda * rho * phi(-eps/sigma_mu) / (1 - Phi(-eps/sigma_mu)).
/// The truncation point is measured on the centred product utility mu_k - alpha,
/// i.e. this is E[lambda_k | mu_k - alpha >= -eps]. Throws DomainError when sigma_mu <= 0.
double conditional_mean_product(const ModelParams& params, double eps);

/// E[lambda_k | mu_k >= -eps] on the uncentred product utility:
///   gamma + sigma_lambda * rho * inverse_mills((-eps - alpha) / sigma_mu).
/// Coincides with conditional_mean_product when alpha = 0.
double truncated_mean_product(const ModelParams& params, double eps);

/// Mean idiosyncratic adoption utility of a sharer's peers given product
/// sharing utility `mu`: E[nu | eps >= -mu] = sigma_nu * psi * inverse_mills(-mu / sigma_nu).
double conditional_mean_dyad(const ModelParams& params, double mu);

}  // namespace selshare
