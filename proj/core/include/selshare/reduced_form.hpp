#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "selshare/model.hpp"

namespace selshare {

struct FitOptions {
  int quadrature_nodes = 20;  ///< adaptive Gauss-Hermite nodes per offer
  double tolerance = 1e-8;    ///< stop when a sweep improves the log-likelihood by less
  unsigned threads = 1;
};

/// Random-effects probit for the active arm: Pr(s = 1 | mu_k) = Phi(mu_k), mu_k ~ N(alpha, sigma_mu^2).
struct ReducedFormShareFit {
  double alpha_hat = 0.0;
  double sigma_mu_hat = 0.0;
  double log_likelihood = 0.0;
  std::uint64_t n_groups = 0;
  std::uint64_t n_obs = 0;
  struct {
    double alpha = 0.0;
    double sigma_mu = 0.0;
  } standard_errors;
  bool at_boundary = false;
  std::vector<std::string> warnings;
};

/// Binomial-probit adoption model for sharers:
/// a ~ Binomial(n, Phi(beta * z + lambda_k + nu)), lambda_k ~ N(gamma, sigma_lambda^2), nu ~ N(0, 1) per record.
struct ReducedFormAdoptFit {
  double gamma_hat = 0.0;
  double beta_hat = 0.0;
  double sigma_lambda_hat = 0.0;
  double log_likelihood = 0.0;
  std::uint64_t n_groups = 0;
  std::uint64_t n_obs = 0;
  struct {
    double gamma = 0.0;
    double beta = 0.0;
    double sigma_lambda = 0.0;
  } standard_errors;
  bool at_boundary = false;
  std::vector<std::string> warnings;
};

/// Marginal log-likelihood of the share probit over the active-arm records of `dataset`.
double share_probit_log_likelihood(const Dataset& dataset, double alpha, double sigma_mu, int quadrature_nodes = 20);

/// Maximum-likelihood share probit. Passive records are ignored (their sharing is
/// deterministic). Throws IdentificationError with fewer than two offers.
/// All-share or no-share data return a boundary fit with a warning.
ReducedFormShareFit fit_share_probit(const Dataset& dataset, const FitOptions& options = {});

/// Marginal log-likelihood of the adoption model over sharer records with n > 0.
double adopt_binomial_log_likelihood(const Dataset& dataset, double gamma, double beta, double sigma_lambda,
                                     int quadrature_nodes = 20);

/// Maximum-likelihood adoption model over sharer records with n > 0.
/// Throws IdentificationError with fewer than two offers or a constant treatment column.
ReducedFormAdoptFit fit_adopt_binomial(const Dataset& dataset, const FitOptions& options = {});

/// sigma^2 / (sigma^2 + 1): share of latent variance at the offer level.
double intraclass_correlation(double sigma_group);

}  // namespace selshare
