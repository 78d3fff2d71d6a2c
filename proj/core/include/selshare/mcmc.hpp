#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "selshare/model.hpp"
#include "selshare/params.hpp"

namespace selshare {

/// Gelman-Rubin potential scale reduction over equal-length chains:
/// sqrt((W (n-1)/n + B/n) / W), clamped below at 1. Returns 1 when every draw is
/// identical and +inf when chains are internally constant but disagree.
/// Throws DomainError with fewer than two chains, fewer than ten draws per chain,
/// or chains of unequal length.
double compute_rhat(std::span<const std::vector<double>> chains);

struct McmcConfig {
  int chains = 3;
  int iterations = 2000;
  int burn_in = 1000;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  int hyper_sweeps = 8;        ///< random-walk updates of (sigma_mu, sigma_lambda, rho) per iteration
  bool adapt = true;           ///< tune proposal scales during burn-in
  double rhat_threshold = 1.1;

  /// Parameters to hold at `initial` instead of sampling (sampler validation).
  std::array<bool, ModelParams::kCount> fixed{};
  /// Start every chain here instead of at dispersed data-driven values.
  std::optional<ModelParams> initial;

  void validate() const;
};

struct PosteriorSummary {
  double mean = 0.0;
  double sd = 0.0;
  double q025 = 0.0;
  double median = 0.0;
  double q975 = 0.0;
};

struct PosteriorDraws {
  int chains = 0;
  int iterations_kept = 0;
  std::vector<std::vector<ModelParams>> draws;  ///< [chain][iteration]
  std::array<double, ModelParams::kCount> rhat{};
  std::array<double, ModelParams::kCount> acceptance{};  ///< mean acceptance of parameter-level moves
  bool converged = false;

  /// Values of one parameter, one vector per chain.
  std::vector<std::vector<double>> trace(Param p) const;
  /// All kept draws of one parameter, chain-major.
  std::vector<double> pooled(Param p) const;
  PosteriorSummary summary(Param p) const;
  std::size_t total_draws() const noexcept { return static_cast<std::size_t>(chains) * iterations_kept; }
  /// Draw by chain-major flat index.
  const ModelParams& at(std::size_t flat_index) const;

  /// Recomputes rhat and the converged flag from the stored draws.
  void update_diagnostics(double threshold = 1.1);

  /// A point-mass posterior: two identical single-draw chains at `params`, rhat 1.
  static PosteriorDraws degenerate(const ModelParams& params);
};

/// Bayesian fit of the joint sharing/adoption model by data augmentation.
/// Throws IdentificationError unless both conditions, some active sharing and some
/// exposure are present. Never throws for non-convergence: check `converged`.
PosteriorDraws fit_joint(const Dataset& dataset, const McmcConfig& config = {});

}  // namespace selshare
