#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "selshare/bootstrap.hpp"
#include "selshare/mcmc.hpp"
#include "selshare/simulator.hpp"

namespace selshare {

/// Relative risks under the fitted model and with one selection channel switched off.
/// `point` holds the mean over iterations; lower/upper are percentile bounds.
struct DecompositionResult {
  IntervalEstimate rr_total;    ///< both channels active
  IntervalEstimate rr_product;  ///< psi forced to 0
  IntervalEstimate rr_dyad;     ///< rho forced to 0
  int iterations = 0;
  std::uint64_t population_size = 0;
  int redraws = 0;  ///< iterations repeated because a relative risk was undefined
};

struct DecomposeOptions {
  int iterations = 500;
  double confidence_level = 0.95;
  bool require_converged = true;  ///< throw ConvergenceError for an unconverged posterior
};

/// Relative risk implied by simulated population totals: active-sharer adoption rate over
/// passive adoption rate. NaN when undefined.
double totals_relative_risk(const PopulationTotals& totals) noexcept;

/// For each iteration draws one posterior parameter vector and simulates three paired
/// populations (full, psi = 0, rho = 0) from identical random streams.
/// `population.seed` seeds the iteration streams; `population.threads` parallelises iterations.
DecompositionResult decompose(const PosteriorDraws& posterior, const SimConfig& population,
                              const DecomposeOptions& options = {});

struct EffectRow {
  std::string scenario;
  double mean = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

/// Three rows (total, product, dyad) ready for plotting.
std::vector<EffectRow> selection_effect_summary(const DecompositionResult& result);

}  // namespace selshare
