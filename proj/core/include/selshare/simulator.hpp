#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "selshare/model.hpp"
#include "selshare/params.hpp"
#include "selshare/rng.hpp"

namespace selshare {

/// Distribution of the number of single-exposure peers of a sharer.
/// Counts are drawn independently of every utility.
struct ExposureDistribution {
  enum class Kind { negative_binomial, fixed, empirical };

  Kind kind = Kind::negative_binomial;
  double mean = 60.0;        ///< negative binomial mean
  double dispersion = 1.1;   ///< negative binomial size; 1.1 puts the median at 43 for mean 60
  std::uint32_t count = 0;   ///< fixed count
  std::vector<double> weights;  ///< empirical: weights[j] is the relative frequency of count j

  static ExposureDistribution negative_binomial(double mean, double dispersion);
  static ExposureDistribution fixed(std::uint32_t count);
  static ExposureDistribution empirical(std::vector<double> weights);

  /// Throws ConfigError on invalid parameters.
  void validate() const;
  std::uint32_t sample(RngStream& rng) const;
  /// Canonical text form, e.g. "negative_binomial(60, 1.1)".
  std::string describe() const;
};

struct SimConfig {
  std::uint64_t n_subjects = 0;
  std::uint64_t n_offers = 0;
  ExposureDistribution exposure_distribution{};
  double treatment_probability = 0.5;
  std::uint64_t seed = 0;
  /// Offers claimed by fewer subjects are dropped after simulation; 0 keeps all.
  std::uint32_t min_offer_subjects = 0;
  unsigned threads = 1;

  /// Throws ConfigError on invalid fields.
  void validate() const;
};

/// Per-offer latent utilities (mu_k, lambda_k) with correlation rho,
/// offer k drawn from its own stream.
std::vector<OfferEffects> draw_offer_effects(const ModelParams& params, const SimConfig& config);

/// Simulates one experiment: offers assigned uniformly, treatment Bernoulli,
/// (eps, nu) correlated by psi, sharing by the piecewise rule, exposures from
/// the exposure distribution and Binomial(n, Phi(lambda + nu)) adoptions for sharers.
/// Records are ordered by subject id; output is a pure function of (params, config minus threads).
Dataset simulate(const ModelParams& params, const SimConfig& config);

/// Aggregates of a simulated population, without materialising records.
struct PopulationTotals {
  std::uint64_t active_subjects = 0;
  std::uint64_t active_sharers = 0;
  std::uint64_t active_exposed = 0;
  std::uint64_t active_adoptions = 0;
  std::uint64_t passive_subjects = 0;
  std::uint64_t passive_exposed = 0;
  std::uint64_t passive_adoptions = 0;

  PopulationTotals& operator+=(const PopulationTotals& o) noexcept;
};

/// Same draws as simulate() (ignoring min_offer_subjects), summed per arm.
PopulationTotals simulate_totals(const ModelParams& params, const SimConfig& config);

/// Drops every offer claimed by fewer than `min_subjects` subjects.
Dataset drop_small_offers(const Dataset& dataset, std::uint32_t min_subjects = 25);

/// Ground truth for the reduced-form adoption model:
/// a ~ Binomial(n, Phi(beta * z + lambda_k + nu)), lambda_k ~ N(gamma, sigma_lambda^2), nu ~ N(0, 1).
struct ReducedAdoptionTruth {
  double gamma = 0.0;
  double beta = 0.0;
  double sigma_lambda = 1.0;
};

/// Sharer-only dataset (every subject shares) from the reduced-form adoption model.
Dataset simulate_reduced_adoption(const ReducedAdoptionTruth& truth, const SimConfig& config);

struct ConditionSummary {
  std::uint64_t subjects = 0;
  std::uint64_t distinct_offers = 0;
  double proportion_shared = 0.0;
  double mean_exposed = 0.0;    ///< among sharers
  double median_exposed = 0.0;  ///< among sharers
  std::uint64_t adoptions = 0;
  double adoption_rate = 0.0;   ///< sum(a) / sum(n)
  double adoptions_per_subject = 0.0;
  double adoptions_per_sharer = 0.0;
};

struct SummaryTable {
  ConditionSummary active;
  ConditionSummary passive;
};

/// Descriptive statistics per arm. Throws InputError on an empty dataset.
SummaryTable summarize(const Dataset& dataset);

}  // namespace selshare
