#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "selshare/model.hpp"

namespace selshare {

struct BootstrapConfig {
  int replicates = 500;
  std::uint64_t seed = 0;
  double confidence_level = 0.95;
  unsigned threads = 1;

  void validate() const;
};

struct IntervalEstimate {
  double point = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  std::vector<double> replicate_values;
  int dropped = 0;  ///< replicates whose statistic failed or was not finite
};

/// Statistic of a dataset under per-record weights (one weight per record, in record order).
using WeightedStatistic = std::function<double(const Dataset&, std::span<const double>)>;

/// Pooled adoption rate of active-condition sharers over that of passive-condition subjects.
/// Throws DomainError when either arm has no exposures; returns +inf when the passive arm
/// has exposures but no adoptions.
double relative_risk(const Dataset& dataset);
double relative_risk(const Dataset& dataset, std::span<const double> weights);

/// Two-way clustered bootstrap with Poisson(1) multiplier weights drawn per subject and
/// per offer; each record is weighted by the product. Returns the unweighted statistic as
/// `point` and type-7 percentile bounds over the replicates. Replicates whose statistic
/// throws or is not finite are dropped; more than 10% dropped throws DomainError.
IntervalEstimate multiway_bootstrap(const Dataset& dataset, const WeightedStatistic& statistic,
                                    const BootstrapConfig& config = {});

/// Type-7 (linear interpolation) sample quantile; `values` need not be sorted.
double percentile(std::vector<double> values, double q);

}  // namespace selshare
