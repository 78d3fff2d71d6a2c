#include "selshare/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "selshare/errors.hpp"
#include "selshare/parallel.hpp"
#include "selshare/rng.hpp"

namespace selshare {

namespace {
constexpr std::uint64_t kBootstrapDomain = 0x626f6f74ULL;
}

void BootstrapConfig::validate() const {
  if (replicates < 2) throw ConfigError("bootstrap: replicates must be at least 2");
  if (!(confidence_level > 0.0 && confidence_level < 1.0)) {
    throw ConfigError("bootstrap: confidence_level must lie in (0, 1)");
  }
}

double relative_risk(const Dataset& dataset, std::span<const double> weights) {
  if (weights.size() != dataset.size()) throw DomainError("relative_risk: one weight per record is required");
  double active_n = 0.0, active_a = 0.0, passive_n = 0.0, passive_a = 0.0;
  const auto& records = dataset.records();
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const double w = weights[i];
    if (r.treatment == Treatment::active) {
      if (!r.shared) continue;
      active_n += w * r.peers_exposed;
      active_a += w * r.peer_adoptions;
    } else {
      passive_n += w * r.peers_exposed;
      passive_a += w * r.peer_adoptions;
    }
  }
  if (!(active_n > 0.0)) throw DomainError("relative_risk: no exposures among active-condition sharers");
  if (!(passive_n > 0.0)) throw DomainError("relative_risk: no exposures in the passive condition");
  if (passive_a == 0.0) return std::numeric_limits<double>::infinity();
  return (active_a / active_n) / (passive_a / passive_n);
}

double relative_risk(const Dataset& dataset) {
  const std::vector<double> ones(dataset.size(), 1.0);
  return relative_risk(dataset, ones);
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw DomainError("percentile: no values");
  if (!(q >= 0.0 && q <= 1.0)) throw DomainError("percentile: q must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

IntervalEstimate multiway_bootstrap(const Dataset& dataset, const WeightedStatistic& statistic,
                                    const BootstrapConfig& config) {
  config.validate();
  if (dataset.empty()) throw DomainError("multiway_bootstrap: empty dataset");

  IntervalEstimate out;
  {
    const std::vector<double> ones(dataset.size(), 1.0);
    out.point = statistic(dataset, ones);
  }

  const auto subjects = dataset.record_subjects();
  const auto offers = dataset.record_offers();
  const auto reps = static_cast<std::size_t>(config.replicates);
  std::vector<double> values(reps, std::numeric_limits<double>::quiet_NaN());
  parallel_for(reps, config.threads, [&](std::size_t begin, std::size_t end) {
    std::vector<double> subject_w(dataset.n_subjects());
    std::vector<double> offer_w(dataset.n_offers());
    std::vector<double> w(dataset.size());
    for (std::size_t r = begin; r < end; ++r) {
      RngStream rng(config.seed, stream_key(kBootstrapDomain, r));
      for (double& v : subject_w) v = rng.poisson_unit();
      for (double& v : offer_w) v = rng.poisson_unit();
      for (std::size_t i = 0; i < w.size(); ++i) w[i] = subject_w[subjects[i]] * offer_w[offers[i]];
      try {
        values[r] = statistic(dataset, w);
      } catch (const std::exception&) {
        values[r] = std::numeric_limits<double>::quiet_NaN();
      }
    }
  });

  for (double v : values) {
    if (std::isfinite(v)) {
      out.replicate_values.push_back(v);
    } else {
      ++out.dropped;
    }
  }
  if (out.dropped * 10 > config.replicates) {
    throw DomainError("multiway_bootstrap: " + std::to_string(out.dropped) + " of " +
                      std::to_string(config.replicates) + " replicates failed");
  }
  const double tail = 0.5 * (1.0 - config.confidence_level);
  out.lower = percentile(out.replicate_values, tail);
  out.upper = percentile(out.replicate_values, 1.0 - tail);
  return out;
}

}  // namespace selshare
