#include "selshare/counterfactual.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "selshare/errors.hpp"
#include "selshare/parallel.hpp"

namespace selshare {

namespace {
constexpr std::uint64_t kIterationDomain = 0x63667363ULL;
constexpr int kMaxAttempts = 64;

IntervalEstimate aggregate(std::vector<double> values, double confidence) {
  IntervalEstimate e;
  e.point = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  const double tail = 0.5 * (1.0 - confidence);
  e.lower = percentile(values, tail);
  e.upper = percentile(values, 1.0 - tail);
  e.replicate_values = std::move(values);
  return e;
}
}  // namespace

double totals_relative_risk(const PopulationTotals& t) noexcept {
  if (t.active_exposed == 0 || t.passive_exposed == 0 || t.passive_adoptions == 0) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  const double active = static_cast<double>(t.active_adoptions) / static_cast<double>(t.active_exposed);
  const double passive = static_cast<double>(t.passive_adoptions) / static_cast<double>(t.passive_exposed);
  return active / passive;
}

DecompositionResult decompose(const PosteriorDraws& posterior, const SimConfig& population,
                              const DecomposeOptions& options) {
  if (options.iterations < 2) throw ConfigError("decompose: iterations must be at least 2");
  if (!(options.confidence_level > 0.0 && options.confidence_level < 1.0)) {
    throw ConfigError("decompose: confidence_level must lie in (0, 1)");
  }
  population.validate();
  if (posterior.total_draws() == 0) throw InputError("decompose: posterior has no draws");
  if (options.require_converged && !posterior.converged) {
    throw ConvergenceError("decompose: posterior is not converged (some rhat above threshold)");
  }

  const auto n = static_cast<std::size_t>(options.iterations);
  std::vector<double> total(n), product(n), dyad(n);
  std::vector<int> extra(n, 0);
  parallel_for(n, population.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t t = begin; t < end; ++t) {
      for (int attempt = 0;; ++attempt) {
        if (attempt >= kMaxAttempts) throw DomainError("decompose: relative risk undefined in every attempt");
        RngStream rng(population.seed, stream_key(kIterationDomain, t * kMaxAttempts + attempt));
        const ModelParams full = posterior.at(rng.below(posterior.total_draws()));
        SimConfig arm = population;
        arm.seed = rng();
        arm.threads = 1;
        ModelParams no_dyad = full;
        no_dyad.psi = 0.0;
        ModelParams no_product = full;
        no_product.rho = 0.0;
        const double rr_full = totals_relative_risk(simulate_totals(full, arm));
        const double rr_product = totals_relative_risk(simulate_totals(no_dyad, arm));
        const double rr_dyad = totals_relative_risk(simulate_totals(no_product, arm));
        if (std::isfinite(rr_full) && std::isfinite(rr_product) && std::isfinite(rr_dyad)) {
          total[t] = rr_full;
          product[t] = rr_product;
          dyad[t] = rr_dyad;
          extra[t] = attempt;
          break;
        }
      }
    }
  });

  DecompositionResult result;
  result.iterations = options.iterations;
  result.population_size = population.n_subjects;
  result.redraws = std::accumulate(extra.begin(), extra.end(), 0);
  if (result.redraws * 10 > options.iterations) {
    throw DomainError("decompose: " + std::to_string(result.redraws) +
                      " redraws exceeded 10% of iterations; population too small");
  }
  result.rr_total = aggregate(std::move(total), options.confidence_level);
  result.rr_product = aggregate(std::move(product), options.confidence_level);
  result.rr_dyad = aggregate(std::move(dyad), options.confidence_level);
  return result;
}

std::vector<EffectRow> selection_effect_summary(const DecompositionResult& result) {
  return {{"total", result.rr_total.point, result.rr_total.lower, result.rr_total.upper},
          {"product", result.rr_product.point, result.rr_product.lower, result.rr_product.upper},
          {"dyad", result.rr_dyad.point, result.rr_dyad.lower, result.rr_dyad.upper}};
}

}  // namespace selshare
