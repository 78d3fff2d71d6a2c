#include "selshare/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "selshare/errors.hpp"
#include "selshare/normal.hpp"
#include "selshare/parallel.hpp"

namespace selshare {
namespace {

constexpr std::uint64_t kOfferDomain = 0x6F66666572ULL;      // "offer"
constexpr std::uint64_t kSubjectDomain = 0x7375626A656374ULL;  // "subject"

std::uint32_t draw_binomial(std::uint32_t n, double p, RngStream& rng) {
  if (n == 0 || p <= 0.0) return 0;
  if (p >= 1.0) return n;
  std::binomial_distribution<int> dist(static_cast<int>(n), p);
  return static_cast<std::uint32_t>(dist(rng));
}

// Draw order per subject: offer, treatment, z1, z2, exposures, adoptions.
// Counterfactual arms reuse the same stream, so offer, treatment, eps and
// exposures coincide across arms.
ShareRecord simulate_subject(std::uint64_t i, const ModelParams& params, const std::vector<OfferEffects>& offers,
                             const SimConfig& config, double psi_complement) {
  RngStream rng(config.seed, stream_key(kSubjectDomain, i));
  const auto& offer = offers[rng.below(offers.size())];
  const Treatment treatment = rng.uniform() < config.treatment_probability ? Treatment::active : Treatment::passive;
  const double z1 = rng.normal();
  const double z2 = rng.normal();
  const double eps = z1;
  const double nu = params.psi * z1 + psi_complement * z2;

  ShareRecord r;
  r.subject_id = SubjectId{i};
  r.offer_id = offer.offer_id;
  r.treatment = treatment;
  r.shared = share_decision(offer.mu, eps, treatment);
  if (r.shared) {
    r.peers_exposed = config.exposure_distribution.sample(rng);
    r.peer_adoptions = draw_binomial(r.peers_exposed, std_normal_cdf(offer.lambda + nu), rng);
  }
  return r;
}

}  // namespace

ExposureDistribution ExposureDistribution::negative_binomial(double mean, double dispersion) {
  ExposureDistribution d;
  d.kind = Kind::negative_binomial;
  d.mean = mean;
  d.dispersion = dispersion;
  return d;
}

ExposureDistribution ExposureDistribution::fixed(std::uint32_t count) {
  ExposureDistribution d;
  d.kind = Kind::fixed;
  d.count = count;
  return d;
}

ExposureDistribution ExposureDistribution::empirical(std::vector<double> weights) {
  ExposureDistribution d;
  d.kind = Kind::empirical;
  d.weights = std::move(weights);
  return d;
}

void ExposureDistribution::validate() const {
  switch (kind) {
    case Kind::negative_binomial:
      if (!(mean > 0.0) || !std::isfinite(mean)) throw ConfigError("negative_binomial: mean must be positive");
      if (!(dispersion > 0.0) || !std::isfinite(dispersion)) {
        throw ConfigError("negative_binomial: dispersion must be positive");
      }
      break;
    case Kind::fixed:
      break;
    case Kind::empirical: {
      if (weights.empty()) throw ConfigError("empirical: no weights");
      double total = 0.0;
      for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("empirical: weights must be nonnegative");
        total += w;
      }
      if (!(total > 0.0)) throw ConfigError("empirical: weights sum to zero");
      break;
    }
  }
}

std::uint32_t ExposureDistribution::sample(RngStream& rng) const {
  switch (kind) {
    case Kind::fixed:
      return count;
    case Kind::negative_binomial: {
      std::gamma_distribution<double> gamma(dispersion, mean / dispersion);
      const double rate = gamma(rng);
      if (!(rate > 0.0)) return 0;
      std::poisson_distribution<long long> poisson(rate);
      return static_cast<std::uint32_t>(std::min<long long>(poisson(rng), 0xFFFFFFFFLL));
    }
    case Kind::empirical: {
      double total = 0.0;
      for (double w : weights) total += w;
      double u = rng.uniform() * total;
      for (std::size_t j = 0; j < weights.size(); ++j) {
        if (u < weights[j]) return static_cast<std::uint32_t>(j);
        u -= weights[j];
      }
      // Rounding: fall back to the last count with positive weight.
      for (std::size_t j = weights.size(); j-- > 0;) {
        if (weights[j] > 0.0) return static_cast<std::uint32_t>(j);
      }
      return 0;
    }
  }
  return 0;
}

std::string ExposureDistribution::describe() const {
  std::ostringstream out;
  out.precision(17);
  switch (kind) {
    case Kind::negative_binomial:
      out << "negative_binomial(" << mean << ", " << dispersion << ")";
      break;
    case Kind::fixed:
      out << "fixed(" << count << ")";
      break;
    case Kind::empirical:
      out << "empirical(" << weights.size() << " counts)";
      break;
  }
  return out.str();
}

void SimConfig::validate() const {
  if (n_subjects == 0) throw ConfigError("n_subjects must be positive");
  if (n_offers == 0) throw ConfigError("n_offers must be positive");
  if (!(treatment_probability >= 0.0 && treatment_probability <= 1.0)) {
    throw ConfigError("treatment_probability must lie in [0, 1]");
  }
  exposure_distribution.validate();
}

PopulationTotals& PopulationTotals::operator+=(const PopulationTotals& o) noexcept {
  active_subjects += o.active_subjects;
  active_sharers += o.active_sharers;
  active_exposed += o.active_exposed;
  active_adoptions += o.active_adoptions;
  passive_subjects += o.passive_subjects;
  passive_exposed += o.passive_exposed;
  passive_adoptions += o.passive_adoptions;
  return *this;
}

std::vector<OfferEffects> draw_offer_effects(const ModelParams& params, const SimConfig& config) {
  params.validate();
  config.validate();
  const BivariateSpec spec{params.alpha, params.gamma, params.sigma_mu, params.sigma_lambda, params.rho};
  std::vector<OfferEffects> offers(config.n_offers);
  for (std::uint64_t k = 0; k < config.n_offers; ++k) {
    RngStream rng(config.seed, stream_key(kOfferDomain, k));
    const double z1 = rng.normal();
    const double z2 = rng.normal();
    const auto [mu, lambda] = bivariate_from_standard(spec, z1, z2);
    offers[k] = OfferEffects{OfferId{k}, mu, lambda};
  }
  return offers;
}

Dataset simulate(const ModelParams& params, const SimConfig& config) {
  const auto offers = draw_offer_effects(params, config);
  const double psi_complement = std::sqrt(std::max(0.0, 1.0 - params.psi * params.psi));
  std::vector<ShareRecord> records(config.n_subjects);
  parallel_for(config.n_subjects, config.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) records[i] = simulate_subject(i, params, offers, config, psi_complement);
  });
  Dataset dataset(std::move(records));
  if (config.min_offer_subjects > 0) return drop_small_offers(dataset, config.min_offer_subjects);
  return dataset;
}

PopulationTotals simulate_totals(const ModelParams& params, const SimConfig& config) {
  const auto offers = draw_offer_effects(params, config);
  const double psi_complement = std::sqrt(std::max(0.0, 1.0 - params.psi * params.psi));
  const unsigned workers = std::max(1u, config.threads);
  std::vector<PopulationTotals> partial(workers);
  const std::size_t chunk = (config.n_subjects + workers - 1) / workers;
  parallel_for(workers, workers, [&](std::size_t wb, std::size_t we) {
    for (std::size_t w = wb; w < we; ++w) {
      PopulationTotals t;
      const std::size_t begin = std::min<std::size_t>(config.n_subjects, w * chunk);
      const std::size_t end = std::min<std::size_t>(config.n_subjects, begin + chunk);
      for (std::size_t i = begin; i < end; ++i) {
        const ShareRecord r = simulate_subject(i, params, offers, config, psi_complement);
        if (r.treatment == Treatment::active) {
          ++t.active_subjects;
          if (r.shared) {
            ++t.active_sharers;
            t.active_exposed += r.peers_exposed;
            t.active_adoptions += r.peer_adoptions;
          }
        } else {
          ++t.passive_subjects;
          t.passive_exposed += r.peers_exposed;
          t.passive_adoptions += r.peer_adoptions;
        }
      }
      partial[w] = t;
    }
  });
  PopulationTotals total;
  for (const auto& t : partial) total += t;
  return total;
}

Dataset drop_small_offers(const Dataset& dataset, std::uint32_t min_subjects) {
  std::vector<std::uint32_t> counts(dataset.n_offers(), 0);
  for (std::uint32_t slot : dataset.record_offers()) ++counts[slot];
  std::vector<ShareRecord> kept;
  kept.reserve(dataset.size());
  const auto slots = dataset.record_offers();
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (counts[slots[i]] >= min_subjects) kept.push_back(dataset.records()[i]);
  }
  return Dataset(std::move(kept));
}

Dataset simulate_reduced_adoption(const ReducedAdoptionTruth& truth, const SimConfig& config) {
  config.validate();
  if (!(truth.sigma_lambda > 0.0)) throw ConfigError("sigma_lambda must be positive");
  std::vector<double> lambdas(config.n_offers);
  for (std::uint64_t k = 0; k < config.n_offers; ++k) {
    RngStream rng(config.seed, stream_key(kOfferDomain, k));
    lambdas[k] = truth.gamma + truth.sigma_lambda * rng.normal();
  }
  std::vector<ShareRecord> records(config.n_subjects);
  parallel_for(config.n_subjects, config.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      RngStream rng(config.seed, stream_key(kSubjectDomain, i));
      const std::uint64_t k = rng.below(config.n_offers);
      const bool active = rng.uniform() < config.treatment_probability;
      const double nu = rng.normal();
      ShareRecord r;
      r.subject_id = SubjectId{i};
      r.offer_id = OfferId{k};
      r.treatment = active ? Treatment::active : Treatment::passive;
      r.shared = true;
      r.peers_exposed = config.exposure_distribution.sample(rng);
      const double index = (active ? truth.beta : 0.0) + lambdas[k] + nu;
      r.peer_adoptions = draw_binomial(r.peers_exposed, std_normal_cdf(index), rng);
      records[i] = r;
    }
  });
  return Dataset(std::move(records));
}

SummaryTable summarize(const Dataset& dataset) {
  if (dataset.empty()) throw InputError("summarize: empty dataset");
  struct Acc {
    std::uint64_t subjects = 0, sharers = 0, exposed = 0, adoptions = 0;
    std::unordered_set<std::uint32_t> offers;
    std::vector<std::uint32_t> sharer_exposures;
  };
  Acc acc[2];
  const auto slots = dataset.record_offers();
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& r = dataset.records()[i];
    Acc& a = acc[r.treatment == Treatment::active ? 0 : 1];
    ++a.subjects;
    a.offers.insert(slots[i]);
    if (r.shared) {
      ++a.sharers;
      a.sharer_exposures.push_back(r.peers_exposed);
    }
    a.exposed += r.peers_exposed;
    a.adoptions += r.peer_adoptions;
  }
  auto finish = [](Acc& a) {
    ConditionSummary s;
    s.subjects = a.subjects;
    s.distinct_offers = a.offers.size();
    s.adoptions = a.adoptions;
    if (a.subjects > 0) {
      s.proportion_shared = static_cast<double>(a.sharers) / static_cast<double>(a.subjects);
      s.adoptions_per_subject = static_cast<double>(a.adoptions) / static_cast<double>(a.subjects);
    }
    if (a.sharers > 0) {
      s.mean_exposed = static_cast<double>(a.exposed) / static_cast<double>(a.sharers);
      s.adoptions_per_sharer = static_cast<double>(a.adoptions) / static_cast<double>(a.sharers);
      auto& v = a.sharer_exposures;
      const std::size_t mid = v.size() / 2;
      std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
      const double upper = v[mid];
      if (v.size() % 2 == 1) {
        s.median_exposed = upper;
      } else {
        const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
        s.median_exposed = 0.5 * (lower + upper);
      }
    }
    if (a.exposed > 0) s.adoption_rate = static_cast<double>(a.adoptions) / static_cast<double>(a.exposed);
    return s;
  };
  return SummaryTable{finish(acc[0]), finish(acc[1])};
}

}  // namespace selshare
