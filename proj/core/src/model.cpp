#include "selshare/model.hpp"

#include <cmath>
#include <string>
#include <unordered_set>

#include "selshare/errors.hpp"
#include "selshare/normal.hpp"

namespace selshare {
namespace {

struct PairHash {
  std::size_t operator()(const std::pair<std::uint64_t, std::uint64_t>& p) const noexcept {
    return std::hash<std::uint64_t>{}(p.first * 0x9E3779B97F4A7C15ULL ^ p.second);
  }
};

// Latent scales of the share index mu + eps and the peer index lambda + nu + noise.
double share_scale(const ModelParams& p) { return std::sqrt(1.0 + p.sigma_mu * p.sigma_mu); }
double adopt_scale(const ModelParams& p) { return std::sqrt(2.0 + p.sigma_lambda * p.sigma_lambda); }

}  // namespace

void ShareRecord::validate() const {
  if (treatment != Treatment::passive && treatment != Treatment::active) {
    throw InputError("record: treatment must be 0 or 1");
  }
  if (treatment == Treatment::passive && !shared) throw InputError("record: passive subject must share");
  if (!shared && (peers_exposed != 0 || peer_adoptions != 0)) {
    throw InputError("record: non-sharer with exposed peers or adoptions");
  }
  if (peer_adoptions > peers_exposed) throw InputError("record: peer_adoptions exceeds peers_exposed");
}

Dataset::Dataset(std::vector<ShareRecord> records) : records_(std::move(records)) {
  std::unordered_set<std::pair<std::uint64_t, std::uint64_t>, PairHash> seen;
  seen.reserve(records_.size());
  std::unordered_map<std::uint64_t, std::uint32_t> subject_index;
  subject_index.reserve(records_.size());
  record_offer_.reserve(records_.size());
  record_subject_.reserve(records_.size());
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& r = records_[i];
    try {
      r.validate();
    } catch (const InputError& e) {
      throw InputError(std::string(e.what()) + " (record " + std::to_string(i + 1) + ")");
    }
    const auto subject = to_underlying(r.subject_id);
    const auto offer = to_underlying(r.offer_id);
    if (!seen.emplace(subject, offer).second) {
      throw InputError("duplicate (subject_id, offer_id) pair (" + std::to_string(subject) + ", " +
                       std::to_string(offer) + ") at record " + std::to_string(i + 1));
    }
    auto [oit, new_offer] = offer_index_.try_emplace(offer, static_cast<std::uint32_t>(offer_ids_.size()));
    if (new_offer) offer_ids_.push_back(r.offer_id);
    record_offer_.push_back(oit->second);
    auto [sit, new_subject] = subject_index.try_emplace(subject, static_cast<std::uint32_t>(subject_index.size()));
    (void)new_subject;
    record_subject_.push_back(sit->second);
  }
  n_subjects_ = subject_index.size();
}

std::uint32_t Dataset::offer_index(OfferId id) const {
  const auto it = offer_index_.find(to_underlying(id));
  if (it == offer_index_.end()) throw InputError("unknown offer_id " + std::to_string(to_underlying(id)));
  return it->second;
}

bool share_decision(double mu, double eps, Treatment treatment) noexcept {
  if (treatment == Treatment::passive) return true;
  return mu + eps >= 0.0;
}

bool adopt_decision(double lambda, double nu) noexcept { return lambda + nu >= 0.0; }

double marginal_share_rate(const ModelParams& params) {
  params.validate();
  return std_normal_cdf(params.alpha / share_scale(params));
}

double marginal_adoption_rate(const ModelParams& params, Treatment treatment) {
  params.validate();
  const double adopt_index = params.gamma / adopt_scale(params);
  if (treatment == Treatment::passive) return std_normal_cdf(adopt_index);
  const double share_index = params.alpha / share_scale(params);
  const double corr = (params.rho * params.sigma_mu * params.sigma_lambda + params.psi) /
                      (share_scale(params) * adopt_scale(params));
  return bivariate_normal_cdf(adopt_index, share_index, corr) / std_normal_cdf(share_index);
}

double model_relative_risk(const ModelParams& params) {
  return marginal_adoption_rate(params, Treatment::active) / marginal_adoption_rate(params, Treatment::passive);
}

}  // namespace selshare
