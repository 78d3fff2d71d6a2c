#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "selshare/params.hpp"

namespace selshare {

enum class SubjectId : std::uint64_t {};
enum class OfferId : std::uint64_t {};

constexpr std::uint64_t to_underlying(SubjectId id) noexcept { return static_cast<std::uint64_t>(id); }
constexpr std::uint64_t to_underlying(OfferId id) noexcept { return static_cast<std::uint64_t>(id); }

/// Experimental arm of a subject. Active subjects choose whether to share;
/// passive subjects share automatically.
enum class Treatment : std::uint8_t { passive = 0, active = 1 };

/// Latent utilities of one product.
struct OfferEffects {
  OfferId offer_id{};
  double mu = 0.0;      ///< sharing utility
  double lambda = 0.0;  ///< adoption utility
};

/// One subject-offer observation. Peer adoptions are stored as a count out of
/// the number of single-exposure peers.
struct ShareRecord {
  SubjectId subject_id{};
  OfferId offer_id{};
  Treatment treatment = Treatment::passive;
  bool shared = true;
  std::uint32_t peers_exposed = 0;
  std::uint32_t peer_adoptions = 0;

  /// Throws InputError when the record breaks a sharing/exposure invariant.
  void validate() const;

  friend bool operator==(const ShareRecord&, const ShareRecord&) = default;
};

/// Validated collection of records with a contiguous offer index.
/// Each (subject, offer) pair occurs at most once.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::vector<ShareRecord> records);

  const std::vector<ShareRecord>& records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }

  std::size_t n_offers() const noexcept { return offer_ids_.size(); }
  std::size_t n_subjects() const noexcept { return n_subjects_; }

  /// Contiguous index of an offer; throws InputError for an unknown id.
  std::uint32_t offer_index(OfferId id) const;
  OfferId offer_at(std::uint32_t index) const { return offer_ids_.at(index); }

  /// Offer index / subject index of record i (subjects indexed by first appearance).
  std::span<const std::uint32_t> record_offers() const noexcept { return record_offer_; }
  std::span<const std::uint32_t> record_subjects() const noexcept { return record_subject_; }

  template <class Pred>
  Dataset filter(Pred&& keep) const {
    std::vector<ShareRecord> kept;
    for (const auto& r : records_) {
      if (keep(r)) kept.push_back(r);
    }
    return Dataset(std::move(kept));
  }

  friend bool operator==(const Dataset& a, const Dataset& b) { return a.records_ == b.records_; }

 private:
  std::vector<ShareRecord> records_;
  std::vector<OfferId> offer_ids_;
  std::unordered_map<std::uint64_t, std::uint32_t> offer_index_;
  std::vector<std::uint32_t> record_offer_;
  std::vector<std::uint32_t> record_subject_;
  std::size_t n_subjects_ = 0;
};

/// Sharing rule: passive subjects always share; active ones share iff mu + eps >= 0.
bool share_decision(double mu, double eps, Treatment treatment) noexcept;

/// Peer adoption rule: 1{lambda + nu >= 0}.
bool adopt_decision(double lambda, double nu) noexcept;

/// Population probability of sharing in the active condition, Phi(alpha / sqrt(1 + sigma_mu^2)).
double marginal_share_rate(const ModelParams& params);

/// Population probability that an exposed peer adopts, by the sender's arm
/// (active arm conditions on the sender sharing).
double marginal_adoption_rate(const ModelParams& params, Treatment treatment);

/// Population relative risk of adoption for peers of active sharers versus
/// peers of passive subjects, in closed form via a bivariate normal orthant.
double model_relative_risk(const ModelParams& params);

}  // namespace selshare
