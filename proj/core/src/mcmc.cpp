#include "selshare/mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "selshare/binomial_probit.hpp"
#include "selshare/errors.hpp"
#include "selshare/normal.hpp"
#include "selshare/parallel.hpp"
#include "selshare/rng.hpp"

namespace selshare {

void McmcConfig::validate() const {
  if (chains < 1) throw ConfigError("mcmc: chains must be at least 1");
  if (iterations < 1) throw ConfigError("mcmc: iterations must be positive");
  if (burn_in < 0 || burn_in >= iterations) throw ConfigError("mcmc: burn_in must satisfy 0 <= burn_in < iterations");
  if (hyper_sweeps < 1) throw ConfigError("mcmc: hyper_sweeps must be positive");
  if (!(rhat_threshold >= 1.0)) throw ConfigError("mcmc: rhat_threshold must be at least 1");
  const bool any_fixed = std::any_of(fixed.begin(), fixed.end(), [](bool f) { return f; });
  if (any_fixed && !initial) throw ConfigError("mcmc: fixed parameters need initial values");
  if (initial) initial->validate();
}

std::vector<std::vector<double>> PosteriorDraws::trace(Param p) const {
  const auto idx = static_cast<std::size_t>(p);
  std::vector<std::vector<double>> out(draws.size());
  for (std::size_t c = 0; c < draws.size(); ++c) {
    out[c].reserve(draws[c].size());
    for (const auto& d : draws[c]) out[c].push_back(d.to_array()[idx]);
  }
  return out;
}

std::vector<double> PosteriorDraws::pooled(Param p) const {
  std::vector<double> out;
  out.reserve(total_draws());
  for (auto& chain : trace(p)) out.insert(out.end(), chain.begin(), chain.end());
  return out;
}

namespace {

// Type-7 quantile of sorted data.
double sorted_quantile(const std::vector<double>& v, double q) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double h = (static_cast<double>(v.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

PosteriorSummary PosteriorDraws::summary(Param p) const {
  auto v = pooled(p);
  PosteriorSummary s;
  if (v.empty()) return s;
  const double n = static_cast<double>(v.size());
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  s.sd = v.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  std::sort(v.begin(), v.end());
  s.q025 = sorted_quantile(v, 0.025);
  s.median = sorted_quantile(v, 0.5);
  s.q975 = sorted_quantile(v, 0.975);
  return s;
}

const ModelParams& PosteriorDraws::at(std::size_t flat_index) const {
  if (iterations_kept <= 0 || flat_index >= total_draws()) throw DomainError("PosteriorDraws::at: index out of range");
  const auto per = static_cast<std::size_t>(iterations_kept);
  return draws.at(flat_index / per).at(flat_index % per);
}

void PosteriorDraws::update_diagnostics(double threshold) {
  converged = true;
  for (std::size_t i = 0; i < ModelParams::kCount; ++i) {
    const auto chains_of = trace(static_cast<Param>(i));
    if (chains_of.size() >= 2 && iterations_kept >= 10) {
      rhat[i] = compute_rhat(chains_of);
    } else {
      bool constant = true;
      const double first = chains_of.empty() || chains_of[0].empty() ? 0.0 : chains_of[0][0];
      for (const auto& c : chains_of) {
        for (double v : c) constant = constant && v == first;
      }
      rhat[i] = constant ? 1.0 : std::numeric_limits<double>::quiet_NaN();
    }
    if (!(rhat[i] <= threshold)) converged = false;
  }
}

PosteriorDraws PosteriorDraws::degenerate(const ModelParams& params) {
  params.validate();
  PosteriorDraws d;
  d.chains = 2;
  d.iterations_kept = 1;
  d.draws = {{params}, {params}};
  d.rhat.fill(1.0);
  d.acceptance.fill(1.0);
  d.converged = true;
  return d;
}

namespace {

constexpr std::uint64_t kChainDomain = 0x6d636d63ULL;
constexpr double kSigmaMax = 10.0;

// Records arranged offer by offer in canonical (offer_id, subject_id) order.
struct JointData {
  std::size_t offers = 0;
  std::vector<double> non_sharers;     // per offer, active with s = 0
  std::vector<double> silent_sharers;  // per offer, active with s = 1, n = 0
  std::vector<std::size_t> active_begin;   // CSR into active_*
  std::vector<std::size_t> passive_begin;  // CSR into passive_index
  std::vector<double> active_n;
  std::vector<double> active_a;
  std::vector<int> passive_index;
  std::unique_ptr<BinomialProbitTable> table;

  double share_rate = 0.0;
  double passive_rate = 0.0;
};

JointData prepare(const Dataset& dataset) {
  std::vector<const ShareRecord*> sorted;
  sorted.reserve(dataset.size());
  for (const auto& r : dataset.records()) sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(), [](const ShareRecord* a, const ShareRecord* b) {
    if (a->offer_id != b->offer_id) return to_underlying(a->offer_id) < to_underlying(b->offer_id);
    return to_underlying(a->subject_id) < to_underlying(b->subject_id);
  });

  JointData d;
  std::vector<BinomialProbitTable::Pair> passive_pairs;
  std::uint64_t active_total = 0, active_shared = 0, passive_total = 0, exposed = 0, adopted = 0;
  d.active_begin.push_back(0);
  d.passive_begin.push_back(0);
  for (std::size_t i = 0; i < sorted.size();) {
    const OfferId offer = sorted[i]->offer_id;
    double c0 = 0.0, c1 = 0.0;
    for (; i < sorted.size() && sorted[i]->offer_id == offer; ++i) {
      const auto& r = *sorted[i];
      if (r.treatment == Treatment::active) {
        ++active_total;
        if (!r.shared) {
          c0 += 1.0;
          continue;
        }
        ++active_shared;
        if (r.peers_exposed == 0) {
          c1 += 1.0;
        } else {
          d.active_n.push_back(r.peers_exposed);
          d.active_a.push_back(r.peer_adoptions);
        }
      } else {
        ++passive_total;
        if (r.peers_exposed > 0) {
          passive_pairs.emplace_back(r.peers_exposed, r.peer_adoptions);
          exposed += r.peers_exposed;
          adopted += r.peer_adoptions;
        }
      }
    }
    d.non_sharers.push_back(c0);
    d.silent_sharers.push_back(c1);
    d.active_begin.push_back(d.active_n.size());
    d.passive_begin.push_back(passive_pairs.size());
  }
  d.offers = d.non_sharers.size();
  if (active_total == 0 || passive_total == 0) {
    throw IdentificationError("joint model needs records from both conditions");
  }
  if (active_shared == 0 || active_shared == active_total) {
    throw IdentificationError("joint model needs both sharers and non-sharers in the active condition");
  }
  if (exposed == 0) throw IdentificationError("joint model needs exposed peers in the passive condition");
  if (d.offers < 2) throw IdentificationError("joint model needs at least two offers");
  d.table = std::make_unique<BinomialProbitTable>(passive_pairs);
  d.passive_index.reserve(passive_pairs.size());
  for (const auto& [n, a] : passive_pairs) d.passive_index.push_back(d.table->index_of(n, a));
  d.share_rate = static_cast<double>(active_shared) / static_cast<double>(active_total);
  d.passive_rate = std::clamp(static_cast<double>(adopted) / static_cast<double>(exposed), 1e-6, 1.0 - 1e-6);
  return d;
}

// Univariate slice sampler with stepping out and shrinkage.
template <class LogF>
double slice_sample(LogF&& logf, double x0, double f0, double width, RngStream& rng) {
  const double level = f0 + std::log(rng.uniform_open());
  double left = x0 - width * rng.uniform();
  double right = left + width;
  constexpr int kMaxSteps = 12;
  int budget = static_cast<int>(kMaxSteps * rng.uniform());
  int budget_right = kMaxSteps - 1 - budget;
  while (budget-- > 0 && logf(left) > level) left -= width;
  while (budget_right-- > 0 && logf(right) > level) right += width;
  for (int iter = 0; iter < 200; ++iter) {
    const double x = left + (right - left) * rng.uniform();
    if (logf(x) > level) return x;
    if (x < x0) {
      left = x;
    } else {
      right = x;
    }
  }
  return x0;
}

// Random-walk scale tuned during burn-in toward a target acceptance rate.
struct Adaptive {
  double scale = 0.1;
  int batch_accepts = 0;
  int batch_tries = 0;
  long accepts = 0;
  long tries = 0;

  void record(bool accepted) {
    batch_accepts += accepted ? 1 : 0;
    ++batch_tries;
    accepts += accepted ? 1 : 0;
    ++tries;
  }
  void tune(double target, int batch_index) {
    if (batch_tries == 0) return;
    const double rate = static_cast<double>(batch_accepts) / batch_tries;
    const double delta = std::min(0.25, 1.0 / std::sqrt(static_cast<double>(batch_index) + 1.0));
    scale *= std::exp(rate > target ? delta : -delta);
    batch_accepts = batch_tries = 0;
  }
  void reset_counts() {
    accepts = tries = 0;
    batch_accepts = batch_tries = 0;
  }
  double rate() const { return tries > 0 ? static_cast<double>(accepts) / tries : 1.0; }
};

// Slice width tuned to a multiple of the recent mean absolute move.
struct Width {
  double width;
  double moved = 0.0;
  long count = 0;

  void record(double step) {
    moved += std::abs(step);
    ++count;
  }
  void tune() {
    if (count == 0) return;
    const double mean = moved / static_cast<double>(count);
    if (mean > 0.0) width = std::clamp(3.0 * mean, 1e-3, 10.0);
    moved = 0.0;
    count = 0;
  }
};

class Chain {
 public:
  Chain(const JointData& data, const McmcConfig& config, int index)
      : d_(data), config_(config), rng_(config.seed, stream_key(kChainDomain, static_cast<std::uint64_t>(index))) {
    initialise(index);
  }

  std::vector<ModelParams> run(std::array<double, ModelParams::kCount>& acceptance) {
    std::vector<ModelParams> kept;
    kept.reserve(static_cast<std::size_t>(config_.iterations - config_.burn_in));
    constexpr int kBatch = 50;
    for (int it = 0; it < config_.iterations; ++it) {
      step();
      if (config_.adapt && it < config_.burn_in && (it + 1) % kBatch == 0) tune((it + 1) / kBatch);
      if (it + 1 == config_.burn_in) reset_counts();
      if (it >= config_.burn_in) kept.push_back(p_);
    }
    acceptance[0] = nc_alpha_.rate();
    acceptance[1] = nc_gamma_.rate();
    acceptance[2] = 0.5 * (rw_sigma_mu_.rate() + nc_sigma_mu_.rate());
    acceptance[3] = 0.5 * (rw_sigma_lambda_.rate() + nc_sigma_lambda_.rate());
    acceptance[4] = 0.5 * (rw_rho_.rate() + nc_rho_.rate());
    acceptance[5] = rw_psi_.rate();
    return kept;
  }

 private:
  bool is_fixed(Param q) const { return config_.fixed[static_cast<std::size_t>(q)]; }

  void initialise(int index) {
    if (config_.initial) {
      p_ = *config_.initial;
    } else {
      const double sm = 0.3 * std::exp(0.5 * rng_.normal());
      const double sl = 0.2 * std::exp(0.5 * rng_.normal());
      p_.alpha = std_normal_quantile(d_.share_rate) * std::sqrt(1.0 + sm * sm) + 0.5 * rng_.normal();
      p_.gamma = std_normal_quantile(d_.passive_rate) * std::sqrt(2.0 + sl * sl) + 0.3 * rng_.normal();
      p_.sigma_mu = sm;
      p_.sigma_lambda = sl;
      p_.rho = 1.2 * rng_.uniform() - 0.6;
      p_.psi = 0.6 * rng_.uniform() - 0.3;
    }
    (void)index;
    mu_.resize(d_.offers);
    lambda_.resize(d_.offers);
    const double root = std::sqrt(1.0 - p_.rho * p_.rho);
    for (std::size_t k = 0; k < d_.offers; ++k) {
      const double z1 = rng_.normal();
      const double z2 = rng_.normal();
      mu_[k] = p_.alpha + p_.sigma_mu * z1;
      lambda_[k] = p_.gamma + p_.sigma_lambda * (p_.rho * z1 + root * z2);
    }
    nu_.resize(d_.active_n.size());
    for (double& v : nu_) v = rng_.normal();

    rw_sigma_mu_.scale = 0.1;
    rw_sigma_lambda_.scale = 0.1;
    rw_rho_.scale = 0.2;
    rw_psi_.scale = 0.02;
    nc_alpha_.scale = 0.02;
    nc_sigma_mu_.scale = 0.05;
    nc_gamma_.scale = 0.01;
    nc_sigma_lambda_.scale = 0.05;
    nc_rho_.scale = 0.1;
    cp_sigma_lambda_.scale = 0.05;
    cp_rho_.scale = 0.05;
  }

  // ---- log-likelihood pieces -----------------------------------------------------

  double selection_sd() const { return std::sqrt(1.0 - p_.psi * p_.psi); }

  double share_terms(std::size_t k, double mu, double psi, double s) const {
    double v = 0.0;
    if (d_.non_sharers[k] > 0.0) v += d_.non_sharers[k] * std_normal_log_cdf(-mu);
    if (d_.silent_sharers[k] > 0.0) v += d_.silent_sharers[k] * std_normal_log_cdf(mu);
    for (std::size_t j = d_.active_begin[k]; j < d_.active_begin[k + 1]; ++j) {
      v += std_normal_log_cdf((mu + psi * nu_[j]) / s);
    }
    return v;
  }

  double binomial_term(std::size_t j, double x) const {
    const double a = d_.active_a[j];
    const double b = d_.active_n[j] - a;
    double v = 0.0;
    if (a > 0.0) v += a * std_normal_log_cdf(x);
    if (b > 0.0) v += b * std_normal_log_cdf(-x);
    return v;
  }

  double adopt_terms(std::size_t k, double lambda) const {
    double v = 0.0;
    for (std::size_t j = d_.passive_begin[k]; j < d_.passive_begin[k + 1]; ++j) {
      v += d_.table->log_value(d_.passive_index[j], lambda);
    }
    for (std::size_t j = d_.active_begin[k]; j < d_.active_begin[k + 1]; ++j) v += binomial_term(j, lambda + nu_[j]);
    return v;
  }

  // ---- updates ---------------------------------------------------------------------

  void step() {
    update_nu();
    update_offer_effects();
    update_offer_shift();
    update_locations();
    update_scales_centered();
    update_noncentered();
    update_compensated();
    update_psi();
  }

  void update_nu() {
    const double psi = p_.psi;
    const double s = selection_sd();
    for (std::size_t k = 0; k < d_.offers; ++k) {
      const double mu = mu_[k];
      const double lambda = lambda_[k];
      for (std::size_t j = d_.active_begin[k]; j < d_.active_begin[k + 1]; ++j) {
        auto logf = [&](double v) {
          return -0.5 * v * v + binomial_term(j, lambda + v) + std_normal_log_cdf((mu + psi * v) / s);
        };
        const double old = nu_[j];
        nu_[j] = slice_sample(logf, old, logf(old), w_nu_.width, rng_);
        w_nu_.record(nu_[j] - old);
      }
    }
  }

  void update_offer_effects() {
    const double psi = p_.psi;
    const double s = selection_sd();
    const double root = std::sqrt(1.0 - p_.rho * p_.rho);
    const double mu_sd = p_.sigma_mu * root;
    const double lambda_sd = p_.sigma_lambda * root;
    for (std::size_t k = 0; k < d_.offers; ++k) {
      {
        const double mean = p_.alpha + p_.rho * p_.sigma_mu / p_.sigma_lambda * (lambda_[k] - p_.gamma);
        auto logf = [&](double m) {
          const double z = (m - mean) / mu_sd;
          return -0.5 * z * z + share_terms(k, m, psi, s);
        };
        const double old = mu_[k];
        mu_[k] = slice_sample(logf, old, logf(old), w_mu_.width, rng_);
        w_mu_.record(mu_[k] - old);
      }
      {
        const double mean = p_.gamma + p_.rho * p_.sigma_lambda / p_.sigma_mu * (mu_[k] - p_.alpha);
        auto logf = [&](double l) {
          const double z = (l - mean) / lambda_sd;
          return -0.5 * z * z + adopt_terms(k, l);
        };
        const double old = lambda_[k];
        lambda_[k] = slice_sample(logf, old, logf(old), w_lambda_.width, rng_);
        w_lambda_.record(lambda_[k] - old);
      }
    }
  }

  // Gibbs draw of (alpha, gamma) given the offer effects; flat prior.
  void update_locations() {
    const bool fa = is_fixed(Param::alpha), fg = is_fixed(Param::gamma);
    if (fa && fg) return;
    const double kk = static_cast<double>(d_.offers);
    const double mbar = std::accumulate(mu_.begin(), mu_.end(), 0.0) / kk;
    const double lbar = std::accumulate(lambda_.begin(), lambda_.end(), 0.0) / kk;
    const double sa = p_.sigma_mu / std::sqrt(kk);
    const double sg = p_.sigma_lambda / std::sqrt(kk);
    const double root = std::sqrt(1.0 - p_.rho * p_.rho);
    if (!fa && !fg) {
      const double z1 = rng_.normal(), z2 = rng_.normal();
      p_.alpha = mbar + sa * z1;
      p_.gamma = lbar + sg * (p_.rho * z1 + root * z2);
    } else if (!fa) {
      p_.alpha = mbar + p_.rho * sa / sg * (p_.gamma - lbar) + sa * root * rng_.normal();
    } else {
      p_.gamma = lbar + p_.rho * sg / sa * (p_.alpha - mbar) + sg * root * rng_.normal();
    }
  }

  // Centered random-walk moves of the offer-effect covariance given the effects.
  void update_scales_centered() {
    double suu = 0.0, sll = 0.0, sul = 0.0;
    for (std::size_t k = 0; k < d_.offers; ++k) {
      const double u = mu_[k] - p_.alpha;
      const double l = lambda_[k] - p_.gamma;
      suu += u * u;
      sll += l * l;
      sul += u * l;
    }
    const double kk = static_cast<double>(d_.offers);
    // Log target on (log sigma_mu, log sigma_lambda, atanh rho), flat priors on the natural scale.
    auto target = [&](double sm, double sl, double r) {
      if (sm > kSigmaMax || sl > kSigmaMax) return -std::numeric_limits<double>::infinity();
      const double one = 1.0 - r * r;
      const double q = (suu / (sm * sm) - 2.0 * r * sul / (sm * sl) + sll / (sl * sl)) / one;
      return -(kk - 1.0) * (std::log(sm) + std::log(sl)) - (0.5 * kk - 1.0) * std::log(one) - 0.5 * q;
    };
    double current = target(p_.sigma_mu, p_.sigma_lambda, p_.rho);
    for (int sweep = 0; sweep < config_.hyper_sweeps; ++sweep) {
      if (!is_fixed(Param::sigma_mu)) {
        const double prop = p_.sigma_mu * std::exp(rw_sigma_mu_.scale * rng_.normal());
        const double t = target(prop, p_.sigma_lambda, p_.rho);
        const bool ok = std::log(rng_.uniform_open()) < t - current;
        if (ok) p_.sigma_mu = prop, current = t;
        rw_sigma_mu_.record(ok);
      }
      if (!is_fixed(Param::sigma_lambda)) {
        const double prop = p_.sigma_lambda * std::exp(rw_sigma_lambda_.scale * rng_.normal());
        const double t = target(p_.sigma_mu, prop, p_.rho);
        const bool ok = std::log(rng_.uniform_open()) < t - current;
        if (ok) p_.sigma_lambda = prop, current = t;
        rw_sigma_lambda_.record(ok);
      }
      if (!is_fixed(Param::rho)) {
        const double prop = std::tanh(std::atanh(p_.rho) + rw_rho_.scale * rng_.normal());
        if (std::abs(prop) < 1.0) {
          const double t = target(p_.sigma_mu, p_.sigma_lambda, prop);
          const bool ok = std::log(rng_.uniform_open()) < t - current;
          if (ok) p_.rho = prop, current = t;
          rw_rho_.record(ok);
        }
      }
    }
  }

  // Moves with the standardised offer effects held fixed, so location and scale
  // changes carry the effects along with them.
  void update_noncentered() {
    const double psi = p_.psi;
    const double s = selection_sd();
    auto share_total = [&](const std::vector<double>& mu) {
      double v = 0.0;
      for (std::size_t k = 0; k < d_.offers; ++k) v += share_terms(k, mu[k], psi, s);
      return v;
    };
    auto adopt_total = [&](const std::vector<double>& lambda) {
      double v = 0.0;
      for (std::size_t k = 0; k < d_.offers; ++k) v += adopt_terms(k, lambda[k]);
      return v;
    };
    const std::size_t kk = d_.offers;
    proposal_.resize(kk);

    double share_now = share_total(mu_);
    if (!is_fixed(Param::alpha)) {
      const double delta = nc_alpha_.scale * rng_.normal();
      for (std::size_t k = 0; k < kk; ++k) proposal_[k] = mu_[k] + delta;
      const double t = share_total(proposal_);
      const bool ok = std::log(rng_.uniform_open()) < t - share_now;
      if (ok) p_.alpha += delta, mu_.swap(proposal_), share_now = t;
      nc_alpha_.record(ok);
    }
    // Scale moves also slide the location along the ridge alpha / sqrt(1 + sigma_mu^2) = const,
    // which keeps the marginal share rate fixed; the location factor enters as a Jacobian.
    if (!is_fixed(Param::sigma_mu)) {
      const double prop = p_.sigma_mu * std::exp(nc_sigma_mu_.scale * rng_.normal());
      if (prop <= kSigmaMax) {
        const double ratio = prop / p_.sigma_mu;
        const double slide = is_fixed(Param::alpha)
                                 ? 1.0
                                 : std::sqrt((1.0 + prop * prop) / (1.0 + p_.sigma_mu * p_.sigma_mu));
        const double alpha = p_.alpha * slide;
        for (std::size_t k = 0; k < kk; ++k) proposal_[k] = alpha + ratio * (mu_[k] - p_.alpha);
        const double t = share_total(proposal_);
        const bool ok = std::log(rng_.uniform_open()) < t - share_now + std::log(ratio) + std::log(slide);
        if (ok) p_.sigma_mu = prop, p_.alpha = alpha, mu_.swap(proposal_), share_now = t;
        nc_sigma_mu_.record(ok);
      } else {
        nc_sigma_mu_.record(false);
      }
    }

    double adopt_now = adopt_total(lambda_);
    if (!is_fixed(Param::gamma)) {
      const double delta = nc_gamma_.scale * rng_.normal();
      for (std::size_t k = 0; k < kk; ++k) proposal_[k] = lambda_[k] + delta;
      const double t = adopt_total(proposal_);
      const bool ok = std::log(rng_.uniform_open()) < t - adopt_now;
      if (ok) p_.gamma += delta, lambda_.swap(proposal_), adopt_now = t;
      nc_gamma_.record(ok);
    }
    if (!is_fixed(Param::sigma_lambda)) {
      const double prop = p_.sigma_lambda * std::exp(nc_sigma_lambda_.scale * rng_.normal());
      if (prop <= kSigmaMax) {
        const double ratio = prop / p_.sigma_lambda;
        // Passive adoption rate depends on gamma / sqrt(2 + sigma_lambda^2).
        const double slide = is_fixed(Param::gamma)
                                 ? 1.0
                                 : std::sqrt((2.0 + prop * prop) / (2.0 + p_.sigma_lambda * p_.sigma_lambda));
        const double gamma = p_.gamma * slide;
        for (std::size_t k = 0; k < kk; ++k) proposal_[k] = gamma + ratio * (lambda_[k] - p_.gamma);
        const double t = adopt_total(proposal_);
        const bool ok = std::log(rng_.uniform_open()) < t - adopt_now + std::log(ratio) + std::log(slide);
        if (ok) p_.sigma_lambda = prop, p_.gamma = gamma, lambda_.swap(proposal_), adopt_now = t;
        nc_sigma_lambda_.record(ok);
      } else {
        nc_sigma_lambda_.record(false);
      }
    }
    if (!is_fixed(Param::rho)) {
      const double prop = std::tanh(std::atanh(p_.rho) + nc_rho_.scale * rng_.normal());
      if (std::abs(prop) < 1.0) {
        const double root_old = std::sqrt(1.0 - p_.rho * p_.rho);
        const double root_new = std::sqrt(1.0 - prop * prop);
        for (std::size_t k = 0; k < kk; ++k) {
          const double z1 = (mu_[k] - p_.alpha) / p_.sigma_mu;
          const double z2 = ((lambda_[k] - p_.gamma) / p_.sigma_lambda - p_.rho * z1) / root_old;
          proposal_[k] = p_.gamma + p_.sigma_lambda * (prop * z1 + root_new * z2);
        }
        const double t = adopt_total(proposal_);
        const double jac = std::log(1.0 - prop * prop) - std::log(1.0 - p_.rho * p_.rho);
        const bool ok = std::log(rng_.uniform_open()) < t - adopt_now + jac;
        if (ok) p_.rho = prop, lambda_.swap(proposal_), adopt_now = t;
        nc_rho_.record(ok);
      } else {
        nc_rho_.record(false);
      }
    }
  }

  // Shifts lambda_k and the active-sharer nu of offer k in opposite directions; their sum,
  // and with it every active binomial term, stays put.
  void update_offer_shift() {
    const double psi = p_.psi;
    const double s = selection_sd();
    const double slope = p_.rho * p_.sigma_lambda / p_.sigma_mu;
    const double sd = p_.sigma_lambda * std::sqrt(1.0 - p_.rho * p_.rho);
    for (std::size_t k = 0; k < d_.offers; ++k) {
      if (d_.active_begin[k] == d_.active_begin[k + 1]) continue;
      const double mean = p_.gamma + slope * (mu_[k] - p_.alpha);
      const double mu = mu_[k];
      auto logf = [&](double delta) {
        const double z = (lambda_[k] + delta - mean) / sd;
        double v = -0.5 * z * z;
        for (std::size_t j = d_.passive_begin[k]; j < d_.passive_begin[k + 1]; ++j) {
          v += d_.table->log_value(d_.passive_index[j], lambda_[k] + delta);
        }
        for (std::size_t j = d_.active_begin[k]; j < d_.active_begin[k + 1]; ++j) {
          const double nu = nu_[j] - delta;
          v += -0.5 * nu * nu + std_normal_log_cdf((mu + psi * nu) / s);
        }
        return v;
      };
      const double delta = slice_sample(logf, 0.0, logf(0.0), w_shift_.width, rng_);
      w_shift_.record(delta);
      lambda_[k] += delta;
      for (std::size_t j = d_.active_begin[k]; j < d_.active_begin[k + 1]; ++j) nu_[j] -= delta;
    }
  }

  // Non-centred scale and correlation moves that move each active-sharer nu against its
  // offer effect, so the active binomial terms are unchanged and only the passive terms,
  // the nu prior and the sharing terms enter the acceptance ratio.
  void update_compensated() {
    const std::size_t kk = d_.offers;
    const double psi = p_.psi;
    const double s = selection_sd();
    auto offer_terms = [&](std::size_t k, double lambda) {
      double v = 0.0;
      for (std::size_t j = d_.passive_begin[k]; j < d_.passive_begin[k + 1]; ++j) {
        v += d_.table->log_value(d_.passive_index[j], lambda);
      }
      const double shift = lambda - lambda_[k];
      for (std::size_t j = d_.active_begin[k]; j < d_.active_begin[k + 1]; ++j) {
        const double nu = nu_[j] - shift;
        v += -0.5 * nu * nu + std_normal_log_cdf((mu_[k] + psi * nu) / s);
      }
      return v;
    };
    auto total = [&](const std::vector<double>& lambda) {
      double v = 0.0;
      for (std::size_t k = 0; k < kk; ++k) v += offer_terms(k, lambda[k]);
      return v;
    };
    auto accept = [&](const std::vector<double>& lambda) {
      for (std::size_t k = 0; k < kk; ++k) {
        const double shift = lambda[k] - lambda_[k];
        for (std::size_t j = d_.active_begin[k]; j < d_.active_begin[k + 1]; ++j) nu_[j] -= shift;
      }
      lambda_ = lambda;
    };
    if (!is_fixed(Param::sigma_lambda)) {
      const double prop = p_.sigma_lambda * std::exp(cp_sigma_lambda_.scale * rng_.normal());
      if (prop <= kSigmaMax) {
        const double ratio = prop / p_.sigma_lambda;
        const double slide = is_fixed(Param::gamma)
                                 ? 1.0
                                 : std::sqrt((2.0 + prop * prop) / (2.0 + p_.sigma_lambda * p_.sigma_lambda));
        const double gamma = p_.gamma * slide;
        for (std::size_t k = 0; k < kk; ++k) proposal_[k] = gamma + ratio * (lambda_[k] - p_.gamma);
        const double now = total(lambda_);
        const double t = total(proposal_);
        const bool ok = std::log(rng_.uniform_open()) < t - now + std::log(ratio) + std::log(slide);
        if (ok) p_.sigma_lambda = prop, p_.gamma = gamma, accept(proposal_);
        cp_sigma_lambda_.record(ok);
      } else {
        cp_sigma_lambda_.record(false);
      }
    }
    if (!is_fixed(Param::rho)) {
      const double prop = std::tanh(std::atanh(p_.rho) + cp_rho_.scale * rng_.normal());
      if (std::abs(prop) < 1.0) {
        const double root_old = std::sqrt(1.0 - p_.rho * p_.rho);
        const double root_new = std::sqrt(1.0 - prop * prop);
        for (std::size_t k = 0; k < kk; ++k) {
          const double z1 = (mu_[k] - p_.alpha) / p_.sigma_mu;
          const double z2 = ((lambda_[k] - p_.gamma) / p_.sigma_lambda - p_.rho * z1) / root_old;
          proposal_[k] = p_.gamma + p_.sigma_lambda * (prop * z1 + root_new * z2);
        }
        const double now = total(lambda_);
        const double t = total(proposal_);
        const double jac = std::log(1.0 - prop * prop) - std::log(1.0 - p_.rho * p_.rho);
        const bool ok = std::log(rng_.uniform_open()) < t - now + jac;
        if (ok) p_.rho = prop, accept(proposal_);
        cp_rho_.record(ok);
      } else {
        cp_rho_.record(false);
      }
    }
  }

  void update_psi() {
    if (is_fixed(Param::psi)) return;
    auto target = [&](double psi) {
      const double s = std::sqrt(1.0 - psi * psi);
      double v = std::log(1.0 - psi * psi);
      for (std::size_t k = 0; k < d_.offers; ++k) {
        const double mu = mu_[k];
        for (std::size_t j = d_.active_begin[k]; j < d_.active_begin[k + 1]; ++j) {
          v += std_normal_log_cdf((mu + psi * nu_[j]) / s);
        }
      }
      return v;
    };
    double current = target(p_.psi);
    for (int rep = 0; rep < 2; ++rep) {
      const double prop = std::tanh(std::atanh(p_.psi) + rw_psi_.scale * rng_.normal());
      if (!(std::abs(prop) < 1.0)) {
        rw_psi_.record(false);
        continue;
      }
      const double t = target(prop);
      const bool ok = std::log(rng_.uniform_open()) < t - current;
      if (ok) p_.psi = prop, current = t;
      rw_psi_.record(ok);
    }
  }

  void tune(int batch) {
    constexpr double kTarget = 0.44;
    for (Adaptive* a : {&rw_sigma_mu_, &rw_sigma_lambda_, &rw_rho_, &rw_psi_, &nc_alpha_, &nc_sigma_mu_, &nc_gamma_,
                        &nc_sigma_lambda_, &nc_rho_, &cp_sigma_lambda_, &cp_rho_}) {
      a->tune(kTarget, batch);
    }
    w_nu_.tune();
    w_mu_.tune();
    w_lambda_.tune();
    w_shift_.tune();
  }

  void reset_counts() {
    for (Adaptive* a : {&rw_sigma_mu_, &rw_sigma_lambda_, &rw_rho_, &rw_psi_, &nc_alpha_, &nc_sigma_mu_, &nc_gamma_,
                        &nc_sigma_lambda_, &nc_rho_, &cp_sigma_lambda_, &cp_rho_}) {
      a->reset_counts();
    }
  }

  const JointData& d_;
  const McmcConfig& config_;
  RngStream rng_;
  ModelParams p_;
  std::vector<double> mu_, lambda_, nu_, proposal_;

  Adaptive rw_sigma_mu_, rw_sigma_lambda_, rw_rho_, rw_psi_;
  Adaptive nc_alpha_, nc_sigma_mu_, nc_gamma_, nc_sigma_lambda_, nc_rho_;
  Adaptive cp_sigma_lambda_, cp_rho_;
  Width w_nu_{1.0}, w_mu_{0.5}, w_lambda_{0.25}, w_shift_{0.25};
};

}  // namespace

PosteriorDraws fit_joint(const Dataset& dataset, const McmcConfig& config) {
  config.validate();
  const JointData data = prepare(dataset);

  PosteriorDraws out;
  out.chains = config.chains;
  out.iterations_kept = config.iterations - config.burn_in;
  out.draws.resize(static_cast<std::size_t>(config.chains));
  std::vector<std::array<double, ModelParams::kCount>> acceptance(static_cast<std::size_t>(config.chains));
  parallel_for(static_cast<std::size_t>(config.chains), config.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t c = begin; c < end; ++c) {
      Chain chain(data, config, static_cast<int>(c));
      out.draws[c] = chain.run(acceptance[c]);
    }
  });
  for (std::size_t i = 0; i < ModelParams::kCount; ++i) {
    double sum = 0.0;
    for (const auto& a : acceptance) sum += a[i];
    out.acceptance[i] = config.fixed[i] ? 0.0 : sum / static_cast<double>(acceptance.size());
  }
  out.update_diagnostics(config.rhat_threshold);
  return out;
}

}  // namespace selshare
