#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "selshare/errors.hpp"
#include "selshare/reduced_form.hpp"
#include "selshare/simulator.hpp"

using namespace selshare;

namespace {

ShareRecord rec(std::uint64_t s, std::uint64_t o, Treatment t, bool shared, std::uint32_t n, std::uint32_t a) {
  return {SubjectId{s}, OfferId{o}, t, shared, n, a};
}

Dataset tiny_share_data() {
  std::vector<ShareRecord> r;
  std::uint64_t s = 0;
  // Offer 0: 3 of 8 share; offer 1: 1 of 6; offer 2: 5 of 7. Passive rows are ignored by the share model.
  for (int i = 0; i < 8; ++i) r.push_back(rec(s++, 0, Treatment::active, i < 3, i < 3 ? 4 : 0, 0));
  for (int i = 0; i < 6; ++i) r.push_back(rec(s++, 1, Treatment::active, i < 1, 0, 0));
  for (int i = 0; i < 7; ++i) r.push_back(rec(s++, 2, Treatment::active, i < 5, i < 5 ? 2 : 0, i < 5 ? 1 : 0));
  r.push_back(rec(s++, 1, Treatment::passive, true, 3, 1));
  return Dataset(std::move(r));
}

Dataset tiny_adopt_data() {
  std::vector<ShareRecord> r;
  std::uint64_t s = 0;
  const std::uint32_t n[] = {12, 40, 3, 25, 60, 8, 0, 19};
  const std::uint32_t a[] = {1, 2, 0, 1, 4, 2, 0, 0};
  for (int k = 0; k < 8; ++k) {
    r.push_back(rec(s++, k % 3, k % 2 ? Treatment::active : Treatment::passive, true, n[k], a[k]));
  }
  r.push_back(rec(s++, 0, Treatment::active, false, 0, 0));  // non-sharers carry no adoption information
  return Dataset(std::move(r));
}

}  // namespace

TEST(IntraclassCorrelation, KnownValues) {
  EXPECT_NEAR(intraclass_correlation(0.262), 0.064, 5e-4);
  EXPECT_NEAR(intraclass_correlation(0.172), 0.029, 5e-4);
  EXPECT_EQ(intraclass_correlation(0.0), 0.0);
  EXPECT_THROW(intraclass_correlation(-0.1), DomainError);
}

TEST(ShareProbit, LikelihoodMatchesTrapezoidOracle) {
  const Dataset d = tiny_share_data();
  for (double alpha : {-1.0, -0.2, 0.4}) {
    for (double sigma : {0.05, 0.3, 1.0, 2.5}) {
      EXPECT_NEAR(share_probit_log_likelihood(d, alpha, sigma), oracle::share_loglik_trapezoid(d, alpha, sigma), 1e-4)
          << "alpha=" << alpha << " sigma=" << sigma;
    }
  }
  EXPECT_THROW(share_probit_log_likelihood(d, 0.0, 0.0), DomainError);
}

TEST(AdoptBinomial, LikelihoodMatchesTrapezoidOracle) {
  const Dataset d = tiny_adopt_data();
  for (double gamma : {-2.7, -1.5}) {
    for (double beta : {0.0, 0.3}) {
      for (double sigma : {0.05, 0.2, 0.8}) {
        EXPECT_NEAR(adopt_binomial_log_likelihood(d, gamma, beta, sigma),
                    oracle::adopt_loglik_trapezoid(d, gamma, beta, sigma), 1e-4)
            << "gamma=" << gamma << " beta=" << beta << " sigma=" << sigma;
      }
    }
  }
}

TEST(ShareProbit, FitMaximizesLikelihood) {
  const Dataset d = tiny_share_data();
  const auto fit = fit_share_probit(d);
  EXPECT_EQ(fit.n_groups, 3u);
  EXPECT_EQ(fit.n_obs, 21u);
  for (double da : {-0.05, 0.05}) {
    EXPECT_GE(fit.log_likelihood, share_probit_log_likelihood(d, fit.alpha_hat + da, fit.sigma_mu_hat));
  }
  EXPECT_GE(fit.log_likelihood, share_probit_log_likelihood(d, fit.alpha_hat, fit.sigma_mu_hat * 1.1));
}

TEST(ShareProbit, RecoversTruthOnSimulatedData) {
  SimConfig c;
  c.n_subjects = 120'000;
  c.n_offers = 4'000;
  c.treatment_probability = 1.0;
  c.seed = 31;
  const ModelParams p{-0.8, -2.7, 0.26, 0.17, 0.0, 0.0};
  const auto fit = fit_share_probit(simulate(p, c));
  EXPECT_NEAR(fit.alpha_hat, p.alpha, 4 * fit.standard_errors.alpha);
  EXPECT_NEAR(fit.sigma_mu_hat, p.sigma_mu, 4 * fit.standard_errors.sigma_mu);
  EXPECT_LT(fit.standard_errors.alpha, 0.02);
  EXPECT_FALSE(fit.at_boundary);
}

TEST(ShareProbit, NoOfferVarianceHitsBoundary) {
  // Identical share proportions across offers: the likelihood is maximized at sigma -> 0.
  std::vector<ShareRecord> r;
  std::uint64_t s = 0;
  for (std::uint64_t o = 0; o < 30; ++o) {
    for (int i = 0; i < 10; ++i) r.push_back(rec(s++, o, Treatment::active, i < 3, 0, 0));
  }
  const auto fit = fit_share_probit(Dataset(std::move(r)));
  EXPECT_TRUE(fit.at_boundary);
  EXPECT_FALSE(fit.warnings.empty());
  EXPECT_LT(fit.sigma_mu_hat, 1e-3);
  EXPECT_NEAR(fit.alpha_hat, -0.5244, 2e-3);
  EXPECT_TRUE(std::isnan(fit.standard_errors.sigma_mu));
}

TEST(ShareProbit, DegenerateInputs) {
  std::vector<ShareRecord> one_offer{rec(1, 0, Treatment::active, true, 1, 0), rec(2, 0, Treatment::active, false, 0, 0)};
  EXPECT_THROW(fit_share_probit(Dataset(one_offer)), IdentificationError);
  std::vector<ShareRecord> all{rec(1, 0, Treatment::active, true, 1, 0), rec(2, 1, Treatment::active, true, 0, 0)};
  const auto fit = fit_share_probit(Dataset(all));
  EXPECT_TRUE(fit.at_boundary);
  EXPECT_EQ(fit.alpha_hat, 8.0);
}

TEST(AdoptBinomial, RecoversTruthOnSimulatedData) {
  SimConfig c;
  c.n_subjects = 60'000;
  c.n_offers = 3'000;
  c.seed = 41;
  const ReducedAdoptionTruth truth{-2.6, 0.1, 0.25};
  const auto fit = fit_adopt_binomial(simulate_reduced_adoption(truth, c));
  EXPECT_NEAR(fit.gamma_hat, truth.gamma, 4 * fit.standard_errors.gamma);
  EXPECT_NEAR(fit.beta_hat, truth.beta, 4 * fit.standard_errors.beta);
  EXPECT_NEAR(fit.sigma_lambda_hat, truth.sigma_lambda, 4 * fit.standard_errors.sigma_lambda);
}

TEST(AdoptBinomial, IdentificationFailures) {
  std::vector<ShareRecord> constant{rec(1, 0, Treatment::active, true, 5, 1), rec(2, 1, Treatment::active, true, 5, 0)};
  EXPECT_THROW(fit_adopt_binomial(Dataset(constant)), IdentificationError);
  std::vector<ShareRecord> zeros{rec(1, 0, Treatment::active, true, 5, 0), rec(2, 1, Treatment::passive, true, 5, 0)};
  EXPECT_THROW(fit_adopt_binomial(Dataset(zeros)), IdentificationError);
  std::vector<ShareRecord> one{rec(1, 0, Treatment::active, true, 5, 1), rec(2, 0, Treatment::passive, true, 5, 0)};
  EXPECT_THROW(fit_adopt_binomial(Dataset(one)), IdentificationError);
}
