#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "selshare/errors.hpp"
#include "selshare/joint_likelihood.hpp"
#include "selshare/simulator.hpp"

using namespace selshare;

namespace {

ShareRecord rec(std::uint64_t s, std::uint64_t o, Treatment t, bool shared, std::uint32_t n, std::uint32_t a) {
  return {SubjectId{s}, OfferId{o}, t, shared, n, a};
}

// Hand-built instance touching every record type.
Dataset handmade() {
  return Dataset({rec(1, 0, Treatment::active, true, 10, 2), rec(2, 0, Treatment::active, false, 0, 0),
                  rec(3, 0, Treatment::active, true, 0, 0), rec(4, 0, Treatment::passive, true, 7, 1),
                  rec(5, 0, Treatment::passive, true, 0, 0), rec(6, 1, Treatment::active, true, 25, 0),
                  rec(7, 1, Treatment::active, false, 0, 0), rec(8, 1, Treatment::active, false, 0, 0),
                  rec(9, 1, Treatment::passive, true, 4, 3), rec(10, 2, Treatment::active, true, 3, 3)});
}

}  // namespace

TEST(JointLikelihood, MatchesBruteForceOnHandmadeInstance) {
  const Dataset d = handmade();
  for (const auto& p : {ModelParams{-0.3, -1.0, 0.8, 0.6, 0.4, 0.3}, ModelParams{0.5, -0.2, 0.4, 1.0, -0.5, -0.6},
                        ModelParams{-0.8, -2.0, 1.5, 0.3, 0.0, 0.05}}) {
    EXPECT_NEAR(joint_log_likelihood(d, p), oracle::joint_loglik_trapezoid(d, p, 241), 1e-4)
        << "alpha=" << p.alpha << " rho=" << p.rho << " psi=" << p.psi;
  }
}

TEST(JointLikelihood, MatchesBruteForceOnSimulatedInstance) {
  SimConfig c;
  c.n_subjects = 40;
  c.n_offers = 2;
  c.seed = 8;
  c.exposure_distribution = ExposureDistribution::negative_binomial(15.0, 2.0);
  const ModelParams p{-0.2, -1.0, 0.7, 0.5, 0.5, 0.4};
  const Dataset d = simulate(p, c);
  EXPECT_NEAR(joint_log_likelihood(d, p), oracle::joint_loglik_trapezoid(d, p, 241), 1e-4);
}

TEST(JointLikelihood, FactorsWhenCorrelationsVanish) {
  // With rho = psi = 0 the joint likelihood splits into a share part and an adoption part.
  const Dataset d = handmade();
  const ModelParams p{-0.3, -1.0, 0.8, 0.6, 0.0, 0.0};
  const ModelParams q{-0.3, -1.7, 0.8, 0.6, 0.0, 0.0};
  // Changing gamma moves the adoption part only; the difference is independent of alpha.
  const ModelParams p2{0.7, -1.0, 0.8, 0.6, 0.0, 0.0};
  const ModelParams q2{0.7, -1.7, 0.8, 0.6, 0.0, 0.0};
  EXPECT_NEAR(joint_log_likelihood(d, p) - joint_log_likelihood(d, q),
              joint_log_likelihood(d, p2) - joint_log_likelihood(d, q2), 1e-8);
}

TEST(JointLikelihood, RejectsBoundaryCorrelations) {
  EXPECT_THROW(joint_log_likelihood(handmade(), ModelParams{0, 0, 1, 1, 1.0, 0}), DomainError);
  EXPECT_THROW(joint_log_likelihood(handmade(), ModelParams{0, 0, 1, 1, 0, -1.0}), DomainError);
}

TEST(JointMode, MatchesGridSearchOnTinyInstance) {
  SimConfig c;
  c.n_subjects = 40;
  c.n_offers = 2;
  c.seed = 3;
  c.exposure_distribution = ExposureDistribution::negative_binomial(20.0, 2.0);
  const ModelParams truth{-0.2, -1.0, 0.7, 0.5, 0.3, 0.3};
  const Dataset d = simulate(truth, c);
  ASSERT_EQ(d.n_offers(), 2u);

  // Free (alpha, gamma); sigma, rho, psi held at truth.
  std::array<bool, ModelParams::kCount> fixed{false, false, true, true, true, true};
  const auto mode = joint_posterior_mode(d, truth, fixed);
  ASSERT_TRUE(mode.converged);

  const oracle::JointGrid grid(d, truth.sigma_mu, truth.sigma_lambda, truth.psi, -8.0, 7.5, -8.0, 6.0, 281);
  double best = -INFINITY, best_a = 0, best_g = 0;
  double step = 0.1, ca = 0.0, cg = -1.0, half = 3.0;
  for (int level = 0; level < 3; ++level) {
    for (double a = ca - half; a <= ca + half + 1e-9; a += step) {
      for (double g = cg - half; g <= cg + half + 1e-9; g += step) {
        const double v = grid.log_likelihood(a, g, truth.rho);
        if (v > best) best = v, best_a = a, best_g = g;
      }
    }
    ca = best_a, cg = best_g, half = step, step /= 10.0;
  }
  const double resolution = 0.001;
  EXPECT_NEAR(mode.params.alpha, best_a, 2 * resolution);
  EXPECT_NEAR(mode.params.gamma, best_g, 2 * resolution);
  EXPECT_NEAR(mode.log_posterior, best, 1e-3);
}
