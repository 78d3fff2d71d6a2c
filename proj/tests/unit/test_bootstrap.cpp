#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "selshare/bootstrap.hpp"
#include "selshare/errors.hpp"
#include "selshare/simulator.hpp"

using namespace selshare;

namespace {

ShareRecord rec(std::uint64_t s, std::uint64_t o, Treatment t, bool shared, std::uint32_t n, std::uint32_t a) {
  return {SubjectId{s}, OfferId{o}, t, shared, n, a};
}

Dataset desk_data(std::uint64_t seed) {
  SimConfig c;
  c.n_subjects = 5'000;
  c.n_offers = 200;
  c.seed = seed;
  return simulate(ModelParams{-0.813, -2.739, 0.267, 0.172, 0.174, 0.025}, c);
}

}  // namespace

TEST(RelativeRisk, HandComputed) {
  const Dataset d({rec(1, 0, Treatment::active, true, 10, 2), rec(2, 0, Treatment::active, false, 0, 0),
                   rec(3, 1, Treatment::active, true, 30, 2), rec(4, 0, Treatment::passive, true, 20, 1),
                   rec(5, 1, Treatment::passive, true, 20, 3)});
  // active 4/40 = 0.1; passive 4/40 = 0.1.
  EXPECT_DOUBLE_EQ(relative_risk(d), 1.0);
  const std::vector<double> w{2.0, 1.0, 0.0, 1.0, 0.0};
  // active 4/20 = 0.2; passive 1/20 = 0.05.
  EXPECT_DOUBLE_EQ(relative_risk(d, w), 4.0);
}

TEST(RelativeRisk, EdgeCases) {
  const Dataset no_passive_adoption({rec(1, 0, Treatment::active, true, 10, 2), rec(2, 0, Treatment::passive, true, 5, 0)});
  EXPECT_EQ(relative_risk(no_passive_adoption), INFINITY);
  const Dataset no_passive({rec(1, 0, Treatment::active, true, 10, 2)});
  EXPECT_THROW(relative_risk(no_passive), DomainError);
  const Dataset no_active({rec(1, 0, Treatment::active, false, 0, 0), rec(2, 0, Treatment::passive, true, 5, 1)});
  EXPECT_THROW(relative_risk(no_active), DomainError);
  EXPECT_THROW(relative_risk(no_active, std::vector<double>{1.0}), DomainError);
}

TEST(Percentile, TypeSevenDefinition) {
  const std::vector<double> v{10, 1, 9, 2, 8, 3, 7, 4, 6, 5};
  EXPECT_DOUBLE_EQ(percentile(v, 0.25), 3.25);
  EXPECT_DOUBLE_EQ(percentile(v, 0.5), 5.5);
  EXPECT_DOUBLE_EQ(percentile(v, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(percentile(v, 1.0), 10.0);
  EXPECT_DOUBLE_EQ(percentile(v, 0.975), 9.775);
  EXPECT_THROW(percentile({}, 0.5), DomainError);
  EXPECT_THROW(percentile(v, 1.5), DomainError);
}

TEST(Bootstrap, UnitWeightsReproducePointEstimate) {
  const Dataset d = desk_data(1);
  BootstrapConfig cfg;
  cfg.replicates = 50;
  const auto est = multiway_bootstrap(d, [](const Dataset& data, std::span<const double> w) { return relative_risk(data, w); }, cfg);
  EXPECT_EQ(est.point, relative_risk(d));
  EXPECT_LE(est.lower, est.upper);
  EXPECT_EQ(est.replicate_values.size(), 50u);
}

TEST(Bootstrap, WeightsArePoissonProductsBySubjectAndOffer) {
  const Dataset d = desk_data(2);
  BootstrapConfig cfg;
  cfg.replicates = 200;
  cfg.seed = 3;
  // Mean weight is 1 per replicate in expectation; variance of a product of two Poisson(1) is 3.
  std::vector<double> means, vars;
  auto stat = [&](const Dataset&, std::span<const double> w) {
    const double m = std::accumulate(w.begin(), w.end(), 0.0) / w.size();
    return m;
  };
  const auto est = multiway_bootstrap(d, stat, cfg);
  const double mean = std::accumulate(est.replicate_values.begin(), est.replicate_values.end(), 0.0) / 200.0;
  EXPECT_NEAR(mean, 1.0, 0.05);
  // Records sharing an offer share its weight, so replicate means vary far more than under iid weights.
  double ss = 0;
  for (double v : est.replicate_values) ss += (v - mean) * (v - mean);
  EXPECT_GT(std::sqrt(ss / 199.0), 0.03);
  for (double v : est.replicate_values) EXPECT_NEAR(v * d.size(), std::round(v * d.size()), 1e-6);
}

TEST(Bootstrap, DeterministicAcrossThreads) {
  const Dataset d = desk_data(3);
  BootstrapConfig cfg;
  cfg.replicates = 40;
  cfg.seed = 11;
  auto stat = [](const Dataset& data, std::span<const double> w) { return relative_risk(data, w); };
  const auto a = multiway_bootstrap(d, stat, cfg);
  cfg.threads = 3;
  const auto b = multiway_bootstrap(d, stat, cfg);
  EXPECT_EQ(a.replicate_values, b.replicate_values);
  cfg.seed = 12;
  EXPECT_NE(multiway_bootstrap(d, stat, cfg).replicate_values, a.replicate_values);
}

TEST(Bootstrap, TooManyFailedReplicatesIsAnError) {
  const Dataset d = desk_data(4);
  BootstrapConfig cfg;
  cfg.replicates = 40;
  int calls = 0;
  auto flaky = [&](const Dataset&, std::span<const double>) {
    // First call is the point estimate; then one failure in three.
    if (calls++ % 3 == 2) throw DomainError("fail");
    return 1.0;
  };
  EXPECT_THROW(multiway_bootstrap(d, flaky, cfg), DomainError);
  calls = 0;
  auto rare = [&](const Dataset&, std::span<const double>) { return calls++ == 5 ? NAN : 1.0; };
  const auto est = multiway_bootstrap(d, rare, cfg);
  EXPECT_EQ(est.dropped, 1);
  EXPECT_EQ(est.replicate_values.size(), 39u);
}

TEST(Bootstrap, ConfigValidation) {
  BootstrapConfig cfg;
  cfg.replicates = 1;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.replicates = 10;
  cfg.confidence_level = 1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(RelativeRisk, ReferenceRates) {
  // Active 50 / 10000 = 0.0050, passive 45 / 10000 = 0.0045.
  const Dataset d({rec(1, 0, Treatment::active, true, 10'000, 50), rec(2, 0, Treatment::passive, true, 10'000, 45)});
  EXPECT_NEAR(relative_risk(d), 1.111, 5e-4);
}

TEST(Bootstrap, ConstantStatisticGivesZeroWidth) {
  const auto est = multiway_bootstrap(desk_data(5), [](const Dataset&, std::span<const double>) { return 1.25; });
  EXPECT_EQ(est.lower, 1.25);
  EXPECT_EQ(est.upper, 1.25);
  EXPECT_EQ(est.point, 1.25);
}

TEST(Bootstrap, WidthShrinksWithSampleSize) {
  auto stat = [](const Dataset& data, std::span<const double> w) { return relative_risk(data, w); };
  double previous = INFINITY;
  for (std::uint64_t n : {10'000, 40'000, 160'000}) {
    SimConfig c;
    c.n_subjects = n;
    c.n_offers = n / 25;
    c.seed = 9;
    BootstrapConfig cfg;
    cfg.replicates = 200;
    const auto est = multiway_bootstrap(simulate(ModelParams{-0.813, -2.739, 0.267, 0.172, 0.174, 0.025}, c), stat, cfg);
    EXPECT_LT(est.upper - est.lower, previous) << "n=" << n;
    previous = est.upper - est.lower;
  }
}
