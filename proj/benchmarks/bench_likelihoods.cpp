#include <benchmark/benchmark.h>

#include <map>

#include "selshare/bootstrap.hpp"
#include "selshare/joint_likelihood.hpp"
#include "selshare/reduced_form.hpp"
#include "selshare/simulator.hpp"

using namespace selshare;

namespace {

const ModelParams kParams{-0.813, -2.739, 0.267, 0.172, 0.174, 0.025};

const Dataset& data(std::size_t subjects) {
  static std::map<std::size_t, Dataset> cache;
  auto it = cache.find(subjects);
  if (it == cache.end()) {
    SimConfig c;
    c.n_subjects = subjects;
    c.n_offers = std::max<std::size_t>(2, subjects / 25);
    c.exposure_distribution = ExposureDistribution::negative_binomial(60.0, 1.1);
    c.seed = 5;
    it = cache.emplace(subjects, simulate(kParams, c)).first;
  }
  return it->second;
}

}  // namespace

static void BM_ShareLogLikelihood(benchmark::State& state) {
  const Dataset& d = data(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(share_probit_log_likelihood(d, -0.8, 0.27));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ShareLogLikelihood)->Arg(10'000)->Arg(100'000);

static void BM_AdoptLogLikelihood(benchmark::State& state) {
  const Dataset& d = data(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(adopt_binomial_log_likelihood(d, -2.7, 0.02, 0.17));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_AdoptLogLikelihood)->Arg(10'000)->Arg(100'000);

static void BM_JointLogLikelihood(benchmark::State& state) {
  const Dataset& d = data(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(joint_log_likelihood(d, kParams));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_JointLogLikelihood)->Arg(1'000)->Arg(4'000)->Unit(benchmark::kMillisecond);

static void BM_Simulate(benchmark::State& state) {
  SimConfig c;
  c.n_subjects = state.range(0);
  c.n_offers = state.range(0) / 25;
  for (auto _ : state) benchmark::DoNotOptimize(simulate_totals(kParams, c));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Simulate)->Arg(100'000)->Unit(benchmark::kMillisecond);

static void BM_RelativeRiskWeighted(benchmark::State& state) {
  const Dataset& d = data(100'000);
  const std::vector<double> w(d.size(), 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(relative_risk(d, w));
}
BENCHMARK(BM_RelativeRiskWeighted);
