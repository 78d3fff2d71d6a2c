#include <benchmark/benchmark.h>

#include "selshare/binomial_probit.hpp"
#include "selshare/normal.hpp"
#include "selshare/rng.hpp"

using namespace selshare;

static void BM_NormalCdf(benchmark::State& state) {
  double x = -6.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(std_normal_cdf(x));
    x = x > 6.0 ? -6.0 : x + 0.001;
  }
}
BENCHMARK(BM_NormalCdf);

static void BM_InverseMills(benchmark::State& state) {
  double x = -10.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(inverse_mills(x));
    x = x > 20.0 ? -10.0 : x + 0.001;
  }
}
BENCHMARK(BM_InverseMills);

static void BM_BivariateCdf(benchmark::State& state) {
  double r = -0.95;
  for (auto _ : state) {
    benchmark::DoNotOptimize(bivariate_normal_cdf(-0.7, 0.4, r));
    r = r > 0.95 ? -0.95 : r + 0.01;
  }
}
BENCHMARK(BM_BivariateCdf);

static void BM_RngNormal(benchmark::State& state) {
  RngStream rng(1, 2);
  for (auto _ : state) benchmark::DoNotOptimize(rng.normal());
}
BENCHMARK(BM_RngNormal);

static void BM_BinomialProbitMarginal(benchmark::State& state) {
  const auto n = static_cast<std::uint32_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(log_binomial_probit_marginal(n, n / 20, -1.9));
}
BENCHMARK(BM_BinomialProbitMarginal)->Arg(10)->Arg(60)->Arg(400);

BENCHMARK_MAIN();
