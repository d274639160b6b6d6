#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include <boost/random/normal_distribution.hpp>

#include "carcheck/car.hpp"
#include "carcheck/data.hpp"
#include "carcheck/mcmc.hpp"
#include "carcheck/poisson.hpp"
#include "carcheck/pvalues.hpp"
#include "carcheck/rng.hpp"

namespace {

using namespace carcheck;

const SpatialDataset& scotland() { return bundled_dataset(); }
const CarStructure& scotland_car() {
  static const CarStructure car = build_car(scotland());
  return car;
}

void BM_StdNormal(benchmark::State& state) {
  Rng rng(1);
  std::normal_distribution<double> normal;
  for (auto _ : state) benchmark::DoNotOptimize(normal(rng));
}
BENCHMARK(BM_StdNormal);

void BM_ZigguratNormal(benchmark::State& state) {
  Rng rng(1);
  boost::random::normal_distribution<double> normal;
  for (auto _ : state) benchmark::DoNotOptimize(normal(rng));
}
BENCHMARK(BM_ZigguratNormal);

void BM_MidPExact(benchmark::State& state) {
  const MidPValue p(39);
  double log_mu = std::log(10.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(p.at_log_mean(log_mu));
    log_mu += 1e-9;
  }
}
BENCHMARK(BM_MidPExact);

void BM_MidPCurve(benchmark::State& state) {
  const MidPValueCurve p(39);
  double log_mu = std::log(10.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(p.at_log_mean(log_mu));
    log_mu += 1e-9;
  }
}
BENCHMARK(BM_MidPCurve);

void BM_IntegratedQuantities(benchmark::State& state) {
  const auto& data = scotland();
  const auto& car = scotland_car();
  std::vector<double> s(data.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = std::log((data.counts()[i] + 0.5) / data.expected()[i]);
  const ModelParams theta{-0.3, 0.05, 0.5, 0.1};
  Rng rng(7);
  const auto k = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(integrated_quantities(theta, s, 1, car, data, k, rng));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_IntegratedQuantities)->Arg(100);

void BM_McmcSweeps(benchmark::State& state) {
  McmcConfig config;
  config.n_chains = 1;
  config.iterations = static_cast<std::size_t>(state.range(0));
  config.burn_in = config.iterations / 2;
  for (auto _ : state) benchmark::DoNotOptimize(run_mcmc(scotland(), scotland_car(), config));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_McmcSweeps)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_IisColumn(benchmark::State& state) {
  McmcConfig config;
  config.n_chains = 1;
  config.iterations = 2000;
  config.burn_in = 1000;
  const auto draws = run_mcmc(scotland(), scotland_car(), config);
  PValueOptions options;
  for (auto _ : state) benchmark::DoNotOptimize(integrated_column(draws, scotland_car(), scotland(), 1, options));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(draws.size() * options.iis_draws));
}
BENCHMARK(BM_IisColumn)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
