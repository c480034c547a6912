#include <benchmark/benchmark.h>

#include <string>

#include "clrmix/clr.h"
#include "clrmix/dataset.h"
#include "clrmix/inference.h"
#include "clrmix/simulate.h"
#include "clrmix/subjective.h"

namespace {

const clrmix::Dataset& oscars() {
  static const clrmix::Dataset d =
      clrmix::read_dataset_file(std::string(CLRMIX_DATA_DIR) + "/oscars_best_picture.csv");
  return d;
}

clrmix::Dataset synthetic(std::size_t strata) {
  clrmix::SimulationConfig config;
  config.strata = strata;
  return clrmix::simulate_dataset(config);
}

void BM_LogLikelihood(benchmark::State& state) {
  const clrmix::Dataset d = synthetic(static_cast<std::size_t>(state.range(0)));
  Eigen::VectorXd beta(3);
  beta << 1.0, 0.5, 1.5;
  for (auto _ : state) benchmark::DoNotOptimize(clrmix::total_log_likelihood(d, beta));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LogLikelihood)->Arg(69)->Arg(500)->Arg(5000);

void BM_Gradient(benchmark::State& state) {
  const clrmix::Dataset d = synthetic(static_cast<std::size_t>(state.range(0)));
  Eigen::VectorXd beta(3);
  beta << 1.0, 0.5, 1.5;
  for (auto _ : state) benchmark::DoNotOptimize(clrmix::log_likelihood_gradient(d, beta));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Gradient)->Arg(69)->Arg(500)->Arg(5000);

void BM_FitMapOscars(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(clrmix::fit_map(oscars()).beta_hat);
}
BENCHMARK(BM_FitMapOscars)->Unit(benchmark::kMicrosecond);

void BM_ShortChain(benchmark::State& state) {
  clrmix::SamplerConfig config;
  config.iterations = 5'000;
  config.burn_in = 500;
  for (auto _ : state) {
    benchmark::DoNotOptimize(clrmix::sample_posterior(oscars(), 10.0, config, 2019).draws);
  }
}
BENCHMARK(BM_ShortChain)->Unit(benchmark::kMillisecond);

void BM_Mixture(benchmark::State& state) {
  const std::vector<double> historical = {0.005, 0.005, 0.194, 0.030, 0.030, 0.350, 0.193, 0.193};
  const clrmix::SubjectiveSpec spec(clrmix::favorite_priors(8, 4, 0.8), 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(clrmix::mixture_probabilities(historical, spec));
}
BENCHMARK(BM_Mixture);

void BM_Sweep(benchmark::State& state) {
  const std::vector<double> historical = {0.005, 0.005, 0.194, 0.030, 0.030, 0.350, 0.193, 0.193};
  const auto priors = clrmix::uniform_priors(8);
  const auto grid = clrmix::linear_grid(101);
  for (auto _ : state) benchmark::DoNotOptimize(clrmix::omega_sweep(historical, priors, grid));
}
BENCHMARK(BM_Sweep);

}  // namespace
BENCHMARK_MAIN();
