#include <benchmark/benchmark.h>

#include "bayesic/arrival.hpp"
#include "bayesic/duration.hpp"
#include "bayesic/rng.hpp"

using namespace bayesic;

namespace {

AgentKde make_kde(int centers) {
  Rng rng(99);
  AgentKde kde;
  kde.bandwidth = 0.6;
  for (int i = 0; i < centers; ++i) kde.centers.push_back(rng.uniform(0.0, 168.0));
  return kde;
}

GaussianMixture make_mixture(int components) {
  Rng rng(7);
  GaussianMixture gm;
  gm.weights = Eigen::VectorXd(components);
  gm.means = Eigen::VectorXd(components);
  gm.stds = Eigen::VectorXd(components);
  double sum = 0.0;
  for (int i = 0; i < components; ++i) {
    gm.weights[i] = rng.uniform(0.1, 1.0);
    sum += gm.weights[i];
    gm.means[i] = rng.uniform(0.0, 1.0);
    gm.stds[i] = rng.uniform(0.02, 0.3);
  }
  gm.weights /= sum;
  return gm;
}

}  // namespace

static void BM_ArrivalDensity(benchmark::State& state) {
  const auto kde = make_kde(static_cast<int>(state.range(0)));
  Rng rng(1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(arrival_density(kde, rng.uniform(0.0, 168.0)));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ArrivalDensity)->RangeMultiplier(4)->Range(16, 1024)->Complexity();

static void BM_ArrivalProbability(benchmark::State& state) {
  ArrivalTimeModel model;
  model.per_agent[1] = make_kde(128);
  Rng rng(2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        arrival_probability(model, 1, rng.uniform(0.0, 167.9)));
  }
}
BENCHMARK(BM_ArrivalProbability);

static void BM_MixtureDensity(benchmark::State& state) {
  const auto gm = make_mixture(static_cast<int>(state.range(0)));
  Rng rng(3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(mixture_density(gm, rng.uniform(0.0, 1.0)));
  }
}
BENCHMARK(BM_MixtureDensity)->Arg(4)->Arg(8)->Arg(16);
