#include <benchmark/benchmark.h>

#include <vector>

#include "bayesic/evaluation.hpp"
#include "bayesic/rng.hpp"

using namespace bayesic;

namespace {

struct Instance {
  std::vector<double> scores;
  std::vector<int> labels;
};

Instance make_instance(int n) {
  Rng rng(17);
  Instance inst;
  inst.scores.resize(n);
  inst.labels.resize(n);
  for (int i = 0; i < n; ++i) {
    inst.scores[i] = rng.uniform();
    inst.labels[i] = rng.bernoulli(0.05) ? 1 : 0;
  }
  inst.labels[0] = 1;
  inst.labels[1] = 0;
  return inst;
}

}  // namespace

static void BM_Auroc(benchmark::State& state) {
  const auto inst = make_instance(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(auroc(inst.scores, inst.labels));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Auroc)->RangeMultiplier(8)->Range(256, 131072)->Complexity();

static void BM_AveragePrecision(benchmark::State& state) {
  const auto inst = make_instance(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(average_precision(inst.scores, inst.labels));
  }
}
BENCHMARK(BM_AveragePrecision)->Arg(4096)->Arg(65536);

static void BM_MaxF1(benchmark::State& state) {
  const auto inst = make_instance(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(max_f1(inst.scores, inst.labels));
  }
}
BENCHMARK(BM_MaxF1)->Arg(1024)->Arg(4096);

static void BM_FullReport(benchmark::State& state) {
  const auto inst = make_instance(8192);
  for (auto _ : state) {
    benchmark::DoNotOptimize(evaluate(inst.scores, inst.labels, "staypoint"));
  }
}
BENCHMARK(BM_FullReport);
