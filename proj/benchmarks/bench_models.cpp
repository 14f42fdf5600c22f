#include <benchmark/benchmark.h>

#include "bayesic/scoring.hpp"
#include "bayesic/synthgen.hpp"
#include "bayesic/training.hpp"

using namespace bayesic;

namespace {

TrainingConfig bench_config() {
  TrainingConfig c;
  c.seed = 7;
  c.epochs = 1;
  return c;
}

struct Fixture {
  GeneratedData data;
  TrainResult result;
  Fixture()
      : data(generate(default_personas(), 20, 2, 1, kDefaultWeekAnchor, 7)),
        result(train(data.train, bench_config())) {}
};

Fixture& fixture() {
  static Fixture f;
  return f;
}

}  // namespace

static void BM_EmbedWindow(benchmark::State& state) {
  auto& f = fixture();
  const auto& stats = f.result.pipeline.stats;
  const auto& seq = f.data.train.agents.begin()->second;
  const auto enc =
      encode_sequence(seq, stats, f.result.pipeline.embedding->prefix_token());
  const Eigen::MatrixXd body =
      enc.tokens.bottomRows(std::min<Eigen::Index>(enc.tokens.rows() - 1, 64));
  for (auto _ : state) {
    benchmark::DoNotOptimize(f.result.pipeline.embedding->embed(body));
  }
}
BENCHMARK(BM_EmbedWindow);

static void BM_ScoreSequence(benchmark::State& state) {
  auto& f = fixture();
  const auto& seq = f.data.test.agents.begin()->second;
  for (auto _ : state) {
    benchmark::DoNotOptimize(score_sequence(f.result.pipeline, seq));
  }
  state.SetItemsProcessed(state.iterations() *
                          static_cast<long>(seq.staypoints.size()));
}
BENCHMARK(BM_ScoreSequence);

static void BM_TrainingEpoch(benchmark::State& state) {
  auto& f = fixture();
  for (auto _ : state) {
    TrainingConfig config = bench_config();
    config.epochs = 1;
    benchmark::DoNotOptimize(train(f.data.train, config));
  }
}
BENCHMARK(BM_TrainingEpoch)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
