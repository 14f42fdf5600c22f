#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <random>

#include "bayesic/errors.hpp"
#include "bayesic/scoring.hpp"
#include "bayesic/synthgen.hpp"
#include "bayesic/training.hpp"

using namespace bayesic;

namespace {

TrainingConfig tiny_config(std::uint64_t seed) {
  TrainingConfig c;
  c.seed = seed;
  c.epochs = 2;
  c.batch_size = 8;
  c.embedding.model_width = 16;
  c.embedding.latent_width = 8;
  c.embedding.encoder_layers = 1;
  c.embedding.decoder_layers = 1;
  c.embedding.heads = 2;
  c.embedding.ffn_width = 16;
  c.embedding.window = 32;
  c.poi_hidden = 16;
  c.duration.width = 16;
  c.duration.heads = 2;
  c.duration.ffn_width = 16;
  c.duration.mixture_components = 4;
  return c;
}

struct Fixture {
  GeneratedData data;
  TrainResult result;

  Fixture()
      : data(generate(default_personas(), 10, 2, 1, kDefaultWeekAnchor, 41)),
        result(train(data.train, tiny_config(41))) {}
};

}  // namespace

TEST_CASE("score_sequence scores every staypoint in order, deterministically") {
  Fixture f;
  const auto& seq = f.data.test.agents.begin()->second;
  const auto records = score_sequence(f.result.pipeline, seq);
  REQUIRE(records.size() == seq.staypoints.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    CHECK(records[i].staypoint_index == static_cast<int>(i));
    CHECK(records[i].agent_id == seq.agent_id);
    CHECK(records[i].arrival_epoch == seq.staypoints[i].arrival_epoch);
  }

  const auto again = score_sequence(f.result.pipeline, seq);
  for (std::size_t i = 0; i < records.size(); ++i) {
    CHECK(records[i].score == again[i].score);
  }
}

TEST_CASE("record invariants: joint is the exact product, score its complement") {
  Fixture f;
  for (const auto& rec : score_dataset(f.result.pipeline, f.data.test)) {
    CHECK(rec.joint == rec.p_arrival * rec.p_poi * rec.p_duration);
    CHECK(rec.score == 1.0 - rec.joint);
    CHECK(rec.score >= 0.0);
    CHECK(rec.score < 1.0);
    for (double p : {rec.p_arrival, rec.p_poi, rec.p_duration}) {
      CHECK(p >= 1e-9);
      CHECK(p <= 1.0);
    }
  }
}

TEST_CASE("a staypoint far from every kernel hits the arrival clip floor") {
  Fixture f;
  const AgentId id = f.data.test.agents.begin()->first;

  // Pin a tight single-kernel KDE so the opposite end of the week
  // underflows the clip floor.
  f.result.pipeline.arrival.per_agent[id] = AgentKde{{9.0}, 0.25};

  Staypoint sp;
  sp.agent_id = id;
  sp.poi_type = "restaurant";
  sp.duration_s = 1200.0;
  sp.arrival_epoch = f.result.pipeline.stats.week_anchor + 93 * 3600;

  const auto rec = score_staypoint(f.result.pipeline, id, sp);
  CHECK(rec.p_arrival == 1e-9);
  CHECK(rec.score == 1.0 - rec.joint);
  CHECK(rec.score >= 1.0 - 1e-9);
}

TEST_CASE("single staypoint sequence equals score_staypoint") {
  Fixture f;
  const auto& seq = f.data.test.agents.begin()->second;
  AgentSequence one{seq.agent_id, {seq.staypoints.front()}};
  const auto from_seq = score_sequence(f.result.pipeline, one);
  const auto direct =
      score_staypoint(f.result.pipeline, seq.agent_id, seq.staypoints.front());
  REQUIRE(from_seq.size() == 1);
  CHECK(from_seq[0].score == direct.score);
  CHECK(from_seq[0].joint == direct.joint);
}

TEST_CASE("score_staypoint threads the history prefix through the POI state") {
  Fixture f;
  const auto& seq = f.data.test.agents.begin()->second;
  REQUIRE(seq.staypoints.size() >= 3);
  std::vector<Staypoint> history(seq.staypoints.begin(),
                                 seq.staypoints.begin() + 2);
  const auto rec =
      score_staypoint(f.result.pipeline, seq.agent_id, seq.staypoints[2], history);
  const auto full = score_sequence(f.result.pipeline, seq);
  CHECK(rec.score == full[2].score);
  CHECK(rec.staypoint_index == 2);
}

TEST_CASE("agent_score is the max and is permutation invariant") {
  std::vector<AnomalyRecord> records(3);
  records[0].score = 0.2;
  records[1].score = 0.9;
  records[2].score = 0.4;
  CHECK(agent_score(records) == 0.9);

  std::vector<AnomalyRecord> single(1);
  single[0].score = 0.35;
  CHECK(agent_score(single) == 0.35);

  std::vector<AnomalyRecord> zeros(4);
  CHECK(agent_score(zeros) == 0.0);

  auto shuffled = records;
  std::mt19937 gen(3);
  for (int i = 0; i < 5; ++i) {
    std::shuffle(shuffled.begin(), shuffled.end(), gen);
    CHECK(agent_score(shuffled) == agent_score(records));
  }

  CHECK_THROWS_AS(agent_score({}), ValidationError);
}

TEST_CASE("all switches off scores zero everywhere") {
  const auto data = generate(default_personas(), 6, 2, 1, kDefaultWeekAnchor, 51);
  TrainingConfig config = tiny_config(51);
  config.ablation = {false, false, false, false};
  const auto result = train(data.train, config);
  for (const auto& rec : score_dataset(result.pipeline, data.test)) {
    CHECK(rec.p_arrival == 1.0);
    CHECK(rec.p_poi == 1.0);
    CHECK(rec.p_duration == 1.0);
    CHECK(rec.score == 0.0);
  }
}

TEST_CASE("score is monotone in each clipped term") {
  // Pure product algebra: lowering one term (others fixed) cannot lower s.
  Rng rng(8);
  for (int i = 0; i < 300; ++i) {
    const double a = rng.uniform(1e-9, 1.0);
    const double b = rng.uniform(1e-9, 1.0);
    const double c = rng.uniform(1e-9, 1.0);
    const double a2 = a * rng.uniform(0.1, 1.0);
    const double s = 1.0 - a * b * c;
    const double s2 = 1.0 - a2 * b * c;
    CHECK(s2 >= s);
  }
}

TEST_CASE("unseen agents score with the zero embedding and population KDE") {
  Fixture f;
  AgentSequence stranger{987654, {}};
  Staypoint sp;
  sp.agent_id = 987654;
  sp.arrival_epoch = kDefaultWeekAnchor + 9 * 3600;
  sp.duration_s = 3600.0;
  sp.poi_type = "work";
  stranger.staypoints.push_back(sp);

  CHECK(f.result.pipeline.embedding_for(987654).norm() == 0.0);
  const auto records = score_sequence(f.result.pipeline, stranger);
  REQUIRE(records.size() == 1);
  CHECK(records[0].score >= 0.0);
  CHECK(records[0].score < 1.0);

  // Tokens outside the vocabulary fall back to `unknown`.
  stranger.staypoints[0].poi_type = "spaceport";
  const auto exotic = score_sequence(f.result.pipeline, stranger);
  stranger.staypoints[0].poi_type = "unknown";
  const auto unknown = score_sequence(f.result.pipeline, stranger);
  CHECK(exotic[0].score == unknown[0].score);
}

TEST_CASE("agent_scores groups max per agent") {
  std::vector<AnomalyRecord> records(4);
  records[0].agent_id = 1;
  records[0].score = 0.3;
  records[1].agent_id = 1;
  records[1].score = 0.7;
  records[2].agent_id = 2;
  records[2].score = 0.5;
  records[3].agent_id = 2;
  records[3].score = 0.1;
  const auto by_agent = agent_scores(records);
  CHECK(by_agent.at(1) == 0.7);
  CHECK(by_agent.at(2) == 0.5);
  CHECK_THROWS_AS(agent_scores({}), ValidationError);
}

TEST_CASE("scores CSV round-trips bit-exactly") {
  Fixture f;
  const auto records = score_dataset(f.result.pipeline, f.data.test);
  const auto path =
      (std::filesystem::temp_directory_path() / "scores_roundtrip.csv").string();
  save_scores_csv(path, records);
  const auto loaded = load_scores_csv(path);
  REQUIRE(loaded.size() == records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    CHECK(loaded[i].agent_id == records[i].agent_id);
    CHECK(loaded[i].score == records[i].score);
    CHECK(loaded[i].joint == records[i].joint);
    CHECK(loaded[i].p_arrival == records[i].p_arrival);
  }

  const auto agents = agent_scores(records);
  const auto agents_path =
      (std::filesystem::temp_directory_path() / "agents_roundtrip.csv").string();
  save_agent_scores_csv(agents_path, agents);
  const auto loaded_agents = load_agent_scores_csv(agents_path);
  CHECK(loaded_agents == agents);
}
