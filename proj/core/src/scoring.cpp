#include "bayesic/scoring.hpp"

#include <algorithm>
#include <cmath>

#include "bayesic/csv.hpp"
#include "bayesic/errors.hpp"

namespace bayesic {

namespace {

int vocab_index_or_unknown(const NormalizationStats& stats,
                           const std::string& token) {
  const int k = stats.vocab_size();
  for (int i = 0; i < k; ++i) {
    if (stats.poi_vocabulary[i] == token) return i;
  }
  return k - 1;  // `unknown` is always last
}

double clip(double p, double floor) { return std::clamp(p, floor, 1.0); }

struct StepEval {
  double p_arrival = 1.0;
  double p_poi = 1.0;
  double p_duration = 1.0;
  double poi_nll_term = 0.0;
  double duration_nll_term = 0.0;
};

/// Walks one agent sequence, evaluating all enabled conditionals per step.
template <typename Fn>
void walk_sequence(const TrainedPipeline& pipeline,
                   const AgentSequence& sequence, Fn&& emit) {
  const NormalizationStats& stats = pipeline.stats;
  const AblationSwitches& ab = pipeline.config.ablation;
  const int k = stats.vocab_size();
  const double clip_floor = pipeline.config.clip_floor;

  const Eigen::VectorXd h = pipeline.embedding_for(sequence.agent_id);

  Eigen::VectorXd poi_state;
  if (ab.use_poi) {
    poi_state = Eigen::VectorXd::Zero(pipeline.poi->config().hidden);
  }
  Eigen::VectorXd prev_onehot = Eigen::VectorXd::Zero(k);

  for (std::size_t i = 0; i < sequence.staypoints.size(); ++i) {
    const Staypoint& sp = sequence.staypoints[i];
    const double tow = time_of_week(sp.arrival_epoch, stats.week_anchor);
    const double t_norm = stats.normalize_time(tow);
    const double d_norm = stats.normalize_duration(sp.duration_s);
    const int c = vocab_index_or_unknown(stats, sp.poi_type);

    StepEval ev;
    if (ab.use_arrival) {
      // With the embedding ablated the arrival estimate loses its
      // per-agent conditioning and falls back to the population KDE.
      const AgentId key = ab.use_embedding ? sequence.agent_id : AgentId{-1};
      ev.p_arrival = arrival_probability(pipeline.arrival, key, tow);
    }
    if (ab.use_poi) {
      const Eigen::VectorXd features = poi_step_features(h, t_norm, prev_onehot);
      const Eigen::VectorXd dist =
          pipeline.poi->step(poi_state, features, &poi_state);
      ev.p_poi = clip(dist[c], clip_floor);
      ev.poi_nll_term = poi_nll(dist, c);
    }
    if (ab.use_duration) {
      const GaussianMixture gm = pipeline.duration->mixture(h, t_norm, c);
      ev.p_duration =
          duration_probability(gm, d_norm, pipeline.config.duration_bin);
      ev.duration_nll_term = duration_nll(gm, d_norm);
    }

    emit(i, sp, ev);

    prev_onehot.setZero();
    prev_onehot[c] = 1.0;
  }
}

}  // namespace

std::vector<AnomalyRecord> score_sequence(const TrainedPipeline& pipeline,
                                          const AgentSequence& sequence) {
  std::vector<AnomalyRecord> out;
  out.reserve(sequence.staypoints.size());
  walk_sequence(pipeline, sequence,
                [&](std::size_t i, const Staypoint& sp, const StepEval& ev) {
                  AnomalyRecord rec;
                  rec.agent_id = sequence.agent_id;
                  rec.staypoint_index = static_cast<int>(i);
                  rec.arrival_epoch = sp.arrival_epoch;
                  rec.p_arrival = ev.p_arrival;
                  rec.p_poi = ev.p_poi;
                  rec.p_duration = ev.p_duration;
                  rec.joint = ev.p_arrival * ev.p_poi * ev.p_duration;
                  rec.score = 1.0 - rec.joint;
                  out.push_back(rec);
                });
  return out;
}

AnomalyRecord score_staypoint(const TrainedPipeline& pipeline, AgentId agent_id,
                              const Staypoint& staypoint,
                              const std::vector<Staypoint>& history) {
  AgentSequence seq;
  seq.agent_id = agent_id;
  seq.staypoints = history;
  seq.staypoints.push_back(staypoint);
  const auto records = score_sequence(pipeline, seq);
  AnomalyRecord rec = records.back();
  rec.staypoint_index = static_cast<int>(history.size());
  return rec;
}

double agent_score(const std::vector<AnomalyRecord>& records) {
  if (records.empty()) {
    throw ValidationError("agent_score: no records for agent");
  }
  double best = 0.0;
  for (const auto& r : records) best = std::max(best, r.score);
  return best;
}

std::vector<AnomalyRecord> score_dataset(const TrainedPipeline& pipeline,
                                         const MobilityDataset& test) {
  std::vector<AnomalyRecord> out;
  out.reserve(test.staypoint_count());
  for (const auto& [id, seq] : test.agents) {
    const auto records = score_sequence(pipeline, seq);
    out.insert(out.end(), records.begin(), records.end());
  }
  return out;
}

std::map<AgentId, double> agent_scores(
    const std::vector<AnomalyRecord>& records) {
  if (records.empty()) throw ValidationError("agent_scores: no records");
  std::map<AgentId, double> out;
  for (const auto& r : records) {
    auto [it, inserted] = out.emplace(r.agent_id, r.score);
    if (!inserted) it->second = std::max(it->second, r.score);
  }
  return out;
}

std::vector<double> sequence_nll(const TrainedPipeline& pipeline,
                                 const AgentSequence& sequence) {
  std::vector<double> out;
  out.reserve(sequence.staypoints.size());
  walk_sequence(pipeline, sequence,
                [&](std::size_t, const Staypoint&, const StepEval& ev) {
                  out.push_back(ev.poi_nll_term + ev.duration_nll_term);
                });
  return out;
}


void save_scores_csv(const std::string& path,
                     const std::vector<AnomalyRecord>& records) {
  std::vector<std::vector<std::string>> rows;
  rows.reserve(records.size());
  for (const auto& r : records) {
    rows.push_back({std::to_string(r.agent_id),
                    std::to_string(r.staypoint_index),
                    std::to_string(r.arrival_epoch),
                    csv::format_double(r.p_arrival),
                    csv::format_double(r.p_poi),
                    csv::format_double(r.p_duration),
                    csv::format_double(r.joint), csv::format_double(r.score)});
  }
  csv::write_file(path,
                  {"agent_id", "staypoint_idx", "arrival_epoch", "p_arrival",
                   "p_poi", "p_duration", "joint", "score"},
                  rows);
}

std::vector<AnomalyRecord> load_scores_csv(const std::string& path) {
  const csv::Table table = csv::read_file(path);
  const auto need = [&](const char* name) {
    const auto col = table.column(name);
    if (!col) {
      throw SchemaError(path + ": missing required column '" +
                        std::string(name) + "'");
    }
    return *col;
  };
  const auto c_agent = need("agent_id");
  const auto c_idx = need("staypoint_idx");
  const auto c_epoch = need("arrival_epoch");
  const auto c_pa = need("p_arrival");
  const auto c_pp = need("p_poi");
  const auto c_pd = need("p_duration");
  const auto c_joint = need("joint");
  const auto c_score = need("score");

  std::vector<AnomalyRecord> out;
  out.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    AnomalyRecord r;
    r.agent_id = std::stoll(row[c_agent]);
    r.staypoint_index = std::stoi(row[c_idx]);
    r.arrival_epoch = std::stoll(row[c_epoch]);
    r.p_arrival = std::strtod(row[c_pa].c_str(), nullptr);
    r.p_poi = std::strtod(row[c_pp].c_str(), nullptr);
    r.p_duration = std::strtod(row[c_pd].c_str(), nullptr);
    r.joint = std::strtod(row[c_joint].c_str(), nullptr);
    r.score = std::strtod(row[c_score].c_str(), nullptr);
    out.push_back(r);
  }
  return out;
}

void save_agent_scores_csv(const std::string& path,
                           const std::map<AgentId, double>& scores) {
  std::vector<std::vector<std::string>> rows;
  rows.reserve(scores.size());
  for (const auto& [id, s] : scores) {
    rows.push_back({std::to_string(id), csv::format_double(s)});
  }
  csv::write_file(path, {"agent_id", "score"}, rows);
}

std::map<AgentId, double> load_agent_scores_csv(const std::string& path) {
  const csv::Table table = csv::read_file(path);
  const auto c_agent = table.column("agent_id");
  const auto c_score = table.column("score");
  if (!c_agent || !c_score) {
    throw SchemaError(path + ": need columns agent_id,score");
  }
  std::map<AgentId, double> out;
  for (const auto& row : table.rows) {
    out[std::stoll(row[*c_agent])] = std::strtod(row[*c_score].c_str(), nullptr);
  }
  return out;
}

}  // namespace bayesic
