#pragma once

#include <map>
#include <vector>

#include "bayesic/training.hpp"
#include "bayesic/types.hpp"

namespace bayesic {

/// Per-staypoint scoring output: the three clipped conditional
/// probabilities, their product, and the anomaly score s = 1 - joint.
struct AnomalyRecord {
  AgentId agent_id = 0;
  int staypoint_index = 0;
  std::int64_t arrival_epoch = 0;
  double p_arrival = 1.0;
  double p_poi = 1.0;
  double p_duration = 1.0;
  double joint = 1.0;
  double score = 0.0;
};

/// Scores every staypoint of one agent's test sequence in order, threading
/// the POI model's recurrent state through the observed sequence. POI
/// tokens outside the training vocabulary are treated as `unknown`.
std::vector<AnomalyRecord> score_sequence(const TrainedPipeline& pipeline,
                                          const AgentSequence& sequence);

/// Scores one staypoint given the observed history prefix (the agent's
/// earlier test staypoints, in order).
AnomalyRecord score_staypoint(const TrainedPipeline& pipeline, AgentId agent_id,
                              const Staypoint& staypoint,
                              const std::vector<Staypoint>& history = {});

/// Agent-level score: the maximum staypoint score. Throws on empty input.
double agent_score(const std::vector<AnomalyRecord>& records);

/// Scores a whole dataset; records are ordered by (agent_id, staypoint).
std::vector<AnomalyRecord> score_dataset(const TrainedPipeline& pipeline,
                                         const MobilityDataset& test);

/// Max score per agent over a record list. Throws on empty input.
std::map<AgentId, double> agent_scores(const std::vector<AnomalyRecord>& records);

/// Per-staypoint cascade negative log-likelihood (POI term + duration
/// term, the same quantities the training loss sums). Used to compare
/// likelihoods between normal and anomalous staypoints.
std::vector<double> sequence_nll(const TrainedPipeline& pipeline,
                                 const AgentSequence& sequence);

/// Staypoint scores CSV:
/// `agent_id,staypoint_idx,arrival_epoch,p_arrival,p_poi,p_duration,joint,score`.
void save_scores_csv(const std::string& path,
                     const std::vector<AnomalyRecord>& records);
std::vector<AnomalyRecord> load_scores_csv(const std::string& path);

/// Agent scores CSV: `agent_id,score`.
void save_agent_scores_csv(const std::string& path,
                           const std::map<AgentId, double>& scores);
std::map<AgentId, double> load_agent_scores_csv(const std::string& path);

}  // namespace bayesic
