#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "bayesic/types.hpp"

namespace bayesic {

struct MetricsReport {
  double aupr = 0.0;  // reported as step-wise average precision
  double auroc = 0.0;
  double average_precision = 0.0;
  double max_f1 = 0.0;
  double precision_at_max_f1 = 0.0;
  double max_f1_threshold = 0.0;
  std::vector<std::pair<double, double>> roc_points;  // (fpr, tpr)
  std::vector<std::pair<double, double>> pr_points;   // (recall, precision)
  std::string level;                                  // "agent" or "staypoint"
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
};

/// Mann-Whitney AUROC: P(score_pos > score_neg) + 0.5 P(tie), computed via
/// tie-aware ranks. Throws ValidationError unless both classes are present.
double auroc(const std::vector<double>& scores, const std::vector<int>& labels);

/// Step-wise average precision: mean over positives, in score-descending
/// order (ties keep input order), of precision at that rank. Throws without
/// a positive.
double average_precision(const std::vector<double>& scores,
                         const std::vector<int>& labels);

struct MaxF1Result {
  double f1 = 0.0;
  double threshold = 0.0;  // lowest threshold attaining the max
  double precision = 0.0;
};

/// Sweeps a threshold over every distinct score (predict positive when
/// score >= threshold). Throws without a positive.
MaxF1Result max_f1(const std::vector<double>& scores,
                   const std::vector<int>& labels);

/// Full report with ROC / PR curve points.
MetricsReport evaluate(const std::vector<double>& scores,
                       const std::vector<int>& labels,
                       const std::string& level);

/// Per (agent, poi_type) weekly visit statistics across calendar weeks.
struct VisitRateProfile {
  struct Cell {
    double train_mean = 0.0;
    double train_std = 0.0;
    double test_mean = 0.0;
  };
  std::map<AgentId, std::map<std::string, Cell>> cells;
};

/// Counts visits per calendar week (weeks boundaries at week_anchor +
/// i * 604800) over each split's covered week range.
VisitRateProfile fit_visit_rates(const MobilityDataset& train,
                                 const MobilityDataset& test,
                                 std::int64_t week_anchor);

/// max over poi_types of |test_mean - train_mean| / (train_std + 1e-6).
/// Throws ValidationError if the agent is absent from the profile.
double visit_rate_score(const VisitRateProfile& profile, AgentId agent_id);

/// Min-max normalizes the raw visit scores across agents to [0, 1] (a
/// degenerate range maps everything to 0) and multiplies with the model
/// scores. Agent sets must match exactly.
std::map<AgentId, double> fuse_scores(
    const std::map<AgentId, double>& model_agent_scores,
    const std::map<AgentId, double>& raw_visit_scores);

/// All report fields as a JSON document (curve points included).
std::string metrics_to_json(const MetricsReport& report);

/// Curve CSV with the given two-column header, e.g. fpr,tpr.
void save_curve_csv(const std::string& path, const std::string& x_name,
                    const std::string& y_name,
                    const std::vector<std::pair<double, double>>& points);

}  // namespace bayesic
