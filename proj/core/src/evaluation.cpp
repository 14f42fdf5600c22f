#include "bayesic/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "bayesic/csv.hpp"
#include "bayesic/encoding.hpp"
#include "bayesic/errors.hpp"

namespace bayesic {

namespace {

void check_aligned(const std::vector<double>& scores,
                   const std::vector<int>& labels) {
  if (scores.size() != labels.size()) {
    throw ValidationError("metrics: scores and labels differ in length");
  }
  if (scores.empty()) throw ValidationError("metrics: empty input");
  for (int l : labels) {
    if (l != 0 && l != 1) {
      throw ValidationError("metrics: labels must be 0 or 1");
    }
  }
}

std::size_t count_positives(const std::vector<int>& labels) {
  return static_cast<std::size_t>(
      std::count(labels.begin(), labels.end(), 1));
}

/// Indices sorted by score descending; equal scores keep input order.
std::vector<std::size_t> descending_order(const std::vector<double>& scores) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });
  return idx;
}

}  // namespace

double auroc(const std::vector<double>& scores,
             const std::vector<int>& labels) {
  check_aligned(scores, labels);
  const std::size_t n_pos = count_positives(labels);
  const std::size_t n_neg = labels.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw ValidationError("auroc: needs at least one of each class");
  }

  // Tie-aware rank sum over the positives.
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] < scores[b];
  });
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // 1-based
    for (std::size_t t = i; t < j; ++t) {
      if (labels[idx[t]] == 1) rank_sum_pos += avg_rank;
    }
    i = j;
  }
  const double u = rank_sum_pos - 0.5 * static_cast<double>(n_pos) *
                                      static_cast<double>(n_pos + 1);
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double average_precision(const std::vector<double>& scores,
                         const std::vector<int>& labels) {
  check_aligned(scores, labels);
  const std::size_t n_pos = count_positives(labels);
  if (n_pos == 0) throw ValidationError("average_precision: no positives");

  const auto order = descending_order(scores);
  double ap = 0.0;
  std::size_t tp = 0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (labels[order[rank]] == 1) {
      ++tp;
      ap += static_cast<double>(tp) / static_cast<double>(rank + 1);
    }
  }
  return ap / static_cast<double>(n_pos);
}

MaxF1Result max_f1(const std::vector<double>& scores,
                   const std::vector<int>& labels) {
  check_aligned(scores, labels);
  const std::size_t n_pos = count_positives(labels);
  if (n_pos == 0) throw ValidationError("max_f1: no positives");

  std::vector<double> thresholds = scores;
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()),
                   thresholds.end());

  MaxF1Result best;
  bool first = true;
  for (double thr : thresholds) {
    std::size_t tp = 0, fp = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (scores[i] >= thr) {
        if (labels[i] == 1) {
          ++tp;
        } else {
          ++fp;
        }
      }
    }
    const std::size_t predicted = tp + fp;
    const double precision =
        predicted == 0 ? 0.0
                       : static_cast<double>(tp) / static_cast<double>(predicted);
    const double recall = static_cast<double>(tp) / static_cast<double>(n_pos);
    const double f1 = (precision + recall) == 0.0
                          ? 0.0
                          : 2.0 * precision * recall / (precision + recall);
    // Strict > keeps the lowest threshold attaining the maximum (thresholds
    // ascend).
    if (first || f1 > best.f1) {
      best.f1 = f1;
      best.threshold = thr;
      best.precision = precision;
      first = false;
    }
  }
  return best;
}

MetricsReport evaluate(const std::vector<double>& scores,
                       const std::vector<int>& labels,
                       const std::string& level) {
  check_aligned(scores, labels);
  MetricsReport report;
  report.level = level;
  report.n_pos = count_positives(labels);
  report.n_neg = labels.size() - report.n_pos;

  report.auroc = auroc(scores, labels);
  report.average_precision = average_precision(scores, labels);
  report.aupr = report.average_precision;
  const MaxF1Result f1 = max_f1(scores, labels);
  report.max_f1 = f1.f1;
  report.precision_at_max_f1 = f1.precision;
  report.max_f1_threshold = f1.threshold;

  // Stepwise curves over distinct thresholds, descending.
  const auto order = descending_order(scores);
  report.roc_points.emplace_back(0.0, 0.0);
  report.pr_points.emplace_back(0.0, 1.0);
  std::size_t tp = 0, fp = 0;
  for (std::size_t r = 0; r < order.size(); ++r) {
    if (labels[order[r]] == 1) {
      ++tp;
    } else {
      ++fp;
    }
    const bool boundary =
        r + 1 == order.size() || scores[order[r + 1]] != scores[order[r]];
    if (!boundary) continue;
    const double tpr = static_cast<double>(tp) / static_cast<double>(report.n_pos);
    const double fpr =
        report.n_neg == 0
            ? 0.0
            : static_cast<double>(fp) / static_cast<double>(report.n_neg);
    const double precision =
        static_cast<double>(tp) / static_cast<double>(tp + fp);
    report.roc_points.emplace_back(fpr, tpr);
    report.pr_points.emplace_back(tpr, precision);
  }
  if (report.roc_points.back() != std::make_pair(1.0, 1.0)) {
    report.roc_points.emplace_back(1.0, 1.0);
  }
  return report;
}

VisitRateProfile fit_visit_rates(const MobilityDataset& train,
                                 const MobilityDataset& test,
                                 std::int64_t week_anchor) {
  const auto week_of = [week_anchor](std::int64_t epoch) {
    std::int64_t d = epoch - week_anchor;
    // floor division
    std::int64_t w = d / kSecondsPerWeek;
    if (d < 0 && d % kSecondsPerWeek != 0) --w;
    return w;
  };

  const auto [train_lo, train_hi] = train.time_range();
  const auto [test_lo, test_hi] = test.time_range();
  const std::int64_t train_w0 = week_of(train_lo);
  const std::int64_t train_w1 = week_of(train_hi);
  const std::int64_t test_w0 = week_of(test_lo);
  const std::int64_t test_w1 = week_of(test_hi);
  const double n_train_weeks = static_cast<double>(train_w1 - train_w0 + 1);
  const double n_test_weeks = static_cast<double>(test_w1 - test_w0 + 1);

  // Weekly counts per (agent, type); weeks with no visits count zero.
  struct Counts {
    std::map<std::int64_t, double> train_weeks;
    double test_total = 0.0;
  };
  std::map<AgentId, std::map<std::string, Counts>> counts;
  for (const auto& [id, seq] : train.agents) {
    for (const auto& sp : seq.staypoints) {
      counts[id][sp.poi_type].train_weeks[week_of(sp.arrival_epoch)] += 1.0;
    }
  }
  for (const auto& [id, seq] : test.agents) {
    for (const auto& sp : seq.staypoints) {
      counts[id][sp.poi_type].test_total += 1.0;
    }
  }

  VisitRateProfile profile;
  for (const auto& [id, types] : counts) {
    for (const auto& [type, c] : types) {
      VisitRateProfile::Cell cell;
      double total = 0.0;
      for (const auto& [w, n] : c.train_weeks) total += n;
      cell.train_mean = total / n_train_weeks;
      double var = 0.0;
      for (std::int64_t w = train_w0; w <= train_w1; ++w) {
        const auto it = c.train_weeks.find(w);
        const double n = it == c.train_weeks.end() ? 0.0 : it->second;
        var += (n - cell.train_mean) * (n - cell.train_mean);
      }
      cell.train_std = std::sqrt(var / n_train_weeks);
      cell.test_mean = c.test_total / n_test_weeks;
      profile.cells[id][type] = cell;
    }
  }
  return profile;
}

double visit_rate_score(const VisitRateProfile& profile, AgentId agent_id) {
  const auto it = profile.cells.find(agent_id);
  if (it == profile.cells.end()) {
    throw ValidationError("visit_rate_score: agent " +
                          std::to_string(agent_id) + " not in profile");
  }
  double best = 0.0;
  for (const auto& [type, cell] : it->second) {
    const double z =
        std::abs(cell.test_mean - cell.train_mean) / (cell.train_std + 1e-6);
    best = std::max(best, z);
  }
  return best;
}

std::map<AgentId, double> fuse_scores(
    const std::map<AgentId, double>& model_agent_scores,
    const std::map<AgentId, double>& raw_visit_scores) {
  if (model_agent_scores.size() != raw_visit_scores.size()) {
    throw ValidationError("fuse_scores: agent sets differ in size");
  }
  double lo = 0.0, hi = 0.0;
  bool started = false;
  for (const auto& [id, v] : raw_visit_scores) {
    if (!model_agent_scores.count(id)) {
      throw ValidationError("fuse_scores: agent " + std::to_string(id) +
                            " missing from model scores");
    }
    if (!started) {
      lo = hi = v;
      started = true;
    } else {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  const double range = hi - lo;
  std::map<AgentId, double> fused;
  for (const auto& [id, v] : raw_visit_scores) {
    const double norm = range > 0.0 ? (v - lo) / range : 0.0;
    fused[id] = norm * model_agent_scores.at(id);
  }
  return fused;
}

std::string metrics_to_json(const MetricsReport& report) {
  nlohmann::json j;
  j["level"] = report.level;
  j["aupr"] = report.aupr;
  j["auroc"] = report.auroc;
  j["average_precision"] = report.average_precision;
  j["max_f1"] = report.max_f1;
  j["precision_at_max_f1"] = report.precision_at_max_f1;
  j["max_f1_threshold"] = report.max_f1_threshold;
  j["n_pos"] = report.n_pos;
  j["n_neg"] = report.n_neg;
  auto points = [](const std::vector<std::pair<double, double>>& pts) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& [x, y] : pts) arr.push_back({x, y});
    return arr;
  };
  j["roc_points"] = points(report.roc_points);
  j["pr_points"] = points(report.pr_points);
  return j.dump(2);
}

void save_curve_csv(const std::string& path, const std::string& x_name,
                    const std::string& y_name,
                    const std::vector<std::pair<double, double>>& points) {
  std::vector<std::vector<std::string>> rows;
  rows.reserve(points.size());
  for (const auto& [x, y] : points) {
    rows.push_back({csv::format_double(x), csv::format_double(y)});
  }
  csv::write_file(path, {x_name, y_name}, rows);
}

}  // namespace bayesic
