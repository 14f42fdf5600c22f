#include "bayesic/encoding.hpp"

#include <algorithm>
#include <json.hpp>
#include <limits>

#include "bayesic/errors.hpp"

namespace bayesic {

double time_of_week(std::int64_t arrival_epoch, std::int64_t week_anchor) {
  std::int64_t r = (arrival_epoch - week_anchor) % kSecondsPerWeek;
  if (r < 0) r += kSecondsPerWeek;
  return static_cast<double>(r) / 3600.0;
}

namespace {
double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }
}  // namespace

double NormalizationStats::normalize_time(double tow_hours) const {
  return clamp01((tow_hours - time_min) / (time_max - time_min));
}

double NormalizationStats::normalize_duration(double duration_s) const {
  return clamp01((duration_s - duration_min) / (duration_max - duration_min));
}

double NormalizationStats::denormalize_time(double v) const {
  return time_min + v * (time_max - time_min);
}

double NormalizationStats::denormalize_duration(double v) const {
  return duration_min + v * (duration_max - duration_min);
}

NormalizationStats fit_normalization(const MobilityDataset& train,
                                     std::int64_t week_anchor) {
  if (train.agents.empty()) {
    throw ValidationError("fit_normalization: empty training set");
  }
  NormalizationStats stats;
  stats.week_anchor = week_anchor;
  stats.poi_vocabulary = train.poi_vocabulary;
  stats.time_min = std::numeric_limits<double>::infinity();
  stats.time_max = -std::numeric_limits<double>::infinity();
  stats.duration_min = std::numeric_limits<double>::infinity();
  stats.duration_max = -std::numeric_limits<double>::infinity();

  std::size_t n = 0;
  for (const auto& [id, seq] : train.agents) {
    for (const auto& sp : seq.staypoints) {
      const double tow = time_of_week(sp.arrival_epoch, week_anchor);
      stats.time_min = std::min(stats.time_min, tow);
      stats.time_max = std::max(stats.time_max, tow);
      stats.duration_min = std::min(stats.duration_min, sp.duration_s);
      stats.duration_max = std::max(stats.duration_max, sp.duration_s);
      ++n;
    }
  }
  if (n == 0) throw ValidationError("fit_normalization: no staypoints");

  constexpr double kEps = 1e-6;
  if (!(stats.time_max > stats.time_min)) stats.time_max = stats.time_min + kEps;
  if (!(stats.duration_max > stats.duration_min)) {
    stats.duration_max = stats.duration_min + kEps;
  }
  return stats;
}

Eigen::VectorXd encode_staypoint(const Staypoint& sp,
                                 const NormalizationStats& stats) {
  const int k = stats.vocab_size();
  int idx = -1;
  for (int i = 0; i < k; ++i) {
    if (stats.poi_vocabulary[i] == sp.poi_type) {
      idx = i;
      break;
    }
  }
  if (idx < 0) {
    throw ValidationError("encode_staypoint: poi_type '" + sp.poi_type +
                          "' not in vocabulary");
  }
  Eigen::VectorXd v = Eigen::VectorXd::Zero(k + 2);
  v[idx] = 1.0;
  const double tow = time_of_week(sp.arrival_epoch, stats.week_anchor);
  v[k] = stats.normalize_time(tow);
  v[k + 1] = stats.normalize_duration(sp.duration_s);
  return v;
}

EncodedSequence encode_sequence(const AgentSequence& seq,
                                const NormalizationStats& stats,
                                const Eigen::VectorXd& prefix) {
  if (seq.staypoints.empty()) {
    throw ValidationError("encode_sequence: empty sequence for agent " +
                          std::to_string(seq.agent_id));
  }
  const int width = stats.encoded_width();
  if (prefix.size() != width) {
    throw ShapeError("encode_sequence: prefix width " +
                     std::to_string(prefix.size()) + " != " +
                     std::to_string(width));
  }
  EncodedSequence out;
  out.tokens.resize(static_cast<int>(seq.staypoints.size()) + 1, width);
  out.tokens.row(0) = prefix.transpose();
  for (std::size_t i = 0; i < seq.staypoints.size(); ++i) {
    out.tokens.row(static_cast<int>(i) + 1) =
        encode_staypoint(seq.staypoints[i], stats).transpose();
  }
  return out;
}

std::string normalization_to_json(const NormalizationStats& stats) {
  nlohmann::json j;
  j["time_min"] = stats.time_min;
  j["time_max"] = stats.time_max;
  j["duration_min"] = stats.duration_min;
  j["duration_max"] = stats.duration_max;
  j["vocabulary"] = stats.poi_vocabulary;
  j["week_anchor"] = stats.week_anchor;
  return j.dump(2);
}

NormalizationStats normalization_from_json(const std::string& text) {
  NormalizationStats stats;
  try {
    const auto j = nlohmann::json::parse(text);
    stats.time_min = j.at("time_min").get<double>();
    stats.time_max = j.at("time_max").get<double>();
    stats.duration_min = j.at("duration_min").get<double>();
    stats.duration_max = j.at("duration_max").get<double>();
    stats.poi_vocabulary = j.at("vocabulary").get<std::vector<std::string>>();
    stats.week_anchor = j.at("week_anchor").get<std::int64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("normalization stats json: ") + e.what());
  }
  return stats;
}

}  // namespace bayesic
