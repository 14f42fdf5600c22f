#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "bayesic/types.hpp"

namespace bayesic {

constexpr std::int64_t kSecondsPerWeek = 604800;
constexpr double kHoursPerWeek = 168.0;

/// Hours elapsed since the most recent Monday 00:00, in [0, 168).
/// `week_anchor` is the epoch second of any Monday 00:00.
double time_of_week(std::int64_t arrival_epoch, std::int64_t week_anchor);

/// Feature ranges fitted on training data; fixed afterwards.
struct NormalizationStats {
  double time_min = 0.0;      // hours-of-week
  double time_max = 168.0;    // hours-of-week
  double duration_min = 0.0;  // seconds
  double duration_max = 1.0;  // seconds
  std::vector<std::string> poi_vocabulary;  // size K, `unknown` last
  std::int64_t week_anchor = 0;

  int vocab_size() const { return static_cast<int>(poi_vocabulary.size()); }
  /// Encoded staypoint width K + 2.
  int encoded_width() const { return vocab_size() + 2; }

  double normalize_time(double tow_hours) const;
  double normalize_duration(double duration_s) const;
  double denormalize_time(double v) const;
  double denormalize_duration(double v) const;
};

/// Min-max ranges over all training staypoints (time as time-of-week).
/// A degenerate range is widened by 1e-6. Throws on an empty dataset.
NormalizationStats fit_normalization(const MobilityDataset& train,
                                     std::int64_t week_anchor);

/// One-hot POI block (K entries) followed by normalized arrival time and
/// normalized duration. Out-of-range values are clamped into [0, 1].
/// Throws ValidationError for a token missing from the vocabulary.
Eigen::VectorXd encode_staypoint(const Staypoint& sp,
                                 const NormalizationStats& stats);

/// A sequence in encoded space: learnable prefix token then one row per
/// staypoint; all rows share width K + 2.
struct EncodedSequence {
  Eigen::MatrixXd tokens;  // (n + 1) x (K + 2); row 0 is the prefix
  int body_length() const { return static_cast<int>(tokens.rows()) - 1; }
};

/// Prepends `prefix` (the embedding model's learnable token) to the encoded
/// staypoints of `seq`. Throws on an empty sequence.
EncodedSequence encode_sequence(const AgentSequence& seq,
                                const NormalizationStats& stats,
                                const Eigen::VectorXd& prefix);

std::string normalization_to_json(const NormalizationStats& stats);
NormalizationStats normalization_from_json(const std::string& text);

}  // namespace bayesic
