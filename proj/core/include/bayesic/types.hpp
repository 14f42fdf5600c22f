#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace bayesic {

using AgentId = std::int64_t;

/// Reserved POI token for unmapped or out-of-vocabulary places. Always the
/// last entry of a dataset vocabulary.
inline const std::string kUnknownPoi = "unknown";

struct LatLon {
  double lat = 0.0;
  double lon = 0.0;
};

/// One dwell event: an agent staying at a categorized place for a while.
struct Staypoint {
  AgentId agent_id = 0;
  std::int64_t arrival_epoch = 0;  // seconds since Unix epoch
  double duration_s = 0.0;         // > 0
  std::string poi_type;
  std::optional<LatLon> location;
  std::optional<bool> anomalous;  // ground-truth label when present
};

/// All staypoints of one agent, sorted by arrival time.
struct AgentSequence {
  AgentId agent_id = 0;
  std::vector<Staypoint> staypoints;
};

/// A set of agent sequences plus the POI vocabulary they index into.
struct MobilityDataset {
  std::map<AgentId, AgentSequence> agents;
  std::vector<std::string> poi_vocabulary;  // `unknown` is always last
  std::string split_tag;                    // "train", "test" or empty

  std::size_t agent_count() const { return agents.size(); }
  std::size_t staypoint_count() const;

  /// Index of `token` in the vocabulary, or -1.
  int poi_index(const std::string& token) const;

  /// [min, max] arrival epoch over all staypoints. Throws ValidationError
  /// when the dataset is empty.
  std::pair<std::int64_t, std::int64_t> time_range() const;
};

/// One row of a POI index file.
struct PoiEntry {
  std::int64_t poi_id = 0;
  std::string poi_type;
  double lat = 0.0;
  double lon = 0.0;
};

/// Geographic index of known POIs, used to derive poi_type from raw
/// coordinates.
struct PoiIndex {
  std::vector<PoiEntry> entries;
};

}  // namespace bayesic
