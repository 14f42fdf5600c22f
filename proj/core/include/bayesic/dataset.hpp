#pragma once

#include <string>
#include <vector>

#include "bayesic/types.hpp"

namespace bayesic {

/// Column mapping for staypoint CSV ingestion. Values are header names in
/// the file; lat/lon/label may be absent.
struct StaypointSchema {
  std::string agent_id = "agent_id";
  std::string arrival_epoch = "arrival_epoch";
  std::string duration = "duration_s";
  std::string poi_type = "poi_type";
  std::string lat = "lat";
  std::string lon = "lon";
  std::string label = "label";
};

/// Loads a staypoint CSV into per-agent sequences sorted by arrival time.
/// The vocabulary is the sorted set of distinct poi_type tokens with
/// `unknown` appended last. Empty poi_type cells become `unknown`.
///
/// Throws SchemaError for a missing required column, ValidationError for a
/// non-positive duration (names the offending line) or a bad label token,
/// and ValidationError for a file with no data rows.
MobilityDataset load_staypoints(const std::string& path,
                                const StaypointSchema& schema = {});

/// Writes the canonical staypoint CSV
/// (`agent_id,arrival_epoch,duration_s,poi_type,lat,lon,label`).
void save_staypoints(const std::string& path, const MobilityDataset& dataset);

/// Loads a `poi_id,poi_type,lat,lon` file. Validates coordinate ranges.
PoiIndex load_poi_index(const std::string& path);

/// Great-circle distance in meters (haversine, mean earth radius 6371 km).
double haversine_m(LatLon a, LatLon b);

/// Nearest-POI lookup: returns the poi_type of the closest index entry if
/// its distance is within `radius_m`, else `unknown`. Exact-distance ties
/// go to the lowest poi_id. An empty index yields `unknown`.
std::string map_poi(LatLon point, const PoiIndex& index, double radius_m = 15.0);

/// Re-derives poi_type for every staypoint that has coordinates, using
/// map_poi against `index`; staypoints without coordinates keep their
/// token. Rebuilds the vocabulary. Returns the number of rows remapped.
std::size_t apply_poi_mapping(MobilityDataset& dataset, const PoiIndex& index,
                              double radius_m = 15.0);

struct TimeSplit {
  MobilityDataset train;
  MobilityDataset test;
  /// Agents with staypoints only at or after the boundary. They get a
  /// zero embedding and population-level arrival estimates downstream.
  std::vector<AgentId> test_only_agents;
};

/// Splits on arrival time: [begin, boundary) goes to train, the rest to
/// test. Both halves share the input vocabulary. A boundary at or before
/// the first arrival would leave nothing to train on and is an error; a
/// boundary past the end simply leaves the test half empty.
TimeSplit split_by_time(const MobilityDataset& dataset,
                        std::int64_t boundary_epoch);

/// Rebuilds the vocabulary from the tokens present (sorted, `unknown`
/// last) — used by loaders and the synthetic generator.
std::vector<std::string> build_vocabulary(const MobilityDataset& dataset);

/// Agent-level ground truth sidecar: `agent_id,label` with labels
/// normal/anomalous.
void save_agent_labels(const std::string& path,
                       const std::map<AgentId, bool>& labels);
std::map<AgentId, bool> load_agent_labels(const std::string& path);

}  // namespace bayesic
