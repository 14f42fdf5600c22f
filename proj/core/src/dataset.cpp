#include "bayesic/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <set>

#include "bayesic/csv.hpp"
#include "bayesic/errors.hpp"

namespace bayesic {

namespace {

double parse_double(const std::string& cell, const char* what,
                    std::size_t line_no) {
  char* end = nullptr;
  const double v = std::strtod(cell.c_str(), &end);
  if (end == cell.c_str() || *end != '\0') {
    throw ValidationError(std::string("line ") + std::to_string(line_no) +
                          ": cannot parse " + what + " '" + cell + "'");
  }
  return v;
}

std::int64_t parse_int(const std::string& cell, const char* what,
                       std::size_t line_no) {
  char* end = nullptr;
  const long long v = std::strtoll(cell.c_str(), &end, 10);
  if (end == cell.c_str() || *end != '\0') {
    throw ValidationError(std::string("line ") + std::to_string(line_no) +
                          ": cannot parse " + what + " '" + cell + "'");
  }
  return v;
}

}  // namespace

std::size_t MobilityDataset::staypoint_count() const {
  std::size_t n = 0;
  for (const auto& [id, seq] : agents) n += seq.staypoints.size();
  return n;
}

int MobilityDataset::poi_index(const std::string& token) const {
  for (std::size_t i = 0; i < poi_vocabulary.size(); ++i) {
    if (poi_vocabulary[i] == token) return static_cast<int>(i);
  }
  return -1;
}

std::pair<std::int64_t, std::int64_t> MobilityDataset::time_range() const {
  std::int64_t lo = std::numeric_limits<std::int64_t>::max();
  std::int64_t hi = std::numeric_limits<std::int64_t>::min();
  for (const auto& [id, seq] : agents) {
    for (const auto& sp : seq.staypoints) {
      lo = std::min(lo, sp.arrival_epoch);
      hi = std::max(hi, sp.arrival_epoch);
    }
  }
  if (lo > hi) throw ValidationError("time_range of an empty dataset");
  return {lo, hi};
}

std::vector<std::string> build_vocabulary(const MobilityDataset& dataset) {
  std::set<std::string> tokens;
  for (const auto& [id, seq] : dataset.agents) {
    for (const auto& sp : seq.staypoints) {
      if (sp.poi_type != kUnknownPoi) tokens.insert(sp.poi_type);
    }
  }
  std::vector<std::string> vocab(tokens.begin(), tokens.end());
  vocab.push_back(kUnknownPoi);
  return vocab;
}

MobilityDataset load_staypoints(const std::string& path,
                                const StaypointSchema& schema) {
  const csv::Table table = csv::read_file(path);

  const auto need = [&](const std::string& name) {
    auto col = table.column(name);
    if (!col) throw SchemaError(path + ": missing required column '" + name + "'");
    return *col;
  };
  const std::size_t c_agent = need(schema.agent_id);
  const std::size_t c_arrival = need(schema.arrival_epoch);
  const std::size_t c_duration = need(schema.duration);
  const std::size_t c_poi = need(schema.poi_type);
  const auto c_lat = table.column(schema.lat);
  const auto c_lon = table.column(schema.lon);
  const auto c_label = table.column(schema.label);

  if (table.rows.empty()) throw ValidationError(path + ": no staypoint rows");

  MobilityDataset ds;
  std::size_t line_no = 1;  // header is line 1
  for (const auto& row : table.rows) {
    ++line_no;
    Staypoint sp;
    sp.agent_id = parse_int(row[c_agent], "agent_id", line_no);
    sp.arrival_epoch = parse_int(row[c_arrival], "arrival_epoch", line_no);
    sp.duration_s = parse_double(row[c_duration], "duration", line_no);
    if (!(sp.duration_s > 0.0)) {
      throw ValidationError(path + " line " + std::to_string(line_no) +
                            ": duration must be > 0, got " + row[c_duration]);
    }
    sp.poi_type = row[c_poi].empty() ? kUnknownPoi : row[c_poi];
    if (c_lat && c_lon && !row[*c_lat].empty() && !row[*c_lon].empty()) {
      sp.location = LatLon{parse_double(row[*c_lat], "lat", line_no),
                           parse_double(row[*c_lon], "lon", line_no)};
    }
    if (c_label && !row[*c_label].empty()) {
      const std::string& lab = row[*c_label];
      if (lab == "anomalous") {
        sp.anomalous = true;
      } else if (lab == "normal") {
        sp.anomalous = false;
      } else {
        throw ValidationError(path + " line " + std::to_string(line_no) +
                              ": label must be 'normal' or 'anomalous', got '" +
                              lab + "'");
      }
    }
    auto& seq = ds.agents[sp.agent_id];
    seq.agent_id = sp.agent_id;
    seq.staypoints.push_back(std::move(sp));
  }

  for (auto& [id, seq] : ds.agents) {
    std::stable_sort(seq.staypoints.begin(), seq.staypoints.end(),
                     [](const Staypoint& a, const Staypoint& b) {
                       return a.arrival_epoch < b.arrival_epoch;
                     });
  }
  ds.poi_vocabulary = build_vocabulary(ds);
  return ds;
}

void save_staypoints(const std::string& path, const MobilityDataset& dataset) {
  std::vector<std::vector<std::string>> rows;
  rows.reserve(dataset.staypoint_count());
  for (const auto& [id, seq] : dataset.agents) {
    for (const auto& sp : seq.staypoints) {
      std::vector<std::string> row(7);
      row[0] = std::to_string(sp.agent_id);
      row[1] = std::to_string(sp.arrival_epoch);
      row[2] = csv::format_double(sp.duration_s);
      row[3] = sp.poi_type;
      if (sp.location) {
        row[4] = csv::format_double(sp.location->lat);
        row[5] = csv::format_double(sp.location->lon);
      }
      if (sp.anomalous) row[6] = *sp.anomalous ? "anomalous" : "normal";
      rows.push_back(std::move(row));
    }
  }
  csv::write_file(
      path, {"agent_id", "arrival_epoch", "duration_s", "poi_type", "lat", "lon", "label"},
      rows);
}

PoiIndex load_poi_index(const std::string& path) {
  const csv::Table table = csv::read_file(path);
  const auto need = [&](const char* name) {
    auto col = table.column(name);
    if (!col) throw SchemaError(path + ": missing required column '" + std::string(name) + "'");
    return *col;
  };
  const std::size_t c_id = need("poi_id");
  const std::size_t c_type = need("poi_type");
  const std::size_t c_lat = need("lat");
  const std::size_t c_lon = need("lon");

  PoiIndex index;
  std::size_t line_no = 1;
  for (const auto& row : table.rows) {
    ++line_no;
    PoiEntry e;
    e.poi_id = parse_int(row[c_id], "poi_id", line_no);
    e.poi_type = row[c_type];
    e.lat = parse_double(row[c_lat], "lat", line_no);
    e.lon = parse_double(row[c_lon], "lon", line_no);
    if (e.lat < -90.0 || e.lat > 90.0 || e.lon < -180.0 || e.lon > 180.0) {
      throw ValidationError(path + " line " + std::to_string(line_no) +
                            ": coordinates out of range");
    }
    index.entries.push_back(std::move(e));
  }
  return index;
}

double haversine_m(LatLon a, LatLon b) {
  constexpr double kEarthRadiusM = 6371000.0;
  constexpr double kDegToRad = std::numbers::pi / 180.0;
  const double phi1 = a.lat * kDegToRad;
  const double phi2 = b.lat * kDegToRad;
  const double dphi = (b.lat - a.lat) * kDegToRad;
  const double dlambda = (b.lon - a.lon) * kDegToRad;
  const double s = std::sin(dphi / 2.0);
  const double t = std::sin(dlambda / 2.0);
  const double h = s * s + std::cos(phi1) * std::cos(phi2) * t * t;
  return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(h)));
}

std::string map_poi(LatLon point, const PoiIndex& index, double radius_m) {
  if (radius_m <= 0.0) throw ValidationError("map_poi: radius must be > 0");
  const PoiEntry* best = nullptr;
  double best_dist = std::numeric_limits<double>::infinity();
  for (const auto& e : index.entries) {
    const double d = haversine_m(point, LatLon{e.lat, e.lon});
    if (d < best_dist || (d == best_dist && best && e.poi_id < best->poi_id)) {
      best = &e;
      best_dist = d;
    }
  }
  if (!best || best_dist > radius_m) return kUnknownPoi;
  return best->poi_type;
}

std::size_t apply_poi_mapping(MobilityDataset& dataset, const PoiIndex& index,
                              double radius_m) {
  std::size_t remapped = 0;
  for (auto& [id, seq] : dataset.agents) {
    for (auto& sp : seq.staypoints) {
      if (!sp.location) continue;
      sp.poi_type = map_poi(*sp.location, index, radius_m);
      ++remapped;
    }
  }
  dataset.poi_vocabulary = build_vocabulary(dataset);
  return remapped;
}

void save_agent_labels(const std::string& path,
                       const std::map<AgentId, bool>& labels) {
  std::vector<std::vector<std::string>> rows;
  rows.reserve(labels.size());
  for (const auto& [id, anomalous] : labels) {
    rows.push_back({std::to_string(id), anomalous ? "anomalous" : "normal"});
  }
  csv::write_file(path, {"agent_id", "label"}, rows);
}

std::map<AgentId, bool> load_agent_labels(const std::string& path) {
  const csv::Table table = csv::read_file(path);
  const auto c_agent = table.column("agent_id");
  const auto c_label = table.column("label");
  if (!c_agent || !c_label) {
    throw SchemaError(path + ": need columns agent_id,label");
  }
  std::map<AgentId, bool> out;
  std::size_t line_no = 1;
  for (const auto& row : table.rows) {
    ++line_no;
    const std::string& lab = row[*c_label];
    if (lab != "normal" && lab != "anomalous") {
      throw ValidationError(path + " line " + std::to_string(line_no) +
                            ": label must be 'normal' or 'anomalous'");
    }
    out[parse_int(row[*c_agent], "agent_id", line_no)] = (lab == "anomalous");
  }
  return out;
}

TimeSplit split_by_time(const MobilityDataset& dataset,
                        std::int64_t boundary_epoch) {
  const auto [lo, hi] = dataset.time_range();
  if (boundary_epoch <= lo) {
    throw ValidationError("split boundary " + std::to_string(boundary_epoch) +
                          " at or before first arrival " + std::to_string(lo) +
                          "; nothing to train on");
  }

  TimeSplit out;
  out.train.poi_vocabulary = dataset.poi_vocabulary;
  out.test.poi_vocabulary = dataset.poi_vocabulary;
  out.train.split_tag = "train";
  out.test.split_tag = "test";

  for (const auto& [id, seq] : dataset.agents) {
    AgentSequence train_seq{id, {}};
    AgentSequence test_seq{id, {}};
    for (const auto& sp : seq.staypoints) {
      (sp.arrival_epoch < boundary_epoch ? train_seq : test_seq)
          .staypoints.push_back(sp);
    }
    if (!train_seq.staypoints.empty()) out.train.agents[id] = std::move(train_seq);
    if (!test_seq.staypoints.empty()) out.test.agents[id] = std::move(test_seq);
    if (out.test.agents.count(id) && !out.train.agents.count(id)) {
      out.test_only_agents.push_back(id);
    }
  }
  return out;
}

}  // namespace bayesic
