#pragma once

#include <map>
#include <string>
#include <vector>

#include "bayesic/types.hpp"

namespace bayesic {

/// One weekly schedule slot of a persona.
struct ScheduleEntry {
  std::string poi_type;
  double mean_tow_h = 0.0;        // time-of-week, hours
  double time_jitter_h = 0.5;     // gaussian std
  double mean_duration_s = 3600;  // > 0
  double duration_jitter_s = 600;
  double visit_probability = 1.0;
};

struct PersonaTemplate {
  std::string name;  // worker, student, flexible
  std::vector<ScheduleEntry> schedule;
};

/// The three built-in personas with distinct weekly rhythms.
std::vector<PersonaTemplate> default_personas();

enum class AnomalyKind { kHunger, kSocial, kWork, kCombined };

AnomalyKind anomaly_kind_from_string(const std::string& name);
std::string to_string(AnomalyKind kind);

struct AnomalySpec {
  AnomalyKind kind = AnomalyKind::kCombined;
  double agent_fraction = 0.05;  // in [0, 1]
  int hunger_meals_per_week = 3;
  double social_replace_probability = 0.8;
};

struct GeneratedData {
  MobilityDataset train;
  MobilityDataset test;
  std::map<AgentId, std::string> personas;  // agent -> persona name
};

/// Samples per-agent staypoint streams from persona schedules with
/// Gaussian jitter; times wrap into the week. Train covers weeks
/// [0, weeks_train), test the following weeks_test weeks, both measured
/// from week_anchor. Deterministic per seed; each agent draws from its own
/// derived stream.
GeneratedData generate(const std::vector<PersonaTemplate>& personas,
                       int n_agents, int weeks_train, int weeks_test,
                       std::int64_t week_anchor, std::uint64_t seed);

struct InjectionResult {
  MobilityDataset test;
  std::map<AgentId, bool> agent_labels;  // every test agent, true if touched
  std::vector<AgentId> selected_agents;
  std::size_t staypoints_added = 0;
  std::size_t staypoints_modified = 0;
  std::size_t staypoints_removed = 0;
};

/// Applies the anomaly spec to ceil(fraction * n_agents) seeded-chosen
/// agents. Hunger adds extra restaurant staypoints at random times; social
/// re-types recreation staypoints; work removes work staypoints (the agent
/// is still marked anomalous). Added/modified rows are labeled anomalous,
/// everything else normal.
InjectionResult inject_anomalies(const MobilityDataset& test,
                                 const AnomalySpec& spec, std::uint64_t seed);

}  // namespace bayesic
