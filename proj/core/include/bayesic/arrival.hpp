#pragma once

#include <map>
#include <vector>

#include "bayesic/types.hpp"

namespace bayesic {

/// One agent's kernel density estimate over times-of-week.
struct AgentKde {
  std::vector<double> centers;  // training times-of-week, hours in [0, 168)
  double bandwidth = 0.25;      // hours
};

/// Per-agent Gaussian-kernel arrival time model with a pooled population
/// fallback for agents unseen in training.
struct ArrivalTimeModel {
  std::map<AgentId, AgentKde> per_agent;
  AgentKde population;
  double bandwidth_floor = 0.25;  // hours
  double bin_width = 1.0;         // hours, density -> probability conversion
  double clip_floor = 1e-9;

  bool has_agent(AgentId id) const { return per_agent.count(id) != 0; }
};

/// Silverman bandwidth 1.06 * std * n^(-1/5), floored. `std` is the
/// population standard deviation of the centers.
double silverman_bandwidth(const std::vector<double>& centers, double floor);

/// Builds per-agent KDEs over training times-of-week, plus the pooled
/// population fallback. Throws on an empty dataset.
ArrivalTimeModel fit_arrival_kde(const MobilityDataset& train,
                                 std::int64_t week_anchor,
                                 double bandwidth_floor = 0.25);

/// Week-circular kernel density at `t` hours: each kernel is evaluated at
/// t and t +/- 168 and averaged over centers.
double arrival_density(const AgentKde& kde, double t);

/// Clipped probability of the 1-hour bin at `t` under the agent's KDE (or
/// the population fallback). Throws for t outside [0, 168).
double arrival_probability(const ArrivalTimeModel& model, AgentId agent_id,
                           double t);

}  // namespace bayesic
