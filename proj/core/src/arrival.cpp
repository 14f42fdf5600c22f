#include "bayesic/arrival.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "bayesic/encoding.hpp"
#include "bayesic/errors.hpp"

namespace bayesic {

double silverman_bandwidth(const std::vector<double>& centers, double floor) {
  if (centers.size() < 2) return floor;
  double mean = 0.0;
  for (double c : centers) mean += c;
  mean /= static_cast<double>(centers.size());
  double var = 0.0;
  for (double c : centers) var += (c - mean) * (c - mean);
  var /= static_cast<double>(centers.size());
  const double sd = std::sqrt(var);
  const double bw =
      1.06 * sd * std::pow(static_cast<double>(centers.size()), -0.2);
  return std::max(bw, floor);
}

ArrivalTimeModel fit_arrival_kde(const MobilityDataset& train,
                                 std::int64_t week_anchor,
                                 double bandwidth_floor) {
  if (train.agents.empty()) {
    throw ValidationError("fit_arrival_kde: empty training set");
  }
  ArrivalTimeModel model;
  model.bandwidth_floor = bandwidth_floor;
  for (const auto& [id, seq] : train.agents) {
    if (seq.staypoints.empty()) continue;
    AgentKde kde;
    kde.centers.reserve(seq.staypoints.size());
    for (const auto& sp : seq.staypoints) {
      kde.centers.push_back(time_of_week(sp.arrival_epoch, week_anchor));
    }
    kde.bandwidth = silverman_bandwidth(kde.centers, bandwidth_floor);
    model.population.centers.insert(model.population.centers.end(),
                                    kde.centers.begin(), kde.centers.end());
    model.per_agent.emplace(id, std::move(kde));
  }
  model.population.bandwidth =
      silverman_bandwidth(model.population.centers, bandwidth_floor);
  return model;
}

double arrival_density(const AgentKde& kde, double t) {
  if (kde.centers.empty()) return 0.0;
  constexpr double kInvSqrt2Pi = 0.3989422804014327;
  const double inv_bw = 1.0 / kde.bandwidth;
  double sum = 0.0;
  for (double c : kde.centers) {
    for (double image : {t - c, t - c + kHoursPerWeek, t - c - kHoursPerWeek}) {
      const double u = image * inv_bw;
      sum += std::exp(-0.5 * u * u);
    }
  }
  return sum * kInvSqrt2Pi * inv_bw / static_cast<double>(kde.centers.size());
}

double arrival_probability(const ArrivalTimeModel& model, AgentId agent_id,
                           double t) {
  if (t < 0.0 || t >= kHoursPerWeek) {
    throw ValidationError("arrival_probability: t must be in [0, 168), got " +
                          std::to_string(t));
  }
  const auto it = model.per_agent.find(agent_id);
  const AgentKde& kde =
      (it != model.per_agent.end() && !it->second.centers.empty())
          ? it->second
          : model.population;
  const double p = arrival_density(kde, t) * model.bin_width;
  return std::clamp(p, model.clip_floor, 1.0);
}

}  // namespace bayesic
