#include "bayesic/synthgen.hpp"

#include <algorithm>
#include <cmath>

#include "bayesic/dataset.hpp"
#include "bayesic/encoding.hpp"
#include "bayesic/errors.hpp"
#include "bayesic/rng.hpp"

namespace bayesic {

namespace {

constexpr double kHour = 3600.0;

ScheduleEntry slot(std::string type, double tow_h, double t_jit_h,
                   double dur_h, double d_jit_h, double p) {
  return ScheduleEntry{std::move(type), tow_h, t_jit_h, dur_h * kHour,
                       d_jit_h * kHour, p};
}

double day(double d, double hour) { return d * 24.0 + hour; }

}  // namespace

std::vector<PersonaTemplate> default_personas() {
  std::vector<PersonaTemplate> personas;

  PersonaTemplate worker{"worker", {}};
  for (int d = 0; d < 5; ++d) {
    worker.schedule.push_back(slot("work", day(d, 9.0), 0.4, 8.0, 0.5, 1.0));
  }
  for (int d = 0; d < 7; ++d) {
    worker.schedule.push_back(slot("home", day(d, 19.5), 0.6, 10.5, 0.7, 1.0));
  }
  worker.schedule.push_back(slot("restaurant", day(1, 12.5), 0.3, 1.0, 0.2, 0.6));
  worker.schedule.push_back(slot("restaurant", day(5, 19.0), 0.5, 1.5, 0.3, 0.7));
  worker.schedule.push_back(slot("recreation", day(6, 15.0), 0.8, 2.0, 0.5, 0.8));
  worker.schedule.push_back(slot("recreation", day(3, 18.0), 0.5, 1.5, 0.4, 0.4));
  personas.push_back(std::move(worker));

  PersonaTemplate student{"student", {}};
  for (int d = 0; d < 5; ++d) {
    student.schedule.push_back(slot("school", day(d, 8.5), 0.3, 6.5, 0.4, 1.0));
  }
  for (int d = 0; d < 7; ++d) {
    student.schedule.push_back(slot("home", day(d, 21.0), 0.5, 9.5, 0.6, 1.0));
  }
  student.schedule.push_back(slot("recreation", day(2, 16.5), 0.5, 2.0, 0.4, 0.7));
  student.schedule.push_back(slot("recreation", day(5, 20.0), 0.6, 2.0, 0.5, 0.5));
  student.schedule.push_back(slot("recreation", day(6, 14.0), 0.8, 3.0, 0.6, 0.8));
  student.schedule.push_back(slot("restaurant", day(4, 12.0), 0.3, 0.75, 0.15, 0.5));
  personas.push_back(std::move(student));

  PersonaTemplate flexible{"flexible", {}};
  for (int d = 0; d < 7; ++d) {
    flexible.schedule.push_back(slot("home", day(d, 22.0), 0.8, 8.5, 0.8, 1.0));
  }
  flexible.schedule.push_back(slot("work", day(0, 10.0), 1.0, 5.0, 1.0, 0.7));
  flexible.schedule.push_back(slot("work", day(2, 11.0), 1.0, 5.0, 1.0, 0.7));
  flexible.schedule.push_back(slot("work", day(4, 9.5), 1.0, 5.0, 1.0, 0.7));
  flexible.schedule.push_back(slot("recreation", day(1, 15.0), 1.0, 2.0, 0.6, 0.6));
  flexible.schedule.push_back(slot("recreation", day(5, 11.0), 1.0, 2.5, 0.6, 0.6));
  flexible.schedule.push_back(slot("recreation", day(6, 16.0), 1.0, 2.0, 0.6, 0.6));
  flexible.schedule.push_back(slot("restaurant", day(0, 19.0), 0.8, 1.2, 0.3, 0.5));
  flexible.schedule.push_back(slot("restaurant", day(3, 13.0), 0.8, 1.0, 0.3, 0.5));
  flexible.schedule.push_back(slot("restaurant", day(5, 20.0), 0.8, 1.5, 0.3, 0.5));
  personas.push_back(std::move(flexible));

  return personas;
}

AnomalyKind anomaly_kind_from_string(const std::string& name) {
  if (name == "hunger") return AnomalyKind::kHunger;
  if (name == "social") return AnomalyKind::kSocial;
  if (name == "work") return AnomalyKind::kWork;
  if (name == "combined") return AnomalyKind::kCombined;
  throw ConfigError("unknown anomaly kind '" + name +
                    "' (expected hunger|social|work|combined)");
}

std::string to_string(AnomalyKind kind) {
  switch (kind) {
    case AnomalyKind::kHunger: return "hunger";
    case AnomalyKind::kSocial: return "social";
    case AnomalyKind::kWork: return "work";
    case AnomalyKind::kCombined: return "combined";
  }
  return "combined";
}

GeneratedData generate(const std::vector<PersonaTemplate>& personas,
                       int n_agents, int weeks_train, int weeks_test,
                       std::int64_t week_anchor, std::uint64_t seed) {
  if (personas.empty()) throw ValidationError("generate: no personas");
  if (n_agents < 1 || weeks_train < 1 || weeks_test < 1) {
    throw ValidationError("generate: need n_agents, weeks >= 1");
  }
  for (const auto& p : personas) {
    for (const auto& e : p.schedule) {
      if (!(e.mean_duration_s > 0.0) || e.visit_probability < 0.0 ||
          e.visit_probability > 1.0) {
        throw ValidationError("generate: bad schedule entry in persona " +
                              p.name);
      }
    }
  }

  GeneratedData out;
  out.train.split_tag = "train";
  out.test.split_tag = "test";

  Rng root(seed);
  const auto persona_offset =
      static_cast<std::size_t>(root.next_u64() % personas.size());
  const int total_weeks = weeks_train + weeks_test;

  for (int a = 0; a < n_agents; ++a) {
    const AgentId id = a + 1;
    const PersonaTemplate& persona =
        personas[(static_cast<std::size_t>(a) + persona_offset) %
                 personas.size()];
    out.personas[id] = persona.name;

    Rng rng = root.fork(static_cast<std::uint64_t>(id));
    // Individual variation on top of the persona: a personal time shift and
    // duration scale, fixed for the agent's whole history.
    const double personal_shift_h = rng.normal(0.0, 1.5);
    const double personal_dur_scale = rng.uniform(0.8, 1.25);

    AgentSequence train_seq{id, {}};
    AgentSequence test_seq{id, {}};
    for (int w = 0; w < total_weeks; ++w) {
      for (const auto& entry : persona.schedule) {
        if (!rng.bernoulli(entry.visit_probability)) continue;
        double tow =
            rng.normal(entry.mean_tow_h + personal_shift_h, entry.time_jitter_h);
        tow = std::fmod(tow, kHoursPerWeek);
        if (tow < 0.0) tow += kHoursPerWeek;
        const double duration = std::max(
            60.0, rng.normal(entry.mean_duration_s * personal_dur_scale,
                             entry.duration_jitter_s));
        Staypoint sp;
        sp.agent_id = id;
        sp.arrival_epoch = week_anchor +
                           static_cast<std::int64_t>(w) * kSecondsPerWeek +
                           static_cast<std::int64_t>(std::llround(tow * kHour));
        sp.duration_s = duration;
        sp.poi_type = entry.poi_type;
        sp.anomalous = false;
        (w < weeks_train ? train_seq : test_seq).staypoints.push_back(sp);
      }
    }
    const auto by_arrival = [](const Staypoint& x, const Staypoint& y) {
      return x.arrival_epoch < y.arrival_epoch;
    };
    std::stable_sort(train_seq.staypoints.begin(), train_seq.staypoints.end(),
                     by_arrival);
    std::stable_sort(test_seq.staypoints.begin(), test_seq.staypoints.end(),
                     by_arrival);
    if (!train_seq.staypoints.empty()) out.train.agents[id] = std::move(train_seq);
    if (!test_seq.staypoints.empty()) out.test.agents[id] = std::move(test_seq);
  }

  out.train.poi_vocabulary = build_vocabulary(out.train);
  // Both splits share one vocabulary.
  MobilityDataset both;
  both.agents = out.train.agents;
  for (const auto& [id, seq] : out.test.agents) {
    auto& dst = both.agents[id];
    dst.agent_id = id;
    dst.staypoints.insert(dst.staypoints.end(), seq.staypoints.begin(),
                          seq.staypoints.end());
  }
  const auto vocab = build_vocabulary(both);
  out.train.poi_vocabulary = vocab;
  out.test.poi_vocabulary = vocab;
  return out;
}

InjectionResult inject_anomalies(const MobilityDataset& test,
                                 const AnomalySpec& spec, std::uint64_t seed) {
  if (spec.agent_fraction < 0.0 || spec.agent_fraction > 1.0) {
    throw ValidationError("inject_anomalies: fraction must be in [0, 1]");
  }
  InjectionResult out;
  out.test = test;
  for (const auto& [id, seq] : test.agents) out.agent_labels[id] = false;

  const auto n_agents = test.agents.size();
  const auto n_selected = static_cast<std::size_t>(
      std::ceil(spec.agent_fraction * static_cast<double>(n_agents)));
  if (n_selected == 0) return out;  // caller warns; dataset unchanged

  std::vector<AgentId> ids;
  ids.reserve(n_agents);
  for (const auto& [id, seq] : test.agents) ids.push_back(id);

  Rng root(seed);
  for (std::size_t i = ids.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(
        root.uniform_int(0, static_cast<std::int64_t>(i) - 1));
    std::swap(ids[i - 1], ids[j]);
  }
  out.selected_agents.assign(ids.begin(),
                             ids.begin() + static_cast<std::ptrdiff_t>(
                                               std::min(n_selected, ids.size())));
  std::sort(out.selected_agents.begin(), out.selected_agents.end());

  const bool do_hunger = spec.kind == AnomalyKind::kHunger ||
                         spec.kind == AnomalyKind::kCombined;
  const bool do_social = spec.kind == AnomalyKind::kSocial ||
                         spec.kind == AnomalyKind::kCombined;
  const bool do_work =
      spec.kind == AnomalyKind::kWork || spec.kind == AnomalyKind::kCombined;

  const auto [test_lo, test_hi] = test.time_range();
  const auto n_weeks = static_cast<int>(std::max<std::int64_t>(
      1, (test_hi - test_lo) / kSecondsPerWeek + 1));

  std::vector<std::string> replacement_pool;
  for (const auto& token : test.poi_vocabulary) {
    if (token != "recreation" && token != kUnknownPoi) {
      replacement_pool.push_back(token);
    }
  }

  for (AgentId id : out.selected_agents) {
    out.agent_labels[id] = true;
    auto& seq = out.test.agents.at(id);
    Rng rng = root.fork(static_cast<std::uint64_t>(id));

    if (do_social && !replacement_pool.empty()) {
      for (auto& sp : seq.staypoints) {
        if (sp.poi_type != "recreation") continue;
        if (!rng.bernoulli(spec.social_replace_probability)) continue;
        sp.poi_type = replacement_pool[static_cast<std::size_t>(rng.uniform_int(
            0, static_cast<std::int64_t>(replacement_pool.size()) - 1))];
        sp.anomalous = true;
        ++out.staypoints_modified;
      }
    }

    if (do_work) {
      const auto before = seq.staypoints.size();
      std::erase_if(seq.staypoints,
                    [](const Staypoint& sp) { return sp.poi_type == "work"; });
      out.staypoints_removed += before - seq.staypoints.size();
    }

    if (do_hunger) {
      for (int w = 0; w < n_weeks; ++w) {
        for (int m = 0; m < spec.hunger_meals_per_week; ++m) {
          Staypoint sp;
          sp.agent_id = id;
          const double tow = rng.uniform(0.0, kHoursPerWeek);
          sp.arrival_epoch =
              test_lo + static_cast<std::int64_t>(w) * kSecondsPerWeek +
              static_cast<std::int64_t>(std::llround(tow * kHour));
          sp.duration_s = rng.uniform(600.0, 10800.0);
          sp.poi_type = "restaurant";
          sp.anomalous = true;
          seq.staypoints.push_back(sp);
          ++out.staypoints_added;
        }
      }
      std::stable_sort(seq.staypoints.begin(), seq.staypoints.end(),
                       [](const Staypoint& x, const Staypoint& y) {
                         return x.arrival_epoch < y.arrival_epoch;
                       });
    }
  }
  return out;
}

}  // namespace bayesic
