#pragma once

#include <string>
#include <vector>

#include "bayesic/training.hpp"

namespace bayesic {

struct GenerateConfig {
  int n_agents = 200;
  int weeks_train = 4;
  int weeks_test = 2;
  std::string anomaly_kind = "combined";
  double anomaly_fraction = 0.05;
  int hunger_meals_per_week = 3;
  double social_replace_probability = 0.8;
};

/// Full run configuration: training/model/scoring settings plus the
/// synthetic-generator section.
struct AppConfig {
  TrainingConfig training;
  GenerateConfig generate;
};

AppConfig default_config();

/// Parses a config JSON document. Missing keys fall back to defaults;
/// unknown keys raise ConfigError naming the key. `overrides` entries have
/// the form "section.key=value" (values parsed as JSON scalars).
AppConfig parse_config(const std::string& json_text,
                       const std::vector<std::string>& overrides = {});

AppConfig load_config_file(const std::string& path,
                           const std::vector<std::string>& overrides = {});

std::string config_to_json(const AppConfig& config);

/// The training-relevant subset (everything except `generate`), canonical
/// form; hashed into checkpoints.
std::string training_config_to_json(const TrainingConfig& config);
TrainingConfig training_config_from_json(const std::string& text);

}  // namespace bayesic
