#include "bayesic/config.hpp"

#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "bayesic/errors.hpp"

namespace bayesic {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::string& section,
                const std::set<std::string>& known) {
  if (!obj.is_object()) {
    throw ConfigError("config: '" + section + "' must be an object");
  }
  for (const auto& [key, value] : obj.items()) {
    if (!known.count(key)) {
      throw ConfigError("config: unknown key '" +
                        (section.empty() ? key : section + "." + key) + "'");
    }
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) {
    try {
      out = obj.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(std::string("config: bad value for '") + key + "'");
    }
  }
}

json training_to_json_obj(const TrainingConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["week_anchor"] = c.week_anchor;
  j["model"] = {
      {"model_width", c.embedding.model_width},
      {"latent_width", c.embedding.latent_width},
      {"encoder_layers", c.embedding.encoder_layers},
      {"decoder_layers", c.embedding.decoder_layers},
      {"heads", c.embedding.heads},
      {"ffn_width", c.embedding.ffn_width},
      {"window", c.embedding.window},
      {"poi_hidden", c.poi_hidden},
      {"duration_width", c.duration.width},
      {"duration_layers", c.duration.layers},
      {"duration_heads", c.duration.heads},
      {"duration_ffn_width", c.duration.ffn_width},
      {"mixture_components", c.duration.mixture_components},
      {"sigma_floor", c.duration.sigma_floor},
  };
  j["training"] = {
      {"epochs", c.epochs},
      {"batch_size", c.batch_size},
      {"learning_rate", c.learning_rate},
      {"adam_beta1", c.adam_beta1},
      {"adam_beta2", c.adam_beta2},
      {"adam_eps", c.adam_eps},
      {"w_reconstruction", c.w_reconstruction},
      {"w_cascade", c.w_cascade},
      {"staged", c.staged},
  };
  j["ablation"] = {
      {"use_arrival", c.ablation.use_arrival},
      {"use_poi", c.ablation.use_poi},
      {"use_duration", c.ablation.use_duration},
      {"use_embedding", c.ablation.use_embedding},
  };
  j["arrival"] = {{"bandwidth_floor_hours", c.kde_bandwidth_floor}};
  j["scoring"] = {
      {"arrival_bin_hours", c.arrival_bin_hours},
      {"duration_bin", c.duration_bin},
      {"clip_floor", c.clip_floor},
  };
  return j;
}

TrainingConfig training_from_json_obj(const json& j) {
  TrainingConfig c;
  check_keys(j, "", {"seed", "week_anchor", "model", "training", "ablation",
                     "arrival", "scoring", "generate"});
  if (!j.contains("seed")) {
    throw ConfigError("config: 'seed' is required (runs must be reproducible)");
  }
  read(j, "seed", c.seed);
  read(j, "week_anchor", c.week_anchor);

  if (j.contains("model")) {
    const json& m = j.at("model");
    check_keys(m, "model",
               {"model_width", "latent_width", "encoder_layers",
                "decoder_layers", "heads", "ffn_width", "window", "poi_hidden",
                "duration_width", "duration_layers", "duration_heads",
                "duration_ffn_width", "mixture_components", "sigma_floor"});
    read(m, "model_width", c.embedding.model_width);
    read(m, "latent_width", c.embedding.latent_width);
    read(m, "encoder_layers", c.embedding.encoder_layers);
    read(m, "decoder_layers", c.embedding.decoder_layers);
    read(m, "heads", c.embedding.heads);
    read(m, "ffn_width", c.embedding.ffn_width);
    read(m, "window", c.embedding.window);
    read(m, "poi_hidden", c.poi_hidden);
    read(m, "duration_width", c.duration.width);
    read(m, "duration_layers", c.duration.layers);
    read(m, "duration_heads", c.duration.heads);
    read(m, "duration_ffn_width", c.duration.ffn_width);
    read(m, "mixture_components", c.duration.mixture_components);
    read(m, "sigma_floor", c.duration.sigma_floor);
  }
  if (j.contains("training")) {
    const json& t = j.at("training");
    check_keys(t, "training",
               {"epochs", "batch_size", "learning_rate", "adam_beta1",
                "adam_beta2", "adam_eps", "w_reconstruction", "w_cascade",
                "staged"});
    read(t, "epochs", c.epochs);
    read(t, "batch_size", c.batch_size);
    read(t, "learning_rate", c.learning_rate);
    read(t, "adam_beta1", c.adam_beta1);
    read(t, "adam_beta2", c.adam_beta2);
    read(t, "adam_eps", c.adam_eps);
    read(t, "w_reconstruction", c.w_reconstruction);
    read(t, "w_cascade", c.w_cascade);
    read(t, "staged", c.staged);
  }
  if (j.contains("ablation")) {
    const json& a = j.at("ablation");
    check_keys(a, "ablation",
               {"use_arrival", "use_poi", "use_duration", "use_embedding"});
    read(a, "use_arrival", c.ablation.use_arrival);
    read(a, "use_poi", c.ablation.use_poi);
    read(a, "use_duration", c.ablation.use_duration);
    read(a, "use_embedding", c.ablation.use_embedding);
  }
  if (j.contains("arrival")) {
    const json& a = j.at("arrival");
    check_keys(a, "arrival", {"bandwidth_floor_hours"});
    read(a, "bandwidth_floor_hours", c.kde_bandwidth_floor);
  }
  if (j.contains("scoring")) {
    const json& s = j.at("scoring");
    check_keys(s, "scoring", {"arrival_bin_hours", "duration_bin", "clip_floor"});
    read(s, "arrival_bin_hours", c.arrival_bin_hours);
    read(s, "duration_bin", c.duration_bin);
    read(s, "clip_floor", c.clip_floor);
  }
  return c;
}

GenerateConfig generate_from_json_obj(const json& j) {
  GenerateConfig g;
  if (!j.contains("generate")) return g;
  const json& s = j.at("generate");
  check_keys(s, "generate",
             {"n_agents", "weeks_train", "weeks_test", "anomaly_kind",
              "anomaly_fraction", "hunger_meals_per_week",
              "social_replace_probability"});
  read(s, "n_agents", g.n_agents);
  read(s, "weeks_train", g.weeks_train);
  read(s, "weeks_test", g.weeks_test);
  read(s, "anomaly_kind", g.anomaly_kind);
  read(s, "anomaly_fraction", g.anomaly_fraction);
  read(s, "hunger_meals_per_week", g.hunger_meals_per_week);
  read(s, "social_replace_probability", g.social_replace_probability);
  return g;
}

json apply_overrides(json j, const std::vector<std::string>& overrides) {
  for (const std::string& ov : overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("override '" + ov + "' must be key=value");
    }
    const std::string path = ov.substr(0, eq);
    const std::string raw = ov.substr(eq + 1);
    json value;
    try {
      value = json::parse(raw);
    } catch (const json::exception&) {
      value = raw;  // unquoted strings
    }
    json* node = &j;
    std::size_t start = 0;
    while (true) {
      const auto dot = path.find('.', start);
      const std::string part = path.substr(
          start, dot == std::string::npos ? std::string::npos : dot - start);
      if (part.empty()) throw ConfigError("override '" + ov + "': empty key");
      if (dot == std::string::npos) {
        (*node)[part] = value;
        break;
      }
      node = &(*node)[part];
      start = dot + 1;
    }
  }
  return j;
}

}  // namespace

AppConfig default_config() { return AppConfig{}; }

AppConfig parse_config(const std::string& json_text,
                       const std::vector<std::string>& overrides) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  j = apply_overrides(std::move(j), overrides);
  AppConfig config;
  config.training = training_from_json_obj(j);
  config.generate = generate_from_json_obj(j);
  return config;
}

AppConfig load_config_file(const std::string& path,
                           const std::vector<std::string>& overrides) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_config(buf.str(), overrides);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::string config_to_json(const AppConfig& config) {
  json j = training_to_json_obj(config.training);
  j["generate"] = {
      {"n_agents", config.generate.n_agents},
      {"weeks_train", config.generate.weeks_train},
      {"weeks_test", config.generate.weeks_test},
      {"anomaly_kind", config.generate.anomaly_kind},
      {"anomaly_fraction", config.generate.anomaly_fraction},
      {"hunger_meals_per_week", config.generate.hunger_meals_per_week},
      {"social_replace_probability", config.generate.social_replace_probability},
  };
  return j.dump(2);
}

std::string training_config_to_json(const TrainingConfig& config) {
  return training_to_json_obj(config).dump(2);
}

TrainingConfig training_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("training config: invalid JSON: ") + e.what());
  }
  return training_from_json_obj(j);
}

}  // namespace bayesic
