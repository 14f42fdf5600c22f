// bayesic: staypoint mobility anomaly detection pipeline.
//
// Subcommands: generate, train, score, evaluate, fuse, ablate. Every run
// reads a JSON config (--config or $BAYESIC_CONFIG), applies --set
// overrides, writes its artifacts under --out-dir and records a manifest
// with input/output hashes.

#include <CLI11.hpp>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <map>
#include <string>
#include <vector>

#include "bayesic/checkpoint.hpp"
#include "bayesic/config.hpp"
#include "bayesic/csv.hpp"
#include "bayesic/dataset.hpp"
#include "bayesic/errors.hpp"
#include "bayesic/evaluation.hpp"
#include "bayesic/hash.hpp"
#include "bayesic/scoring.hpp"
#include "bayesic/synthgen.hpp"
#include "bayesic/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunContext {
  std::string command;
  std::string out_dir;
  bayesic::AppConfig config;
  json manifest;
  std::chrono::steady_clock::time_point started;

  explicit RunContext(std::string cmd, std::string out,
                      bayesic::AppConfig cfg)
      : command(std::move(cmd)), out_dir(std::move(out)),
        config(std::move(cfg)), started(std::chrono::steady_clock::now()) {
    fs::create_directories(out_dir);
    manifest["command"] = command;
    manifest["seed"] = config.training.seed;
    manifest["config"] = json::parse(bayesic::config_to_json(config));
    manifest["inputs"] = json::object();
    manifest["outputs"] = json::object();
  }

  std::string path(const std::string& name) const {
    return (fs::path(out_dir) / name).string();
  }

  void record_input(const std::string& name, const std::string& file) {
    manifest["inputs"][name] = {{"path", file}, {"hash", bayesic::hash_file(file)}};
  }
  void record_output(const std::string& name, const std::string& file) {
    manifest["outputs"][name] = {{"path", file},
                                 {"hash", bayesic::hash_file(file)}};
  }

  void finish() {
    const auto elapsed = std::chrono::duration<double>(
                             std::chrono::steady_clock::now() - started)
                             .count();
    manifest["duration_seconds"] = elapsed;
    std::ofstream out(path("manifest.json"), std::ios::binary);
    if (!out) throw bayesic::IoError("cannot write manifest");
    out << manifest.dump(2) << '\n';
  }
};

bayesic::AppConfig resolve_config(const std::string& config_path,
                                  const std::vector<std::string>& overrides) {
  std::string path = config_path;
  if (path.empty()) {
    if (const char* env = std::getenv("BAYESIC_CONFIG")) path = env;
  }
  if (path.empty()) {
    throw bayesic::ConfigError(
        "no config given: pass --config or set BAYESIC_CONFIG");
  }
  return bayesic::load_config_file(path, overrides);
}

bayesic::MobilityDataset load_data(RunContext& ctx, const std::string& name,
                                   const std::string& file,
                                   const std::string& poi_index_file,
                                   double poi_radius) {
  auto ds = bayesic::load_staypoints(file);
  ctx.record_input(name, file);
  if (!poi_index_file.empty()) {
    const auto index = bayesic::load_poi_index(poi_index_file);
    ctx.record_input("poi_index", poi_index_file);
    const auto remapped = bayesic::apply_poi_mapping(ds, index, poi_radius);
    std::cout << "mapped " << remapped << " staypoints against "
              << index.entries.size() << " POIs\n";
  }
  return ds;
}

void write_training_log(const std::string& path,
                        const bayesic::TrainResult& result) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw bayesic::IoError("cannot write " + path);
  for (const auto& b : result.batches) {
    json line{{"epoch", b.epoch},
              {"batch", b.batch},
              {"l_ae", b.l_ae},
              {"l_f", b.l_f},
              {"l_total", b.l_total},
              {"max_softmax_dev", b.max_softmax_dev}};
    out << line.dump() << '\n';
  }
  for (const auto& e : result.epochs) {
    json line{{"epoch", e.epoch},
              {"epoch_summary", true},
              {"l_ae", e.l_ae},
              {"l_f", e.l_f},
              {"l_total", e.l_total}};
    out << line.dump() << '\n';
  }
}

/// Staypoint labels aligned to score records via (agent_id, index).
std::vector<int> staypoint_labels_for(
    const std::vector<bayesic::AnomalyRecord>& records,
    const bayesic::MobilityDataset& test) {
  std::vector<int> labels;
  labels.reserve(records.size());
  for (const auto& r : records) {
    const auto it = test.agents.find(r.agent_id);
    if (it == test.agents.end() ||
        r.staypoint_index >= static_cast<int>(it->second.staypoints.size())) {
      throw bayesic::ValidationError(
          "scores reference agent " + std::to_string(r.agent_id) +
          " staypoint " + std::to_string(r.staypoint_index) +
          " not present in the dataset");
    }
    const auto& sp = it->second.staypoints[r.staypoint_index];
    labels.push_back(sp.anomalous.value_or(false) ? 1 : 0);
  }
  return labels;
}

/// Evaluates one level if both classes are present; returns the report (or
/// a skip marker) as JSON and writes curve CSVs.
json evaluate_level(RunContext& ctx, const std::string& level,
                    const std::vector<double>& scores,
                    const std::vector<int>& labels) {
  const auto n_pos = std::count(labels.begin(), labels.end(), 1);
  const auto n_neg = static_cast<long>(labels.size()) - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    std::cout << "evaluate[" << level << "]: skipped (single-class labels, "
              << n_pos << " positive / " << n_neg << " negative)\n";
    return json{{"level", level},
                {"skipped", true},
                {"reason", "single-class labels"},
                {"n_pos", n_pos},
                {"n_neg", n_neg}};
  }
  const auto report = bayesic::evaluate(scores, labels, level);
  const auto roc = ctx.path("roc_" + level + ".csv");
  const auto pr = ctx.path("pr_" + level + ".csv");
  bayesic::save_curve_csv(roc, "fpr", "tpr", report.roc_points);
  bayesic::save_curve_csv(pr, "recall", "precision", report.pr_points);
  ctx.record_output("roc_" + level, roc);
  ctx.record_output("pr_" + level, pr);
  std::cout << "evaluate[" << level << "]: aupr=" << report.aupr
            << " auroc=" << report.auroc << " max_f1=" << report.max_f1
            << " (n_pos=" << report.n_pos << ", n_neg=" << report.n_neg
            << ")\n";
  return json::parse(bayesic::metrics_to_json(report));
}

json evaluate_both_levels(RunContext& ctx,
                          const std::vector<bayesic::AnomalyRecord>& records,
                          const bayesic::MobilityDataset& test,
                          const std::map<bayesic::AgentId, bool>& agent_labels,
                          const std::string& tag = "") {
  std::vector<double> sp_scores;
  sp_scores.reserve(records.size());
  for (const auto& r : records) sp_scores.push_back(r.score);
  const auto sp_labels = staypoint_labels_for(records, test);

  const auto by_agent = bayesic::agent_scores(records);
  std::vector<double> ag_scores;
  std::vector<int> ag_labels;
  for (const auto& [id, score] : by_agent) {
    const auto it = agent_labels.find(id);
    if (it == agent_labels.end()) {
      throw bayesic::ValidationError("agent " + std::to_string(id) +
                                     " missing from agent labels");
    }
    ag_scores.push_back(score);
    ag_labels.push_back(it->second ? 1 : 0);
  }

  json out;
  out["staypoint"] = evaluate_level(ctx, tag + "staypoint", sp_scores, sp_labels);
  out["agent"] = evaluate_level(ctx, tag + "agent", ag_scores, ag_labels);
  return out;
}

int cmd_generate(RunContext& ctx) {
  const auto& g = ctx.config.generate;
  const auto data = bayesic::generate(
      bayesic::default_personas(), g.n_agents, g.weeks_train, g.weeks_test,
      ctx.config.training.week_anchor, ctx.config.training.seed);

  bayesic::AnomalySpec spec;
  spec.kind = bayesic::anomaly_kind_from_string(g.anomaly_kind);
  spec.agent_fraction = g.anomaly_fraction;
  spec.hunger_meals_per_week = g.hunger_meals_per_week;
  spec.social_replace_probability = g.social_replace_probability;
  const auto injected =
      bayesic::inject_anomalies(data.test, spec, ctx.config.training.seed + 1);
  if (injected.selected_agents.empty() && g.anomaly_fraction > 0.0) {
    std::cout << "warning: anomaly fraction selected zero agents\n";
  }

  bayesic::save_staypoints(ctx.path("train.csv"), data.train);
  bayesic::save_staypoints(ctx.path("test.csv"), injected.test);
  bayesic::save_agent_labels(ctx.path("agent_labels.csv"),
                             injected.agent_labels);
  ctx.record_output("train", ctx.path("train.csv"));
  ctx.record_output("test", ctx.path("test.csv"));
  ctx.record_output("agent_labels", ctx.path("agent_labels.csv"));
  ctx.manifest["generated"] = {
      {"agents", g.n_agents},
      {"anomalous_agents", injected.selected_agents.size()},
      {"staypoints_added", injected.staypoints_added},
      {"staypoints_modified", injected.staypoints_modified},
      {"staypoints_removed", injected.staypoints_removed}};
  std::cout << "generated " << data.train.staypoint_count() << " train / "
            << injected.test.staypoint_count() << " test staypoints for "
            << g.n_agents << " agents (" << injected.selected_agents.size()
            << " anomalous)\n";
  return 0;
}

int cmd_train(RunContext& ctx, const std::string& data_file,
              const std::string& poi_index_file, double poi_radius) {
  const auto train_set =
      load_data(ctx, "train", data_file, poi_index_file, poi_radius);
  const auto result = bayesic::train(train_set, ctx.config.training);

  bayesic::save_checkpoint(result.pipeline, ctx.path("model"));
  write_training_log(ctx.path("training_log.jsonl"), result);
  ctx.record_output("model_bin", ctx.path("model.bin"));
  ctx.record_output("model_json", ctx.path("model.json"));
  ctx.record_output("training_log", ctx.path("training_log.jsonl"));
  if (!result.epochs.empty()) {
    std::cout << "trained " << result.epochs.size() << " epochs; l_total "
              << result.epochs.front().l_total << " -> "
              << result.epochs.back().l_total << "\n";
  }
  return 0;
}

int cmd_score(RunContext& ctx, const std::string& checkpoint_prefix,
              const std::string& data_file, const std::string& poi_index_file,
              double poi_radius) {
  const auto pipeline = bayesic::load_checkpoint(checkpoint_prefix);
  ctx.record_input("model_bin", checkpoint_prefix + ".bin");
  ctx.record_input("model_json", checkpoint_prefix + ".json");
  const auto test =
      load_data(ctx, "test", data_file, poi_index_file, poi_radius);

  const auto records = bayesic::score_dataset(pipeline, test);
  bayesic::save_scores_csv(ctx.path("scores.csv"), records);
  bayesic::save_agent_scores_csv(ctx.path("agent_scores.csv"),
                                 bayesic::agent_scores(records));
  ctx.record_output("scores", ctx.path("scores.csv"));
  ctx.record_output("agent_scores", ctx.path("agent_scores.csv"));
  std::cout << "scored " << records.size() << " staypoints across "
            << test.agents.size() << " agents\n";
  return 0;
}

int cmd_evaluate(RunContext& ctx, const std::string& scores_file,
                 const std::string& data_file,
                 const std::string& agent_scores_file,
                 const std::string& agent_labels_file) {
  const auto records = bayesic::load_scores_csv(scores_file);
  ctx.record_input("scores", scores_file);
  const auto test = bayesic::load_staypoints(data_file);
  ctx.record_input("test", data_file);
  auto agent_labels = bayesic::load_agent_labels(agent_labels_file);
  ctx.record_input("agent_labels", agent_labels_file);

  // Agent scores may come from a file (e.g. fused) instead of the records.
  json metrics;
  if (!agent_scores_file.empty()) {
    const auto by_agent = bayesic::load_agent_scores_csv(agent_scores_file);
    ctx.record_input("agent_scores", agent_scores_file);
    std::vector<double> ag_scores;
    std::vector<int> ag_labels;
    for (const auto& [id, score] : by_agent) {
      const auto it = agent_labels.find(id);
      if (it == agent_labels.end()) {
        throw bayesic::ValidationError("agent " + std::to_string(id) +
                                       " missing from agent labels");
      }
      ag_scores.push_back(score);
      ag_labels.push_back(it->second ? 1 : 0);
    }
    std::vector<double> sp_scores;
    for (const auto& r : records) sp_scores.push_back(r.score);
    metrics["staypoint"] = evaluate_level(ctx, "staypoint", sp_scores,
                                          staypoint_labels_for(records, test));
    metrics["agent"] = evaluate_level(ctx, "agent", ag_scores, ag_labels);
  } else {
    metrics = evaluate_both_levels(ctx, records, test, agent_labels);
  }

  std::ofstream out(ctx.path("metrics.json"), std::ios::binary);
  out << metrics.dump(2) << '\n';
  out.close();
  ctx.record_output("metrics", ctx.path("metrics.json"));
  return 0;
}

int cmd_fuse(RunContext& ctx, const std::string& agent_scores_file,
             const std::string& train_file, const std::string& test_file,
             const std::string& agent_labels_file) {
  const auto model_scores = bayesic::load_agent_scores_csv(agent_scores_file);
  ctx.record_input("agent_scores", agent_scores_file);
  const auto train_set = bayesic::load_staypoints(train_file);
  ctx.record_input("train", train_file);
  const auto test_set = bayesic::load_staypoints(test_file);
  ctx.record_input("test", test_file);

  const auto profile = bayesic::fit_visit_rates(
      train_set, test_set, ctx.config.training.week_anchor);
  std::map<bayesic::AgentId, double> visit_scores;
  for (const auto& [id, score] : model_scores) {
    visit_scores[id] =
        profile.cells.count(id) ? bayesic::visit_rate_score(profile, id) : 0.0;
  }
  const auto fused = bayesic::fuse_scores(model_scores, visit_scores);
  bayesic::save_agent_scores_csv(ctx.path("fused_agent_scores.csv"), fused);
  ctx.record_output("fused_agent_scores", ctx.path("fused_agent_scores.csv"));

  double lo = 0.0, hi = 0.0;
  bool first = true;
  for (const auto& [id, v] : visit_scores) {
    lo = first ? v : std::min(lo, v);
    hi = first ? v : std::max(hi, v);
    first = false;
  }
  ctx.manifest["visit_score_range"] = {{"min", lo}, {"max", hi}};
  if (hi <= lo) {
    ctx.manifest["visit_score_degenerate"] = true;
    std::cout << "warning: degenerate visit-rate range, fused scores all 0\n";
  }

  if (!agent_labels_file.empty()) {
    const auto agent_labels = bayesic::load_agent_labels(agent_labels_file);
    ctx.record_input("agent_labels", agent_labels_file);
    std::vector<double> scores;
    std::vector<int> labels;
    for (const auto& [id, score] : fused) {
      const auto it = agent_labels.find(id);
      if (it == agent_labels.end()) {
        throw bayesic::ValidationError("agent " + std::to_string(id) +
                                       " missing from agent labels");
      }
      scores.push_back(score);
      labels.push_back(it->second ? 1 : 0);
    }
    json metrics;
    metrics["fused_agent"] = evaluate_level(ctx, "fused_agent", scores, labels);
    std::ofstream out(ctx.path("metrics_fused.json"), std::ios::binary);
    out << metrics.dump(2) << '\n';
    out.close();
    ctx.record_output("metrics_fused", ctx.path("metrics_fused.json"));
  }
  return 0;
}

int cmd_ablate(RunContext& ctx, const std::string& train_file,
               const std::string& test_file,
               const std::string& agent_labels_file) {
  const auto train_set = bayesic::load_staypoints(train_file);
  ctx.record_input("train", train_file);
  const auto test_set = bayesic::load_staypoints(test_file);
  ctx.record_input("test", test_file);
  const auto agent_labels = bayesic::load_agent_labels(agent_labels_file);
  ctx.record_input("agent_labels", agent_labels_file);

  struct Row {
    std::string name;
    json metrics;
  };
  std::vector<Row> rows;

  // Full pipeline first; its checkpoint is reused for the arrival ablation,
  // which changes nothing about training.
  {
    auto config = ctx.config.training;
    config.ablation = bayesic::AblationSwitches{};
    const auto result = bayesic::train(train_set, config);
    bayesic::save_checkpoint(result.pipeline, ctx.path("full_model"));
    const auto records = bayesic::score_dataset(result.pipeline, test_set);
    rows.push_back({"full", evaluate_both_levels(ctx, records, test_set,
                                                 agent_labels, "full_")});
  }

  const auto run_cycle = [&](const std::string& name,
                             const bayesic::AblationSwitches& switches,
                             bool retrain) {
    json metrics;
    if (retrain) {
      auto config = ctx.config.training;
      config.ablation = switches;
      const auto result = bayesic::train(train_set, config);
      const auto records = bayesic::score_dataset(result.pipeline, test_set);
      metrics =
          evaluate_both_levels(ctx, records, test_set, agent_labels, name + "_");
    } else {
      bayesic::TrainedPipeline local =
          bayesic::load_checkpoint(ctx.path("full_model"));
      local.config.ablation = switches;
      const auto records = bayesic::score_dataset(local, test_set);
      metrics =
          evaluate_both_levels(ctx, records, test_set, agent_labels, name + "_");
    }
    rows.push_back({name, metrics});
  };

  bayesic::AblationSwitches s;
  s.use_arrival = false;
  run_cycle("without_arrival", s, /*retrain=*/false);
  s = {};
  s.use_poi = false;
  run_cycle("without_poi", s, /*retrain=*/true);
  s = {};
  s.use_duration = false;
  run_cycle("without_duration", s, /*retrain=*/true);
  s = {};
  s.use_embedding = false;
  run_cycle("without_embedding", s, /*retrain=*/true);

  // Comparison table.
  std::vector<std::vector<std::string>> table;
  json summary = json::array();
  std::cout << "configuration        agent_aupr  agent_auroc  sp_aupr  sp_auroc\n";
  for (const auto& row : rows) {
    const auto get = [&](const char* level, const char* key) -> std::string {
      if (row.metrics.contains(level) && !row.metrics[level].value("skipped", false)) {
        return bayesic::csv::format_double(row.metrics[level][key].get<double>());
      }
      return "";
    };
    const std::string a_aupr = get("agent", "aupr");
    const std::string a_auroc = get("agent", "auroc");
    const std::string s_aupr = get("staypoint", "aupr");
    const std::string s_auroc = get("staypoint", "auroc");
    table.push_back({row.name, a_aupr, a_auroc, s_aupr, s_auroc});
    json j = row.metrics;
    j["configuration"] = row.name;
    summary.push_back(j);
    std::printf("%-20s %-11s %-12s %-8s %-8s\n", row.name.c_str(),
                a_aupr.substr(0, 8).c_str(), a_auroc.substr(0, 8).c_str(),
                s_aupr.substr(0, 8).c_str(), s_auroc.substr(0, 8).c_str());
  }
  bayesic::csv::write_file(
      ctx.path("ablation.csv"),
      {"configuration", "agent_aupr", "agent_auroc", "staypoint_aupr",
       "staypoint_auroc"},
      table);
  ctx.record_output("ablation_csv", ctx.path("ablation.csv"));
  std::ofstream out(ctx.path("ablation.json"), std::ios::binary);
  out << summary.dump(2) << '\n';
  out.close();
  ctx.record_output("ablation_json", ctx.path("ablation.json"));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"staypoint mobility anomaly detection pipeline"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir = "out";
  app.add_option("--config", config_path,
                 "JSON config path (falls back to $BAYESIC_CONFIG)");
  app.add_option("--set", overrides, "config overrides, e.g. training.epochs=5");
  app.add_option("--out-dir", out_dir, "output directory");

  auto* gen = app.add_subcommand("generate", "emit a synthetic dataset");

  std::string data_file, poi_index_file;
  double poi_radius = 15.0;
  auto* tr = app.add_subcommand("train", "fit the pipeline on staypoints");
  tr->add_option("--data", data_file, "training staypoint CSV")->required();
  tr->add_option("--poi-index", poi_index_file, "POI index CSV for coordinate mapping");
  tr->add_option("--poi-radius", poi_radius, "mapping radius in meters");

  std::string checkpoint_prefix;
  auto* sc = app.add_subcommand("score", "score staypoints with a checkpoint");
  sc->add_option("--checkpoint", checkpoint_prefix,
                 "checkpoint prefix (expects .bin/.json)")
      ->required();
  sc->add_option("--data", data_file, "test staypoint CSV")->required();
  sc->add_option("--poi-index", poi_index_file, "POI index CSV");
  sc->add_option("--poi-radius", poi_radius, "mapping radius in meters");

  std::string scores_file, agent_scores_file, agent_labels_file;
  auto* ev = app.add_subcommand("evaluate", "compute metrics from scores");
  ev->add_option("--scores", scores_file, "staypoint scores CSV")->required();
  ev->add_option("--data", data_file, "test CSV with labels")->required();
  ev->add_option("--agent-scores", agent_scores_file,
                 "agent scores CSV (defaults to max over staypoints)");
  ev->add_option("--agent-labels", agent_labels_file, "agent labels CSV")
      ->required();

  std::string train_file, test_file;
  auto* fu = app.add_subcommand("fuse", "fuse model scores with visit rates");
  fu->add_option("--agent-scores", agent_scores_file, "model agent scores CSV")
      ->required();
  fu->add_option("--train", train_file, "training staypoint CSV")->required();
  fu->add_option("--test", test_file, "test staypoint CSV")->required();
  fu->add_option("--agent-labels", agent_labels_file,
                 "agent labels CSV (metrics emitted when given)");

  auto* ab = app.add_subcommand("ablate", "evaluate single-component ablations");
  ab->add_option("--train", train_file, "training staypoint CSV")->required();
  ab->add_option("--test", test_file, "test staypoint CSV")->required();
  ab->add_option("--agent-labels", agent_labels_file, "agent labels CSV")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    auto config = resolve_config(config_path, overrides);
    config.training.validate();

    if (gen->parsed()) {
      RunContext ctx("generate", out_dir, config);
      const int rc = cmd_generate(ctx);
      ctx.finish();
      return rc;
    }
    if (tr->parsed()) {
      RunContext ctx("train", out_dir, config);
      const int rc = cmd_train(ctx, data_file, poi_index_file, poi_radius);
      ctx.finish();
      return rc;
    }
    if (sc->parsed()) {
      RunContext ctx("score", out_dir, config);
      const int rc =
          cmd_score(ctx, checkpoint_prefix, data_file, poi_index_file, poi_radius);
      ctx.finish();
      return rc;
    }
    if (ev->parsed()) {
      RunContext ctx("evaluate", out_dir, config);
      const int rc = cmd_evaluate(ctx, scores_file, data_file,
                                  agent_scores_file, agent_labels_file);
      ctx.finish();
      return rc;
    }
    if (fu->parsed()) {
      RunContext ctx("fuse", out_dir, config);
      const int rc =
          cmd_fuse(ctx, agent_scores_file, train_file, test_file, agent_labels_file);
      ctx.finish();
      return rc;
    }
    if (ab->parsed()) {
      RunContext ctx("ablate", out_dir, config);
      const int rc = cmd_ablate(ctx, train_file, test_file, agent_labels_file);
      ctx.finish();
      return rc;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
