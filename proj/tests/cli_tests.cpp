// Drives the installed command line binary end to end on a small synthetic
// dataset: generate -> train -> score -> evaluate -> fuse -> ablate, plus
// error paths and manifest/determinism checks.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kCli = BAYESIC_CLI_PATH;

struct Workspace {
  fs::path root;
  Workspace() {
    root = fs::temp_directory_path() / "bayesic_cli_test";
    fs::remove_all(root);
    fs::create_directories(root);
  }
  std::string dir(const std::string& name) const {
    return (root / name).string();
  }
};

int run(const std::string& args) {
  const std::string cmd = kCli + " " + args + " >/dev/null 2>&1";
  return std::system(cmd.c_str());
}

int run_capture(const std::string& args, std::string* output) {
  const std::string out_file =
      (fs::temp_directory_path() / "bayesic_cli_out.txt").string();
  const std::string cmd = kCli + " " + args + " >" + out_file + " 2>&1";
  const int rc = std::system(cmd.c_str());
  std::ifstream in(out_file);
  std::ostringstream buf;
  buf << in.rdbuf();
  *output = buf.str();
  return rc;
}

std::string write_config(const fs::path& root) {
  const auto path = (root / "config.json").string();
  std::ofstream out(path);
  out << R"({
  "seed": 7,
  "model": {"model_width": 16, "latent_width": 8, "encoder_layers": 1,
            "decoder_layers": 1, "heads": 2, "ffn_width": 16, "window": 32,
            "poi_hidden": 16, "duration_width": 16, "duration_heads": 2,
            "duration_ffn_width": 16, "mixture_components": 4},
  "training": {"epochs": 2, "batch_size": 8},
  "generate": {"n_agents": 12, "weeks_train": 2, "weeks_test": 1,
               "anomaly_kind": "combined", "anomaly_fraction": 0.25}
})";
  return path;
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  json j;
  in >> j;
  return j;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("cli full flow") {
  Workspace ws;
  const auto config = write_config(ws.root);
  const std::string base = " --config " + config;

  REQUIRE(run("--out-dir " + ws.dir("gen") + base + " generate") == 0);
  for (const char* f : {"train.csv", "test.csv", "agent_labels.csv",
                        "manifest.json"}) {
    CHECK(fs::exists(fs::path(ws.dir("gen")) / f));
  }

  REQUIRE(run("--out-dir " + ws.dir("train") + base + " train --data " +
              ws.dir("gen") + "/train.csv") == 0);
  for (const char* f : {"model.bin", "model.json", "training_log.jsonl"}) {
    CHECK(fs::exists(fs::path(ws.dir("train")) / f));
  }

  SUBCASE("training log lines carry the loss identity") {
    std::ifstream log(fs::path(ws.dir("train")) / "training_log.jsonl");
    std::string line;
    std::size_t batches = 0;
    while (std::getline(log, line)) {
      const json j = json::parse(line);
      if (j.value("epoch_summary", false)) continue;
      CHECK(j.at("l_total").get<double>() ==
            j.at("l_ae").get<double>() + j.at("l_f").get<double>());
      ++batches;
    }
    CHECK(batches > 0);
  }

  REQUIRE(run("--out-dir " + ws.dir("score") + base + " score --checkpoint " +
              ws.dir("train") + "/model --data " + ws.dir("gen") +
              "/test.csv") == 0);
  CHECK(fs::exists(fs::path(ws.dir("score")) / "scores.csv"));
  CHECK(fs::exists(fs::path(ws.dir("score")) / "agent_scores.csv"));

  REQUIRE(run("--out-dir " + ws.dir("eval") + base + " evaluate --scores " +
              ws.dir("score") + "/scores.csv --data " + ws.dir("gen") +
              "/test.csv --agent-labels " + ws.dir("gen") +
              "/agent_labels.csv") == 0);
  const json metrics = read_json(ws.dir("eval") + "/metrics.json");
  CHECK(metrics.contains("agent"));
  CHECK(metrics.contains("staypoint"));
  CHECK(metrics["agent"]["auroc"].get<double>() >= 0.0);
  CHECK(fs::exists(fs::path(ws.dir("eval")) / "roc_agent.csv"));
  CHECK(fs::exists(fs::path(ws.dir("eval")) / "pr_staypoint.csv"));

  SUBCASE("re-running evaluate reproduces byte-identical metrics") {
    REQUIRE(run("--out-dir " + ws.dir("eval2") + base + " evaluate --scores " +
                ws.dir("score") + "/scores.csv --data " + ws.dir("gen") +
                "/test.csv --agent-labels " + ws.dir("gen") +
                "/agent_labels.csv") == 0);
    CHECK(slurp(ws.dir("eval") + "/metrics.json") ==
          slurp(ws.dir("eval2") + "/metrics.json"));
  }

  REQUIRE(run("--out-dir " + ws.dir("fuse") + base + " fuse --agent-scores " +
              ws.dir("score") + "/agent_scores.csv --train " + ws.dir("gen") +
              "/train.csv --test " + ws.dir("gen") + "/test.csv" +
              " --agent-labels " + ws.dir("gen") + "/agent_labels.csv") == 0);
  CHECK(fs::exists(fs::path(ws.dir("fuse")) / "fused_agent_scores.csv"));

  SUBCASE("manifest lists every artifact with hashes") {
    const json manifest = read_json(ws.dir("score") + "/manifest.json");
    CHECK(manifest.at("command") == "score");
    CHECK(manifest.at("seed") == 7);
    CHECK(manifest.at("outputs").contains("scores"));
    CHECK(manifest.at("outputs").contains("agent_scores"));
    const std::string hash =
        manifest["outputs"]["scores"]["hash"].get<std::string>();
    CHECK(hash.rfind("fnv1a64:", 0) == 0);
    CHECK(manifest.at("duration_seconds").get<double>() >= 0.0);
  }

  SUBCASE("same seed trains to identical checkpoint hashes") {
    REQUIRE(run("--out-dir " + ws.dir("train2") + base + " train --data " +
                ws.dir("gen") + "/train.csv") == 0);
    const json m1 = read_json(ws.dir("train") + "/manifest.json");
    const json m2 = read_json(ws.dir("train2") + "/manifest.json");
    CHECK(m1["outputs"]["model_bin"]["hash"] ==
          m2["outputs"]["model_bin"]["hash"]);
  }
}

TEST_CASE("cli ablate emits a row per disabled component plus the full row") {
  Workspace ws;
  const auto config = write_config(ws.root);
  const std::string base = " --config " + config;
  REQUIRE(run("--out-dir " + ws.dir("gen") + base + " generate") == 0);
  REQUIRE(run("--out-dir " + ws.dir("ablate") + base + " ablate --train " +
              ws.dir("gen") + "/train.csv --test " + ws.dir("gen") +
              "/test.csv --agent-labels " + ws.dir("gen") +
              "/agent_labels.csv") == 0);

  std::ifstream table(ws.dir("ablate") + "/ablation.csv");
  std::string line;
  std::vector<std::string> rows;
  while (std::getline(table, line)) rows.push_back(line);
  REQUIRE(rows.size() == 6);  // header + full + 4 ablations
  CHECK(rows[1].rfind("full,", 0) == 0);
  CHECK(rows[2].rfind("without_arrival,", 0) == 0);
  CHECK(rows[3].rfind("without_poi,", 0) == 0);
  CHECK(rows[4].rfind("without_duration,", 0) == 0);
  CHECK(rows[5].rfind("without_embedding,", 0) == 0);
}

TEST_CASE("cli error handling") {
  Workspace ws;
  const auto config = write_config(ws.root);

  SUBCASE("unknown command is a usage error") {
    CHECK(run("--config " + config + " frobnicate") != 0);
  }
  SUBCASE("missing config") {
    // Clear any inherited environment fallback for this invocation.
    const std::string cmd = "env -u BAYESIC_CONFIG " + kCli +
                            " --out-dir " + ws.dir("x") +
                            " generate >/dev/null 2>&1";
    CHECK(std::system(cmd.c_str()) != 0);
  }
  SUBCASE("unknown config key names the key") {
    std::string output;
    const int rc = run_capture("--config " + config +
                                   " --set training.epochz=3 --out-dir " +
                                   ws.dir("x") + " generate",
                               &output);
    CHECK(rc != 0);
    CHECK(output.find("epochz") != std::string::npos);
  }
  SUBCASE("missing data file") {
    CHECK(run("--config " + config + " --out-dir " + ws.dir("x") +
              " train --data /nonexistent.csv") != 0);
  }
  SUBCASE("BAYESIC_CONFIG fallback works") {
    const std::string cmd = "BAYESIC_CONFIG=" + config + " " + kCli +
                            " --out-dir " + ws.dir("envgen") +
                            " generate >/dev/null 2>&1";
    CHECK(std::system(cmd.c_str()) == 0);
    CHECK(fs::exists(fs::path(ws.dir("envgen")) / "train.csv"));
  }
  SUBCASE("--set override changes behavior") {
    REQUIRE(run("--config " + config + " --set generate.n_agents=5 --out-dir " +
                ws.dir("small") + " generate") == 0);
    std::ifstream labels(ws.dir("small") + "/agent_labels.csv");
    std::string line;
    int rows = -1;  // header
    while (std::getline(labels, line)) ++rows;
    CHECK(rows == 5);
  }
}
