#include "bayesic/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <map>
#include <sstream>

#include "bayesic/config.hpp"
#include "bayesic/errors.hpp"
#include "bayesic/hash.hpp"

namespace bayesic {

namespace {

constexpr char kMagic[4] = {'B', 'A', 'Y', 'C'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void put_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void put_i64(std::ostream& out, std::int64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void put_f64(std::ostream& out, double v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void put_string(std::ostream& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}
void put_matrix(std::ostream& out, const nn::Matrix& m) {
  put_u64(out, static_cast<std::uint64_t>(m.rows()));
  put_u64(out, static_cast<std::uint64_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) put_f64(out, m(i, j));
  }
}

struct Reader {
  std::istream& in;
  const std::string& path;

  void fail(const std::string& what) const {
    throw IoError("checkpoint " + path + ": " + what);
  }
  std::uint32_t u32() {
    std::uint32_t v;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!in) fail("truncated (u32)");
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!in) fail("truncated (u64)");
    return v;
  }
  std::int64_t i64() {
    std::int64_t v;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!in) fail("truncated (i64)");
    return v;
  }
  double f64() {
    double v;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!in) fail("truncated (f64)");
    return v;
  }
  std::string string() {
    const auto n = u32();
    std::string s(n, '\0');
    in.read(s.data(), n);
    if (!in) fail("truncated (string)");
    return s;
  }
  nn::Matrix matrix() {
    const auto rows = static_cast<Eigen::Index>(u64());
    const auto cols = static_cast<Eigen::Index>(u64());
    nn::Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = f64();
    }
    return m;
  }
};

void put_kde(std::ostream& out, const AgentKde& kde) {
  put_f64(out, kde.bandwidth);
  put_u64(out, kde.centers.size());
  for (double c : kde.centers) put_f64(out, c);
}

AgentKde read_kde(Reader& r) {
  AgentKde kde;
  kde.bandwidth = r.f64();
  const auto n = r.u64();
  kde.centers.resize(n);
  for (auto& c : kde.centers) c = r.f64();
  return kde;
}

}  // namespace

void save_checkpoint(const TrainedPipeline& pipeline,
                     const std::string& prefix) {
  const std::string config_json = training_config_to_json(pipeline.config);

  nlohmann::json meta;
  meta["format_version"] = kVersion;
  meta["config"] = nlohmann::json::parse(config_json);
  meta["normalization"] =
      nlohmann::json::parse(normalization_to_json(pipeline.stats));
  meta["config_hash"] = "fnv1a64:" + fnv1a64_hex(config_json);
  {
    std::ofstream out(prefix + ".json", std::ios::binary);
    if (!out) throw IoError("cannot write " + prefix + ".json");
    out << meta.dump(2) << '\n';
  }

  std::ofstream out(prefix + ".bin", std::ios::binary);
  if (!out) throw IoError("cannot write " + prefix + ".bin");
  out.write(kMagic, 4);
  put_u32(out, kVersion);

  // Parameters of all three models, keyed by name.
  auto& mutable_pipeline = const_cast<TrainedPipeline&>(pipeline);
  nn::ParamList params = mutable_pipeline.embedding->parameters();
  {
    auto p = mutable_pipeline.poi->parameters();
    params.insert(params.end(), p.begin(), p.end());
    p = mutable_pipeline.duration->parameters();
    params.insert(params.end(), p.begin(), p.end());
  }
  put_u64(out, params.size());
  for (const nn::Parameter* p : params) {
    put_string(out, p->name);
    put_matrix(out, p->value);
  }

  put_u64(out, pipeline.agent_embeddings.size());
  for (const auto& [id, h] : pipeline.agent_embeddings) {
    put_i64(out, id);
    put_u64(out, static_cast<std::uint64_t>(h.size()));
    for (Eigen::Index i = 0; i < h.size(); ++i) put_f64(out, h[i]);
  }

  put_f64(out, pipeline.arrival.bandwidth_floor);
  put_f64(out, pipeline.arrival.bin_width);
  put_f64(out, pipeline.arrival.clip_floor);
  put_u64(out, pipeline.arrival.per_agent.size());
  for (const auto& [id, kde] : pipeline.arrival.per_agent) {
    put_i64(out, id);
    put_kde(out, kde);
  }
  put_kde(out, pipeline.arrival.population);

  if (!out) throw IoError("short write to " + prefix + ".bin");
}

TrainedPipeline load_checkpoint(const std::string& prefix) {
  std::ifstream meta_in(prefix + ".json", std::ios::binary);
  if (!meta_in) throw IoError("cannot open " + prefix + ".json");
  std::ostringstream meta_buf;
  meta_buf << meta_in.rdbuf();
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(meta_buf.str());
  } catch (const nlohmann::json::exception& e) {
    throw IoError("checkpoint " + prefix + ".json: " + e.what());
  }
  if (!meta.contains("format_version") ||
      meta.at("format_version").get<std::uint32_t>() != kVersion) {
    throw IoError("checkpoint " + prefix + ": unsupported format version");
  }

  TrainedPipeline pipeline;
  pipeline.config = training_config_from_json(meta.at("config").dump());
  pipeline.stats = normalization_from_json(meta.at("normalization").dump());

  const int k = pipeline.stats.vocab_size();
  pipeline.config.embedding.input_width = pipeline.stats.encoded_width();
  pipeline.config.duration.vocab_size = k;
  pipeline.config.duration.latent_width = pipeline.config.embedding.latent_width;

  Rng throwaway(0);
  pipeline.embedding =
      std::make_unique<EmbeddingModel>(pipeline.config.embedding, throwaway);
  PoiConfig poi_config{k, pipeline.config.embedding.latent_width,
                       pipeline.config.poi_hidden};
  pipeline.poi = std::make_unique<PoiTypeModel>(poi_config, throwaway);
  pipeline.duration =
      std::make_unique<DurationModel>(pipeline.config.duration, throwaway);

  std::map<std::string, nn::Parameter*> by_name;
  {
    nn::ParamList params = pipeline.embedding->parameters();
    auto p = pipeline.poi->parameters();
    params.insert(params.end(), p.begin(), p.end());
    p = pipeline.duration->parameters();
    params.insert(params.end(), p.begin(), p.end());
    for (nn::Parameter* param : params) by_name[param->name] = param;
  }

  std::ifstream in(prefix + ".bin", std::ios::binary);
  if (!in) throw IoError("cannot open " + prefix + ".bin");
  const std::string path = prefix + ".bin";
  Reader r{in, path};

  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) r.fail("bad magic");
  if (r.u32() != kVersion) r.fail("unsupported binary version");

  const auto n_params = r.u64();
  std::size_t loaded = 0;
  for (std::uint64_t i = 0; i < n_params; ++i) {
    const std::string name = r.string();
    nn::Matrix value = r.matrix();
    const auto it = by_name.find(name);
    if (it == by_name.end()) r.fail("unknown parameter '" + name + "'");
    if (it->second->value.rows() != value.rows() ||
        it->second->value.cols() != value.cols()) {
      r.fail("shape mismatch for parameter '" + name + "'");
    }
    it->second->value = std::move(value);
    ++loaded;
  }
  if (loaded != by_name.size()) {
    r.fail("parameter count mismatch: file has " + std::to_string(loaded) +
           ", model needs " + std::to_string(by_name.size()));
  }

  const auto n_embeddings = r.u64();
  for (std::uint64_t i = 0; i < n_embeddings; ++i) {
    const AgentId id = r.i64();
    const auto dim = static_cast<Eigen::Index>(r.u64());
    Eigen::VectorXd h(dim);
    for (Eigen::Index j = 0; j < dim; ++j) h[j] = r.f64();
    pipeline.agent_embeddings.emplace(id, std::move(h));
  }

  pipeline.arrival.bandwidth_floor = r.f64();
  pipeline.arrival.bin_width = r.f64();
  pipeline.arrival.clip_floor = r.f64();
  const auto n_kdes = r.u64();
  for (std::uint64_t i = 0; i < n_kdes; ++i) {
    const AgentId id = r.i64();
    pipeline.arrival.per_agent.emplace(id, read_kde(r));
  }
  pipeline.arrival.population = read_kde(r);

  return pipeline;
}

}  // namespace bayesic
