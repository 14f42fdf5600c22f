#include "bayesic/embedding.hpp"

#include <string>

#include "bayesic/errors.hpp"

namespace bayesic {

using nn::Graph;
using nn::Matrix;
using nn::Value;

EmbeddingModel::EmbeddingModel(const EmbeddingConfig& config, Rng& rng)
    : config_(config),
      in_proj_("ae.in_proj", config.input_width, config.model_width, rng),
      pe_(nn::sinusoidal_positional_encoding(config.window + 1,
                                             config.model_width)),
      encoder_norm_("ae.enc_norm", config.model_width),
      to_latent_("ae.to_latent", config.model_width, config.latent_width, rng),
      from_latent_("ae.from_latent", config.latent_width, config.model_width,
                   rng),
      decoder_norm_("ae.dec_norm", config.model_width),
      out_proj_("ae.out_proj", config.model_width, config.input_width, rng) {
  if (config.input_width < 3) {
    throw ShapeError("embedding model needs input width K + 2 >= 3");
  }
  for (int i = 0; i < config.encoder_layers; ++i) {
    encoder_.emplace_back("ae.enc" + std::to_string(i), config.model_width,
                          config.heads, config.ffn_width, rng);
  }
  for (int i = 0; i < config.decoder_layers; ++i) {
    decoder_.emplace_back("ae.dec" + std::to_string(i), config.model_width,
                          config.heads, config.ffn_width, rng);
  }
  Matrix prefix(1, config.input_width);
  for (Eigen::Index j = 0; j < prefix.cols(); ++j) prefix(0, j) = rng.normal();
  prefix_ = nn::Parameter("ae.prefix", std::move(prefix));
}

Value EmbeddingModel::embed_on(Graph& g, Value body) const {
  const auto n = body.rows();
  if (n < 1 || n > config_.window) {
    throw ShapeError("embed: window length " + std::to_string(n) +
                     " outside [1, " + std::to_string(config_.window) + "]");
  }
  if (body.cols() != config_.input_width) {
    throw ShapeError("embed: body width " + std::to_string(body.cols()) +
                     " != " + std::to_string(config_.input_width));
  }
  Value tokens = g.concat_rows({g.param(prefix_), body});
  Value x = in_proj_(g, tokens);
  x = g.add(x, g.input(pe_.topRows(n + 1)));
  for (const auto& layer : encoder_) x = layer(g, x);
  x = encoder_norm_(g, x);
  return to_latent_(g, g.slice_rows(x, 0, 1));
}

Value EmbeddingModel::reconstruct_on(Graph& g, Value latent, int n) const {
  if (n < 1 || n > config_.window) {
    throw ShapeError("reconstruct: length " + std::to_string(n) +
                     " outside [1, " + std::to_string(config_.window) + "]");
  }
  if (latent.rows() != 1 || latent.cols() != config_.latent_width) {
    throw ShapeError("reconstruct: latent must be 1 x " +
                     std::to_string(config_.latent_width));
  }
  Value memory = from_latent_(g, latent);
  // Queries are the positional encodings of body slots 1..n.
  Value x = g.input(pe_.middleRows(1, n));
  for (const auto& layer : decoder_) x = layer(g, x, memory);
  x = decoder_norm_(g, x);
  return out_proj_(g, x);
}

Eigen::VectorXd EmbeddingModel::embed(const Eigen::MatrixXd& body) const {
  Graph g;
  Value h = embed_on(g, g.input(body));
  return h.val().row(0).transpose();
}

Eigen::MatrixXd EmbeddingModel::reconstruct(const Eigen::VectorXd& latent,
                                            int n) const {
  Graph g;
  Matrix l(1, latent.size());
  l.row(0) = latent.transpose();
  return reconstruct_on(g, g.input(std::move(l)), n).val();
}

nn::ParamList EmbeddingModel::parameters() {
  nn::ParamList out;
  in_proj_.collect(out);
  for (auto& layer : encoder_) layer.collect(out);
  encoder_norm_.collect(out);
  to_latent_.collect(out);
  from_latent_.collect(out);
  for (auto& layer : decoder_) layer.collect(out);
  decoder_norm_.collect(out);
  out_proj_.collect(out);
  out.push_back(&prefix_);
  return out;
}

double reconstruction_loss(const Eigen::MatrixXd& target,
                           const Eigen::MatrixXd& reconstruction) {
  if (target.rows() != reconstruction.rows() ||
      target.cols() != reconstruction.cols()) {
    throw ShapeError("reconstruction_loss: shape mismatch");
  }
  const double n = static_cast<double>(target.size());
  return (target - reconstruction).squaredNorm() / n;
}

std::vector<Eigen::MatrixXd> make_windows(const Eigen::MatrixXd& body,
                                          int window) {
  std::vector<Eigen::MatrixXd> out;
  for (Eigen::Index start = 0; start < body.rows(); start += window) {
    const Eigen::Index len = std::min<Eigen::Index>(window, body.rows() - start);
    out.push_back(body.middleRows(start, len));
  }
  return out;
}

std::map<AgentId, Eigen::VectorXd> compute_agent_embeddings(
    const EmbeddingModel& model, const MobilityDataset& train,
    const NormalizationStats& stats) {
  std::map<AgentId, Eigen::VectorXd> out;
  const Eigen::VectorXd prefix = model.prefix_token();
  for (const auto& [id, seq] : train.agents) {
    if (seq.staypoints.empty()) continue;
    const EncodedSequence enc = encode_sequence(seq, stats, prefix);
    const Eigen::MatrixXd body = enc.tokens.bottomRows(enc.tokens.rows() - 1);
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(model.config().latent_width);
    const auto windows = make_windows(body, model.config().window);
    for (const auto& w : windows) mean += model.embed(w);
    out[id] = mean / static_cast<double>(windows.size());
  }
  return out;
}

}  // namespace bayesic
