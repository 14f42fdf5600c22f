#pragma once

#include <map>
#include <vector>

#include "bayesic/encoding.hpp"
#include "bayesic/nn/layers.hpp"
#include "bayesic/types.hpp"

namespace bayesic {

struct EmbeddingConfig {
  int input_width = 0;    // K + 2, set from the vocabulary
  int model_width = 64;   // transformer width
  int latent_width = 32;  // agent embedding width
  int encoder_layers = 2;
  int decoder_layers = 2;
  int heads = 4;
  int ffn_width = 128;
  int window = 64;  // max staypoints per encoded window
};

/// Transformer autoencoder: sequences of encoded staypoints are projected
/// to a latent agent embedding (the encoder output at the learnable prefix
/// position) and reconstructed from it by a decoder that attends from
/// positional queries to the latent.
class EmbeddingModel {
 public:
  EmbeddingModel(const EmbeddingConfig& config, Rng& rng);

  const EmbeddingConfig& config() const { return config_; }
  /// Learnable prefix token, width K + 2.
  Eigen::VectorXd prefix_token() const { return prefix_.value.row(0).transpose(); }

  /// Tape forward: body is an n x (K+2) window of encoded staypoints
  /// (without the prefix; n >= 1, n <= window). Returns the 1 x latent
  /// embedding node.
  nn::Value embed_on(nn::Graph& g, nn::Value body) const;

  /// Tape forward: reconstructs n encoded staypoints from a 1 x latent
  /// embedding node.
  nn::Value reconstruct_on(nn::Graph& g, nn::Value latent, int n) const;

  /// Convenience forward passes on a private graph.
  Eigen::VectorXd embed(const Eigen::MatrixXd& body) const;
  Eigen::MatrixXd reconstruct(const Eigen::VectorXd& latent, int n) const;

  nn::ParamList parameters();

 private:
  EmbeddingConfig config_;
  nn::Linear in_proj_;
  nn::Matrix pe_;  // (window + 1) x model_width, fixed sinusoidal table
  std::vector<nn::EncoderLayer> encoder_;
  nn::LayerNorm encoder_norm_;
  nn::Linear to_latent_;
  nn::Linear from_latent_;
  std::vector<nn::DecoderLayer> decoder_;
  nn::LayerNorm decoder_norm_;
  nn::Linear out_proj_;
  nn::Parameter prefix_;  // 1 x (K+2), sampled from a standard normal
};

/// Mean squared error of Eq-style reconstruction: sum of squared residuals
/// over n * width, as plain matrices. Throws ShapeError on mismatch.
double reconstruction_loss(const Eigen::MatrixXd& target,
                           const Eigen::MatrixXd& reconstruction);

/// Splits a sequence body (without prefix) into non-overlapping windows of
/// at most `window` rows; the final window keeps its natural shorter length.
std::vector<Eigen::MatrixXd> make_windows(const Eigen::MatrixXd& body,
                                          int window);

/// Per-agent embedding: the element-wise mean of the embeddings of an
/// agent's training windows. Agents absent from `train` are simply not in
/// the map; callers substitute the zero vector.
std::map<AgentId, Eigen::VectorXd> compute_agent_embeddings(
    const EmbeddingModel& model, const MobilityDataset& train,
    const NormalizationStats& stats);

}  // namespace bayesic
