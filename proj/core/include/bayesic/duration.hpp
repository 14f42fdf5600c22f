#pragma once

#include <vector>

#include "bayesic/nn/layers.hpp"

namespace bayesic {

/// A univariate Gaussian mixture over normalized stay duration.
struct GaussianMixture {
  Eigen::VectorXd weights;  // softmax output, sums to 1
  Eigen::VectorXd means;
  Eigen::VectorXd stds;  // >= sigma floor

  int components() const { return static_cast<int>(weights.size()); }
};

/// Sum_k m_k * N(d; mu_k, sigma_k). Validates the mixture (weights sum to
/// 1 within 1e-6, stds positive); throws ValidationError otherwise.
double mixture_density(const GaussianMixture& gm, double d_norm);

/// -log(max(density, 1e-30)); the loose floor keeps training gradients
/// alive through near-zero densities.
double duration_nll(const GaussianMixture& gm, double d_norm);

/// Probability of the duration bin: density * bin_width clipped to
/// [1e-9, 1].
double duration_probability(const GaussianMixture& gm, double d_norm,
                            double bin_width = 0.01);

struct DurationConfig {
  int vocab_size = 0;      // K
  int latent_width = 32;   // agent embedding width
  int width = 32;          // token width for the attention stack
  int layers = 1;
  int heads = 2;
  int ffn_width = 64;
  int mixture_components = 8;
  double sigma_floor = 1e-3;
};

/// Attention-based neural density head: the (embedding, time, POI) triple
/// forms three tokens; self-attention and mean pooling produce the mixture
/// weights, while the component means and stds are global learnable
/// parameters shared across inputs.
class DurationModel {
 public:
  DurationModel(const DurationConfig& config, Rng& rng);

  const DurationConfig& config() const { return config_; }

  /// Initializes the global component means at the given quantile values
  /// and all stds at `sigma` (both in normalized-duration units).
  void init_components(const Eigen::VectorXd& mean_quantiles, double sigma);

  /// Tape forward over a window: returns the n x K_mix matrix of mixture
  /// weights for rows (h, t_i, c_i).
  nn::Value weights_on(nn::Graph& g, nn::Value agent_embedding,
                       nn::Value t_norm_col, nn::Value poi_onehot) const;

  /// Tape helper: component stds as a 1 x K_mix row (exp(log sigma)
  /// floored).
  nn::Value stds_on(nn::Graph& g) const;
  nn::Value means_on(nn::Graph& g) const;

  /// Sum over rows of -log(max(density_i, 1e-30)) for observed normalized
  /// durations d (n x 1).
  nn::Value nll_sum_on(nn::Graph& g, nn::Value weights, nn::Value d_norm_col) const;

  /// Inference: the full mixture for one (embedding, time, POI) input.
  GaussianMixture mixture(const Eigen::VectorXd& agent_embedding,
                          double t_norm, int poi_index) const;

  nn::ParamList parameters();

 private:
  DurationConfig config_;
  nn::Linear proj_latent_;
  nn::Linear proj_time_;
  nn::Parameter poi_embedding_;  // K x width
  std::vector<nn::EncoderLayer> attention_;
  nn::Linear head_;          // width -> K_mix
  nn::Parameter mu_;         // 1 x K_mix
  nn::Parameter log_sigma_;  // 1 x K_mix
};

}  // namespace bayesic
