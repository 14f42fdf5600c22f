#pragma once

#include <vector>

#include "bayesic/nn/layers.hpp"

namespace bayesic {

struct PoiConfig {
  int vocab_size = 0;    // K
  int latent_width = 32; // agent embedding width
  int hidden = 64;       // recurrent state width
};

/// Per-step input for the recurrent POI head: the agent embedding, the
/// normalized arrival time, then the previous POI one-hot (all zeros at the
/// first step). Width latent + 1 + K.
Eigen::VectorXd poi_step_features(const Eigen::VectorXd& agent_embedding,
                                  double t_norm,
                                  const Eigen::VectorXd& prev_poi_onehot);

/// Builds the n x (latent + 1 + K) feature matrix for a whole observed
/// sequence under teacher forcing: step i sees the true POI of step i - 1.
Eigen::MatrixXd poi_feature_matrix(const Eigen::VectorXd& agent_embedding,
                                   const std::vector<double>& t_norms,
                                   const std::vector<int>& poi_indices,
                                   int vocab_size);

/// Recurrent categorical model over POI types: a gated recurrent cell over
/// step features followed by a linear head and softmax.
class PoiTypeModel {
 public:
  PoiTypeModel(const PoiConfig& config, Rng& rng);

  const PoiConfig& config() const { return config_; }
  int input_width() const {
    return config_.latent_width + 1 + config_.vocab_size;
  }

  /// Tape forward: features is n x input_width; returns the n x K matrix of
  /// per-step distributions (softmax rows).
  nn::Value distributions_on(nn::Graph& g, nn::Value features) const;

  /// Plain forward for one feature sequence prefix; returns the
  /// distribution at the final step.
  Eigen::VectorXd distribution(const Eigen::MatrixXd& features) const;

  /// One recurrent step from an explicit state. Returns the distribution
  /// (width K) and, when `next_state` is given, writes the updated state.
  Eigen::VectorXd step(const Eigen::VectorXd& state,
                       const Eigen::VectorXd& features,
                       Eigen::VectorXd* next_state) const;

  nn::ParamList parameters();

 private:
  PoiConfig config_;
  nn::GruCell cell_;
  nn::Linear head_;
};

/// Incremental scorer state: feeds one step at a time (used when scoring a
/// test sequence in order).
class PoiStepper {
 public:
  explicit PoiStepper(const PoiTypeModel& model);
  /// Advances the recurrent state and returns the distribution (width K).
  Eigen::VectorXd step(const Eigen::VectorXd& features);

 private:
  const PoiTypeModel& model_;
  Eigen::VectorXd state_;
};

/// -log(max(p[c], 1e-9)): the per-observation categorical loss term.
double poi_nll(const Eigen::VectorXd& distribution, int observed_index);

}  // namespace bayesic
