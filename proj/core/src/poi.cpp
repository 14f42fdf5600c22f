#include "bayesic/poi.hpp"

#include "bayesic/errors.hpp"

namespace bayesic {

using nn::Graph;
using nn::Matrix;
using nn::Value;

Eigen::VectorXd poi_step_features(const Eigen::VectorXd& agent_embedding,
                                  double t_norm,
                                  const Eigen::VectorXd& prev_poi_onehot) {
  Eigen::VectorXd out(agent_embedding.size() + 1 + prev_poi_onehot.size());
  out << agent_embedding, t_norm, prev_poi_onehot;
  return out;
}

Eigen::MatrixXd poi_feature_matrix(const Eigen::VectorXd& agent_embedding,
                                   const std::vector<double>& t_norms,
                                   const std::vector<int>& poi_indices,
                                   int vocab_size) {
  if (t_norms.size() != poi_indices.size()) {
    throw ShapeError("poi_feature_matrix: time / poi length mismatch");
  }
  const auto n = static_cast<Eigen::Index>(t_norms.size());
  const Eigen::Index dh = agent_embedding.size();
  Eigen::MatrixXd features = Eigen::MatrixXd::Zero(n, dh + 1 + vocab_size);
  for (Eigen::Index i = 0; i < n; ++i) {
    features.block(i, 0, 1, dh) = agent_embedding.transpose();
    features(i, dh) = t_norms[i];
    if (i > 0) {
      const int prev = poi_indices[i - 1];
      if (prev < 0 || prev >= vocab_size) {
        throw ShapeError("poi_feature_matrix: poi index out of range");
      }
      features(i, dh + 1 + prev) = 1.0;
    }
  }
  return features;
}

PoiTypeModel::PoiTypeModel(const PoiConfig& config, Rng& rng)
    : config_(config),
      cell_("poi.gru", config.latent_width + 1 + config.vocab_size,
            config.hidden, rng),
      head_("poi.head", config.hidden, config.vocab_size, rng) {
  if (config.vocab_size < 1) throw ShapeError("poi model needs K >= 1");
}

Value PoiTypeModel::distributions_on(Graph& g, Value features) const {
  if (features.cols() != input_width()) {
    throw ShapeError("poi forward: feature width " +
                     std::to_string(features.cols()) + " != " +
                     std::to_string(input_width()));
  }
  const auto n = features.rows();
  if (n < 1) throw ShapeError("poi forward: empty feature sequence");
  Value state = g.input(Matrix::Zero(1, config_.hidden));
  std::vector<Value> states;
  states.reserve(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    state = cell_.step(g, g.slice_rows(features, i, 1), state);
    states.push_back(state);
  }
  Value stacked = n == 1 ? states[0] : g.concat_rows(states);
  return g.softmax_rows(head_(g, stacked));
}

Eigen::VectorXd PoiTypeModel::distribution(
    const Eigen::MatrixXd& features) const {
  Graph g;
  Value dists = distributions_on(g, g.input(features));
  return dists.val().row(dists.rows() - 1).transpose();
}

nn::ParamList PoiTypeModel::parameters() {
  nn::ParamList out;
  cell_.collect(out);
  head_.collect(out);
  return out;
}

Eigen::VectorXd PoiTypeModel::step(const Eigen::VectorXd& state,
                                   const Eigen::VectorXd& features,
                                   Eigen::VectorXd* next_state) const {
  if (features.size() != input_width() || state.size() != config_.hidden) {
    throw ShapeError("poi step: bad state or feature width");
  }
  Graph g;
  Matrix x(1, features.size());
  x.row(0) = features.transpose();
  Matrix h(1, state.size());
  h.row(0) = state.transpose();
  Value new_state = cell_.step(g, g.input(std::move(x)), g.input(std::move(h)));
  if (next_state) *next_state = new_state.val().row(0).transpose();
  Value dist = g.softmax_rows(head_(g, new_state));
  return dist.val().row(0).transpose();
}

PoiStepper::PoiStepper(const PoiTypeModel& model)
    : model_(model),
      state_(Eigen::VectorXd::Zero(model.config().hidden)) {}

Eigen::VectorXd PoiStepper::step(const Eigen::VectorXd& features) {
  return model_.step(state_, features, &state_);
}

double poi_nll(const Eigen::VectorXd& distribution, int observed_index) {
  if (observed_index < 0 || observed_index >= distribution.size()) {
    throw ValidationError("poi_nll: observed index out of range");
  }
  constexpr double kFloor = 1e-9;
  return -std::log(std::max(distribution[observed_index], kFloor));
}

}  // namespace bayesic
