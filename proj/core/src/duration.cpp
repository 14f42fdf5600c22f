#include "bayesic/duration.hpp"

#include <cmath>

#include "bayesic/errors.hpp"

namespace bayesic {

using nn::Graph;
using nn::Matrix;
using nn::Value;

namespace {
constexpr double kInvSqrt2Pi = 0.3989422804014327;
constexpr double kSqrt2Pi = 2.5066282746310002;
constexpr double kNllFloor = 1e-30;

void validate_mixture(const GaussianMixture& gm) {
  if (gm.weights.size() == 0 || gm.weights.size() != gm.means.size() ||
      gm.weights.size() != gm.stds.size()) {
    throw ValidationError("mixture: inconsistent component counts");
  }
  if (std::abs(gm.weights.sum() - 1.0) > 1e-6) {
    throw ValidationError("mixture: weights sum to " +
                          std::to_string(gm.weights.sum()) + ", expected 1");
  }
  if ((gm.weights.array() < 0.0).any()) {
    throw ValidationError("mixture: negative weight");
  }
  if ((gm.stds.array() <= 0.0).any()) {
    throw ValidationError("mixture: non-positive std");
  }
}
}  // namespace

double mixture_density(const GaussianMixture& gm, double d_norm) {
  validate_mixture(gm);
  double density = 0.0;
  for (int k = 0; k < gm.components(); ++k) {
    const double u = (d_norm - gm.means[k]) / gm.stds[k];
    density += gm.weights[k] * kInvSqrt2Pi / gm.stds[k] * std::exp(-0.5 * u * u);
  }
  return density;
}

double duration_nll(const GaussianMixture& gm, double d_norm) {
  return -std::log(std::max(mixture_density(gm, d_norm), kNllFloor));
}

double duration_probability(const GaussianMixture& gm, double d_norm,
                            double bin_width) {
  const double p = mixture_density(gm, d_norm) * bin_width;
  return std::clamp(p, 1e-9, 1.0);
}

DurationModel::DurationModel(const DurationConfig& config, Rng& rng)
    : config_(config),
      proj_latent_("dur.proj_h", config.latent_width, config.width, rng),
      proj_time_("dur.proj_t", 1, config.width, rng),
      poi_embedding_("dur.poi_embed",
                     nn::xavier_uniform(config.vocab_size, config.width, rng)),
      head_("dur.head", config.width, config.mixture_components, rng),
      mu_("dur.mu", Matrix::Zero(1, config.mixture_components)),
      log_sigma_("dur.log_sigma", Matrix::Zero(1, config.mixture_components)) {
  if (config.mixture_components < 1) {
    throw ShapeError("duration model needs at least one mixture component");
  }
  if (config.vocab_size < 1) throw ShapeError("duration model needs K >= 1");
  for (int i = 0; i < config.layers; ++i) {
    attention_.emplace_back("dur.attn" + std::to_string(i), config.width,
                            config.heads, config.ffn_width, rng);
  }
  // Spread initial components over the normalized-duration range; training
  // usually re-initializes from data quantiles via init_components().
  for (int k = 0; k < config.mixture_components; ++k) {
    mu_.value(0, k) =
        (k + 0.5) / static_cast<double>(config.mixture_components);
    log_sigma_.value(0, k) = std::log(0.25);
  }
}

void DurationModel::init_components(const Eigen::VectorXd& mean_quantiles,
                                    double sigma) {
  if (mean_quantiles.size() != config_.mixture_components) {
    throw ShapeError("init_components: expected " +
                     std::to_string(config_.mixture_components) + " means");
  }
  mu_.value.row(0) = mean_quantiles.transpose();
  log_sigma_.value.setConstant(std::log(std::max(sigma, config_.sigma_floor)));
}

Value DurationModel::weights_on(Graph& g, Value agent_embedding,
                                Value t_norm_col, Value poi_onehot) const {
  const Eigen::Index n = t_norm_col.rows();
  if (agent_embedding.rows() != 1 ||
      agent_embedding.cols() != config_.latent_width) {
    throw ShapeError("duration forward: embedding must be 1 x latent");
  }
  if (t_norm_col.cols() != 1 || poi_onehot.rows() != n ||
      poi_onehot.cols() != config_.vocab_size) {
    throw ShapeError("duration forward: bad time/poi shapes");
  }

  // Three tokens per step, grouped by kind: rows [0, n) are the embedding
  // token, [n, 2n) the time token, [2n, 3n) the POI token. A block mask
  // restricts attention to each step's own triple.
  Value ones = g.input(Matrix::Ones(n, 1));
  Value h_tok = g.matmul(ones, proj_latent_(g, agent_embedding));
  Value t_tok = proj_time_(g, t_norm_col);
  Value c_tok = g.matmul(poi_onehot, g.param(poi_embedding_));
  Value tokens = g.concat_rows({h_tok, t_tok, c_tok});

  Matrix mask = Matrix::Constant(3 * n, 3 * n, -1e30);
  for (Eigen::Index i = 0; i < 3 * n; ++i) {
    const Eigen::Index step = i % n;
    mask(i, step) = 0.0;
    mask(i, n + step) = 0.0;
    mask(i, 2 * n + step) = 0.0;
  }
  for (const auto& layer : attention_) tokens = layer(g, tokens, &mask);

  // Mean-pool each step's three tokens.
  Matrix pool = Matrix::Zero(n, 3 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    pool(i, i) = pool(i, n + i) = pool(i, 2 * n + i) = 1.0 / 3.0;
  }
  Value pooled = g.matmul(g.input(std::move(pool)), tokens);
  return g.softmax_rows(head_(g, pooled));
}

Value DurationModel::stds_on(Graph& g) const {
  return g.max_scalar(g.exp_fn(g.param(log_sigma_)), config_.sigma_floor);
}

Value DurationModel::means_on(Graph& g) const { return g.param(mu_); }

Value DurationModel::nll_sum_on(Graph& g, Value weights,
                                Value d_norm_col) const {
  Value sigma = stds_on(g);
  Value diff = g.outer_sub(d_norm_col, means_on(g));  // n x K_mix
  Value u = g.div_rowvec(diff, sigma);
  Value expterm = g.exp_fn(g.scale(g.square(u), -0.5));
  Value pdf = g.div_rowvec(expterm, g.scale(sigma, kSqrt2Pi));
  Value density = g.row_sum(g.cmul(weights, pdf));  // n x 1
  return g.scale(g.sum_all(g.log_floor(density, kNllFloor)), -1.0);
}

GaussianMixture DurationModel::mixture(const Eigen::VectorXd& agent_embedding,
                                       double t_norm, int poi_index) const {
  if (poi_index < 0 || poi_index >= config_.vocab_size) {
    throw ValidationError("duration mixture: poi index " +
                          std::to_string(poi_index) + " out of range");
  }
  Graph g;
  Matrix h(1, agent_embedding.size());
  h.row(0) = agent_embedding.transpose();
  Matrix t(1, 1);
  t(0, 0) = t_norm;
  Matrix onehot = Matrix::Zero(1, config_.vocab_size);
  onehot(0, poi_index) = 1.0;

  Value w = weights_on(g, g.input(std::move(h)), g.input(std::move(t)),
                       g.input(std::move(onehot)));
  GaussianMixture gm;
  gm.weights = w.val().row(0).transpose();
  gm.means = mu_.value.row(0).transpose();
  gm.stds = stds_on(g).val().row(0).transpose();
  return gm;
}

nn::ParamList DurationModel::parameters() {
  nn::ParamList out;
  proj_latent_.collect(out);
  proj_time_.collect(out);
  out.push_back(&poi_embedding_);
  for (auto& layer : attention_) layer.collect(out);
  head_.collect(out);
  out.push_back(&mu_);
  out.push_back(&log_sigma_);
  return out;
}

}  // namespace bayesic
