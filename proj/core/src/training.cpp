#include "bayesic/training.hpp"

#include <algorithm>
#include <cmath>

#include "bayesic/errors.hpp"

namespace bayesic {

using nn::Graph;
using nn::Matrix;
using nn::Value;

void TrainingConfig::validate() const {
  if (epochs < 1) throw ConfigError("training: epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("training: batch_size must be >= 1");
  if (!(learning_rate > 0.0)) {
    throw ConfigError("training: learning_rate must be > 0");
  }
  if (embedding.window < 1) throw ConfigError("model: window must be >= 1");
  if (duration.mixture_components < 1) {
    throw ConfigError("model: mixture_components must be >= 1");
  }
}

Eigen::VectorXd TrainedPipeline::embedding_for(AgentId id) const {
  if (config.ablation.use_embedding) {
    const auto it = agent_embeddings.find(id);
    if (it != agent_embeddings.end()) return it->second;
  }
  return Eigen::VectorXd::Zero(config.embedding.latent_width);
}

std::vector<TrainingWindow> build_training_windows(
    const MobilityDataset& train, const NormalizationStats& stats,
    int window) {
  std::vector<TrainingWindow> out;
  const int k = stats.vocab_size();
  for (const auto& [id, seq] : train.agents) {
    if (seq.staypoints.empty()) continue;
    const auto n_total = static_cast<Eigen::Index>(seq.staypoints.size());
    for (Eigen::Index start = 0; start < n_total; start += window) {
      const auto len = std::min<Eigen::Index>(window, n_total - start);
      TrainingWindow w;
      w.agent_id = id;
      w.body.resize(len, stats.encoded_width());
      w.t_norms.resize(len);
      w.poi_indices.resize(len);
      w.d_norms.resize(len);
      for (Eigen::Index i = 0; i < len; ++i) {
        const Staypoint& sp = seq.staypoints[start + i];
        const Eigen::VectorXd enc = encode_staypoint(sp, stats);
        w.body.row(i) = enc.transpose();
        w.t_norms[i] = enc[k];
        w.d_norms[i] = enc[k + 1];
        int idx = 0;
        enc.head(k).maxCoeff(&idx);
        w.poi_indices[i] = idx;
      }
      out.push_back(std::move(w));
    }
  }
  return out;
}

namespace {

/// Collects normalized durations and returns (component quantiles, std).
std::pair<Eigen::VectorXd, double> duration_component_init(
    const std::vector<TrainingWindow>& windows, int k_mix) {
  std::vector<double> durations;
  for (const auto& w : windows) {
    for (Eigen::Index i = 0; i < w.d_norms.size(); ++i) {
      durations.push_back(w.d_norms[i]);
    }
  }
  std::sort(durations.begin(), durations.end());
  const auto n = durations.size();
  Eigen::VectorXd quantiles(k_mix);
  for (int k = 0; k < k_mix; ++k) {
    const double q = (k + 0.5) / static_cast<double>(k_mix);
    const auto idx = std::min<std::size_t>(
        n - 1, static_cast<std::size_t>(q * static_cast<double>(n)));
    quantiles[k] = durations[idx];
  }
  double mean = 0.0;
  for (double d : durations) mean += d;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double d : durations) var += (d - mean) * (d - mean);
  var /= static_cast<double>(n);
  const double sigma = std::sqrt(var) / static_cast<double>(k_mix);
  return {quantiles, std::max(sigma, 1e-3)};
}

Matrix onehot_rows(const std::vector<int>& indices, int k, int shift) {
  // shift = 1 builds teacher-forcing rows: row i holds onehot(c_{i-1}).
  const auto n = static_cast<Eigen::Index>(indices.size());
  Matrix m = Matrix::Zero(n, k);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index src = i - shift;
    if (src >= 0) m(i, indices[src]) = 1.0;
  }
  return m;
}

struct WindowLoss {
  double l_ae = 0.0;
  double l_f = 0.0;
  double softmax_dev = 0.0;
};

double max_row_sum_dev(const Matrix& m) {
  double dev = 0.0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    dev = std::max(dev, std::abs(m.row(i).sum() - 1.0));
  }
  return dev;
}

}  // namespace

TrainResult train(const MobilityDataset& train_set,
                  const TrainingConfig& config_in,
                  const BatchObserver& observer) {
  if (train_set.agents.empty()) {
    throw ValidationError("train: empty training set");
  }
  TrainingConfig config = config_in;
  config.validate();

  TrainResult result;
  result.pipeline.stats = fit_normalization(train_set, config.week_anchor);
  const NormalizationStats& stats = result.pipeline.stats;
  const int k = stats.vocab_size();

  config.embedding.input_width = stats.encoded_width();
  config.duration.vocab_size = k;
  config.duration.latent_width = config.embedding.latent_width;

  Rng root(config.seed);
  Rng rng_embed = root.fork(1);
  Rng rng_poi = root.fork(2);
  Rng rng_duration = root.fork(3);
  Rng rng_shuffle = root.fork(4);

  auto embedding = std::make_unique<EmbeddingModel>(config.embedding, rng_embed);
  PoiConfig poi_config{k, config.embedding.latent_width, config.poi_hidden};
  auto poi = std::make_unique<PoiTypeModel>(poi_config, rng_poi);
  auto duration = std::make_unique<DurationModel>(config.duration, rng_duration);

  auto windows =
      build_training_windows(train_set, stats, config.embedding.window);
  if (windows.empty()) throw ValidationError("train: no training windows");

  {
    const auto [quantiles, sigma] =
        duration_component_init(windows, config.duration.mixture_components);
    duration->init_components(quantiles, sigma);
  }

  const AblationSwitches& ab = config.ablation;
  nn::ParamList params;
  if (ab.use_embedding) {
    auto p = embedding->parameters();
    params.insert(params.end(), p.begin(), p.end());
  }
  if (ab.use_poi) {
    auto p = poi->parameters();
    params.insert(params.end(), p.begin(), p.end());
  }
  if (ab.use_duration) {
    auto p = duration->parameters();
    params.insert(params.end(), p.begin(), p.end());
  }

  const bool train_heads = ab.use_poi || ab.use_duration;
  const bool any_training = ab.use_embedding || train_heads;

  nn::Adam optimizer(params, config.learning_rate, config.adam_beta1,
                     config.adam_beta2, config.adam_eps);

  const int dh = config.embedding.latent_width;

  // Evaluates one window on a fresh tape, backpropagating the weighted sum.
  const auto run_window = [&](const TrainingWindow& w, bool ae_phase,
                              bool heads_phase) -> WindowLoss {
    Graph g;
    const auto n = w.body.rows();
    Value body = g.input(w.body);

    Value h;
    if (ab.use_embedding && (ae_phase || !config.staged)) {
      h = embedding->embed_on(g, body);
    } else if (ab.use_embedding) {
      // Staged heads phase: embeddings frozen, no gradient into the AE.
      Matrix hv(1, dh);
      hv.row(0) = embedding->embed(w.body).transpose();
      h = g.input(std::move(hv));
    } else {
      h = g.input(Matrix::Zero(1, dh));
    }

    WindowLoss out;
    Value loss;
    bool have_loss = false;

    if (ab.use_embedding && ae_phase) {
      Value recon = embedding->reconstruct_on(g, h, static_cast<int>(n));
      Value l_ae = g.mean_all(g.square(g.sub(recon, body)));
      out.l_ae = l_ae.scalar();
      loss = g.scale(l_ae, config.w_reconstruction);
      have_loss = true;
    }

    if (heads_phase) {
      Value l_f;
      bool have_f = false;
      if (ab.use_poi) {
        Matrix t_col(n, 1);
        for (Eigen::Index i = 0; i < n; ++i) t_col(i, 0) = w.t_norms[i];
        Value ones = g.input(Matrix::Ones(n, 1));
        Value h_rows = g.matmul(ones, h);
        Value features =
            g.concat_cols({h_rows, g.input(std::move(t_col)),
                           g.input(onehot_rows(w.poi_indices, k, 1))});
        Value dists = poi->distributions_on(g, features);
        out.softmax_dev =
            std::max(out.softmax_dev, max_row_sum_dev(dists.val()));
        Value targets = g.input(onehot_rows(w.poi_indices, k, 0));
        Value nll =
            g.scale(g.sum_all(g.cmul(targets, g.log_floor(dists, 1e-9))), -1.0);
        l_f = nll;
        have_f = true;
      }
      if (ab.use_duration) {
        Matrix t_col(n, 1);
        for (Eigen::Index i = 0; i < n; ++i) t_col(i, 0) = w.t_norms[i];
        Value weights =
            duration->weights_on(g, h, g.input(std::move(t_col)),
                                 g.input(onehot_rows(w.poi_indices, k, 0)));
        out.softmax_dev =
            std::max(out.softmax_dev, max_row_sum_dev(weights.val()));
        Matrix d_col = w.d_norms;
        Value nll = duration->nll_sum_on(g, weights, g.input(std::move(d_col)));
        l_f = have_f ? g.add(l_f, nll) : nll;
        have_f = true;
      }
      if (have_f) {
        out.l_f = l_f.scalar();
        Value weighted = g.scale(l_f, config.w_cascade);
        loss = have_loss ? g.add(loss, weighted) : weighted;
        have_loss = true;
      }
    }

    if (have_loss) g.backward(loss);
    return out;
  };

  std::vector<std::size_t> order(windows.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  const auto shuffle_order = [&] {
    for (std::size_t i = order.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(
          rng_shuffle.uniform_int(0, static_cast<std::int64_t>(i) - 1));
      std::swap(order[i - 1], order[j]);
    }
  };

  const int stage_boundary = config.staged ? (config.epochs + 1) / 2 : 0;

  for (int epoch = 0; epoch < config.epochs && any_training; ++epoch) {
    shuffle_order();
    const bool ae_phase = !config.staged || epoch < stage_boundary;
    const bool heads_phase =
        train_heads && (!config.staged || epoch >= stage_boundary);

    double epoch_ae = 0.0, epoch_f = 0.0;
    int batch_index = 0;
    for (std::size_t begin = 0; begin < order.size();
         begin += static_cast<std::size_t>(config.batch_size), ++batch_index) {
      const std::size_t end = std::min(
          order.size(), begin + static_cast<std::size_t>(config.batch_size));
      const auto count = static_cast<double>(end - begin);

      optimizer.zero_grad();
      BatchLog log;
      log.epoch = epoch;
      log.batch = batch_index;
      for (std::size_t i = begin; i < end; ++i) {
        const WindowLoss wl = run_window(windows[order[i]], ae_phase, heads_phase);
        log.l_ae += wl.l_ae;
        log.l_f += wl.l_f;
        log.max_softmax_dev = std::max(log.max_softmax_dev, wl.softmax_dev);
      }
      log.l_ae /= count;
      log.l_f /= count;
      log.l_total =
          config.w_reconstruction * log.l_ae + config.w_cascade * log.l_f;
      if (!std::isfinite(log.l_total)) {
        throw NumericError(
            "train: non-finite loss at epoch " + std::to_string(epoch) +
            " batch " + std::to_string(batch_index) +
            " (l_ae=" + std::to_string(log.l_ae) +
            ", l_f=" + std::to_string(log.l_f) + ")");
      }
      optimizer.step(1.0 / count);

      epoch_ae += log.l_ae * count;
      epoch_f += log.l_f * count;
      if (observer) observer(log);
      result.batches.push_back(log);
    }

    EpochLog el;
    el.epoch = epoch;
    const auto n_windows = static_cast<double>(order.size());
    el.l_ae = epoch_ae / n_windows;
    el.l_f = epoch_f / n_windows;
    el.l_total = config.w_reconstruction * el.l_ae + config.w_cascade * el.l_f;
    result.epochs.push_back(el);
  }

  if (ab.use_arrival) {
    result.pipeline.arrival = fit_arrival_kde(train_set, config.week_anchor,
                                              config.kde_bandwidth_floor);
  }
  result.pipeline.arrival.bin_width = config.arrival_bin_hours;
  result.pipeline.arrival.clip_floor = config.clip_floor;

  if (ab.use_embedding) {
    result.pipeline.agent_embeddings =
        compute_agent_embeddings(*embedding, train_set, stats);
  }

  result.pipeline.embedding = std::move(embedding);
  result.pipeline.poi = std::move(poi);
  result.pipeline.duration = std::move(duration);
  result.pipeline.config = config;
  return result;
}

}  // namespace bayesic
