#pragma once

#include <functional>
#include <map>
#include <memory>
#include <vector>

#include "bayesic/arrival.hpp"
#include "bayesic/duration.hpp"
#include "bayesic/embedding.hpp"
#include "bayesic/encoding.hpp"
#include "bayesic/poi.hpp"
#include "bayesic/types.hpp"

namespace bayesic {

/// Monday 2025-01-13 00:00 UTC; any Monday 00:00 works.
constexpr std::int64_t kDefaultWeekAnchor = 1736726400;

/// Component switches mirroring the pipeline ablations: a disabled
/// component is left untrained and its probability term is replaced by the
/// constant 1 when scoring. Disabling the embedding freezes h at zero and
/// drops per-agent conditioning from the arrival estimate.
struct AblationSwitches {
  bool use_arrival = true;
  bool use_poi = true;
  bool use_duration = true;
  bool use_embedding = true;
};

struct TrainingConfig {
  std::uint64_t seed = 0;
  int epochs = 20;
  int batch_size = 32;  // windows per optimizer step
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double w_reconstruction = 1.0;
  double w_cascade = 1.0;
  /// Optional two-phase schedule (autoencoder first, heads after); the
  /// default trains everything jointly with gradients flowing into h.
  bool staged = false;
  AblationSwitches ablation;

  EmbeddingConfig embedding;  // input_width filled from the vocabulary
  int poi_hidden = 64;
  DurationConfig duration;  // vocab_size / latent_width filled at train time

  double kde_bandwidth_floor = 0.25;  // hours
  std::int64_t week_anchor = kDefaultWeekAnchor;

  // Scoring-time conversion constants, snapshotted into the pipeline.
  double arrival_bin_hours = 1.0;
  double duration_bin = 0.01;
  double clip_floor = 1e-9;

  void validate() const;
};

/// Everything needed to score: frozen models, normalization, per-agent
/// embeddings and the configuration snapshot.
struct TrainedPipeline {
  NormalizationStats stats;
  std::unique_ptr<EmbeddingModel> embedding;
  std::unique_ptr<PoiTypeModel> poi;
  std::unique_ptr<DurationModel> duration;
  ArrivalTimeModel arrival;
  std::map<AgentId, Eigen::VectorXd> agent_embeddings;
  TrainingConfig config;

  /// Stored embedding, or the zero vector for unseen agents and for the
  /// embedding ablation.
  Eigen::VectorXd embedding_for(AgentId id) const;
};

struct BatchLog {
  int epoch = 0;
  int batch = 0;
  double l_ae = 0.0;     // reconstruction term, mean over batch windows
  double l_f = 0.0;      // cascade term, mean over batch windows
  double l_total = 0.0;  // w_ae * l_ae + w_f * l_f
  /// max |softmax row sum - 1| over POI distributions and mixture weights
  /// seen this batch.
  double max_softmax_dev = 0.0;
};

struct EpochLog {
  int epoch = 0;
  double l_ae = 0.0;  // epoch means
  double l_f = 0.0;
  double l_total = 0.0;
};

struct TrainResult {
  TrainedPipeline pipeline;
  std::vector<BatchLog> batches;
  std::vector<EpochLog> epochs;
};

using BatchObserver = std::function<void(const BatchLog&)>;

/// One encoded training window plus the raw per-step targets.
struct TrainingWindow {
  AgentId agent_id = 0;
  Eigen::MatrixXd body;          // n x (K+2)
  std::vector<double> t_norms;   // n
  std::vector<int> poi_indices;  // n
  Eigen::VectorXd d_norms;       // n
};

std::vector<TrainingWindow> build_training_windows(
    const MobilityDataset& train, const NormalizationStats& stats, int window);

/// Fits normalization, jointly optimizes the autoencoder and both density
/// heads on the combined loss, fits the arrival KDEs closed-form, then
/// freezes per-agent embeddings. Deterministic for a given seed. Throws
/// NumericError if the loss stops being finite.
TrainResult train(const MobilityDataset& train_set, const TrainingConfig& config,
                  const BatchObserver& observer = nullptr);

}  // namespace bayesic
