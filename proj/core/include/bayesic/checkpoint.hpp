#pragma once

#include <string>

#include "bayesic/training.hpp"

namespace bayesic {

/// Writes `<prefix>.bin` (versioned binary: parameters, per-agent
/// embeddings, arrival KDEs; doubles dumped raw for bit-exact round trips)
/// and `<prefix>.json` (hyperparameters, normalization stats, config hash).
void save_checkpoint(const TrainedPipeline& pipeline,
                     const std::string& prefix);

/// Restores a pipeline saved by save_checkpoint. Scores computed from the
/// restored pipeline equal the originals bit for bit.
TrainedPipeline load_checkpoint(const std::string& prefix);

}  // namespace bayesic
