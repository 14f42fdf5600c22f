#pragma once

#include <string>
#include <vector>

#include "bayesic/nn/graph.hpp"
#include "bayesic/rng.hpp"

namespace bayesic::nn {

/// Collects raw pointers to every Parameter of a module, in a fixed order.
using ParamList = std::vector<Parameter*>;

Matrix xavier_uniform(Eigen::Index rows, Eigen::Index cols, Rng& rng);

/// Affine map x -> x W + b for row-major activations (n x in -> n x out).
struct Linear {
  Parameter w;  // in x out
  Parameter b;  // 1 x out

  Linear() = default;
  Linear(const std::string& name, Eigen::Index in, Eigen::Index out, Rng& rng);
  Value operator()(Graph& g, Value x) const;
  void collect(ParamList& out);
};

struct LayerNorm {
  Parameter gain;  // 1 x width, ones
  Parameter bias;  // 1 x width, zeros

  LayerNorm() = default;
  LayerNorm(const std::string& name, Eigen::Index width);
  Value operator()(Graph& g, Value x) const;
  void collect(ParamList& out);
};

/// Multi-head scaled dot-product attention. Query and memory widths equal
/// the model width; `mask`, when given, is added to every head's score
/// matrix (query rows x key cols; use large negatives to hide keys).
struct MultiHeadAttention {
  Linear wq, wk, wv, wo;
  int heads = 1;
  Eigen::Index model_width = 0;

  MultiHeadAttention() = default;
  MultiHeadAttention(const std::string& name, Eigen::Index width, int heads,
                     Rng& rng);
  Value operator()(Graph& g, Value query, Value memory,
                   const Matrix* mask = nullptr) const;
  void collect(ParamList& out);
};

/// Two-layer GELU feed-forward block.
struct FeedForward {
  Linear fc1, fc2;

  FeedForward() = default;
  FeedForward(const std::string& name, Eigen::Index width,
              Eigen::Index hidden, Rng& rng);
  Value operator()(Graph& g, Value x) const;
  void collect(ParamList& out);
};

/// Pre-norm transformer encoder layer: x + Attn(LN(x)), then x + FFN(LN(x)).
struct EncoderLayer {
  MultiHeadAttention attn;
  FeedForward ffn;
  LayerNorm ln1, ln2;

  EncoderLayer() = default;
  EncoderLayer(const std::string& name, Eigen::Index width, int heads,
               Eigen::Index ffn_hidden, Rng& rng);
  Value operator()(Graph& g, Value x, const Matrix* mask = nullptr) const;
  void collect(ParamList& out);
};

/// Pre-norm transformer decoder layer with cross-attention to `memory`.
struct DecoderLayer {
  MultiHeadAttention self_attn;
  MultiHeadAttention cross_attn;
  FeedForward ffn;
  LayerNorm ln1, ln2, ln3;

  DecoderLayer() = default;
  DecoderLayer(const std::string& name, Eigen::Index width, int heads,
               Eigen::Index ffn_hidden, Rng& rng);
  Value operator()(Graph& g, Value x, Value memory) const;
  void collect(ParamList& out);
};

/// Gated recurrent cell. step() maps (x: 1 x in, h: 1 x hidden) to the next
/// hidden state (1 x hidden).
struct GruCell {
  Linear update_x, update_h;  // z gate
  Linear reset_x, reset_h;    // r gate
  Linear cand_x, cand_h;      // candidate state

  GruCell() = default;
  GruCell(const std::string& name, Eigen::Index in, Eigen::Index hidden,
          Rng& rng);
  Value step(Graph& g, Value x, Value h_prev) const;
  void collect(ParamList& out);
};

/// Sinusoidal positional encoding table, rows 0..max_len-1.
Matrix sinusoidal_positional_encoding(Eigen::Index max_len, Eigen::Index width);

/// Adam optimizer over a fixed parameter list.
class Adam {
 public:
  Adam(ParamList params, double lr, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8);

  void zero_grad();
  /// Applies one update from the accumulated gradients (optionally scaled).
  void step(double grad_scale = 1.0);
  double learning_rate() const { return lr_; }

 private:
  struct Slot {
    Matrix m, v;
  };
  ParamList params_;
  std::vector<Slot> slots_;
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
};

}  // namespace bayesic::nn
