#include "bayesic/nn/layers.hpp"

#include <cmath>

#include "bayesic/errors.hpp"

namespace bayesic::nn {

Matrix xavier_uniform(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      m(i, j) = rng.uniform(-bound, bound);
    }
  }
  return m;
}

Linear::Linear(const std::string& name, Eigen::Index in, Eigen::Index out,
               Rng& rng)
    : w(name + ".w", xavier_uniform(in, out, rng)),
      b(name + ".b", Matrix::Zero(1, out)) {}

Value Linear::operator()(Graph& g, Value x) const {
  return g.add_rowvec(g.matmul(x, g.param(w)),
                      g.param(b));
}

void Linear::collect(ParamList& out) {
  out.push_back(&w);
  out.push_back(&b);
}

LayerNorm::LayerNorm(const std::string& name, Eigen::Index width)
    : gain(name + ".gain", Matrix::Ones(1, width)),
      bias(name + ".bias", Matrix::Zero(1, width)) {}

Value LayerNorm::operator()(Graph& g, Value x) const {
  return g.layer_norm_rows(x, g.param(gain),
                           g.param(bias));
}

void LayerNorm::collect(ParamList& out) {
  out.push_back(&gain);
  out.push_back(&bias);
}

MultiHeadAttention::MultiHeadAttention(const std::string& name,
                                       Eigen::Index width, int heads, Rng& rng)
    : wq(name + ".q", width, width, rng),
      wk(name + ".k", width, width, rng),
      wv(name + ".v", width, width, rng),
      wo(name + ".o", width, width, rng),
      heads(heads),
      model_width(width) {
  if (width % heads != 0) {
    throw ShapeError("attention width " + std::to_string(width) +
                     " not divisible by " + std::to_string(heads) + " heads");
  }
}

Value MultiHeadAttention::operator()(Graph& g, Value query, Value memory,
                                     const Matrix* mask) const {
  const Eigen::Index dk = model_width / heads;
  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(dk));

  Value q = wq(g, query);
  Value k = wk(g, memory);
  Value v = wv(g, memory);

  std::vector<Value> head_outputs;
  head_outputs.reserve(heads);
  for (int h = 0; h < heads; ++h) {
    Value qh = g.slice_cols(q, h * dk, dk);
    Value kh = g.slice_cols(k, h * dk, dk);
    Value vh = g.slice_cols(v, h * dk, dk);
    Value scores = g.scale(g.matmul(qh, g.transpose(kh)), inv_sqrt_dk);
    Value weights = mask ? g.softmax_rows_masked(scores, *mask)
                         : g.softmax_rows(scores);
    head_outputs.push_back(g.matmul(weights, vh));
  }
  return wo(g, g.concat_cols(head_outputs));
}

void MultiHeadAttention::collect(ParamList& out) {
  wq.collect(out);
  wk.collect(out);
  wv.collect(out);
  wo.collect(out);
}

FeedForward::FeedForward(const std::string& name, Eigen::Index width,
                         Eigen::Index hidden, Rng& rng)
    : fc1(name + ".fc1", width, hidden, rng),
      fc2(name + ".fc2", hidden, width, rng) {}

Value FeedForward::operator()(Graph& g, Value x) const {
  return fc2(g, g.gelu_fn(fc1(g, x)));
}

void FeedForward::collect(ParamList& out) {
  fc1.collect(out);
  fc2.collect(out);
}

EncoderLayer::EncoderLayer(const std::string& name, Eigen::Index width,
                           int heads, Eigen::Index ffn_hidden, Rng& rng)
    : attn(name + ".attn", width, heads, rng),
      ffn(name + ".ffn", width, ffn_hidden, rng),
      ln1(name + ".ln1", width),
      ln2(name + ".ln2", width) {}

Value EncoderLayer::operator()(Graph& g, Value x, const Matrix* mask) const {
  Value n1 = ln1(g, x);
  x = g.add(x, attn(g, n1, n1, mask));
  x = g.add(x, ffn(g, ln2(g, x)));
  return x;
}

void EncoderLayer::collect(ParamList& out) {
  attn.collect(out);
  ffn.collect(out);
  ln1.collect(out);
  ln2.collect(out);
}

DecoderLayer::DecoderLayer(const std::string& name, Eigen::Index width,
                           int heads, Eigen::Index ffn_hidden, Rng& rng)
    : self_attn(name + ".self", width, heads, rng),
      cross_attn(name + ".cross", width, heads, rng),
      ffn(name + ".ffn", width, ffn_hidden, rng),
      ln1(name + ".ln1", width),
      ln2(name + ".ln2", width),
      ln3(name + ".ln3", width) {}

Value DecoderLayer::operator()(Graph& g, Value x, Value memory) const {
  Value n1 = ln1(g, x);
  x = g.add(x, self_attn(g, n1, n1));
  x = g.add(x, cross_attn(g, ln2(g, x), memory));
  x = g.add(x, ffn(g, ln3(g, x)));
  return x;
}

void DecoderLayer::collect(ParamList& out) {
  self_attn.collect(out);
  cross_attn.collect(out);
  ffn.collect(out);
  ln1.collect(out);
  ln2.collect(out);
  ln3.collect(out);
}

GruCell::GruCell(const std::string& name, Eigen::Index in, Eigen::Index hidden,
                 Rng& rng)
    : update_x(name + ".zx", in, hidden, rng),
      update_h(name + ".zh", hidden, hidden, rng),
      reset_x(name + ".rx", in, hidden, rng),
      reset_h(name + ".rh", hidden, hidden, rng),
      cand_x(name + ".hx", in, hidden, rng),
      cand_h(name + ".hh", hidden, hidden, rng) {}

Value GruCell::step(Graph& g, Value x, Value h_prev) const {
  Value z = g.sigmoid_fn(g.add(update_x(g, x), update_h(g, h_prev)));
  Value r = g.sigmoid_fn(g.add(reset_x(g, x), reset_h(g, h_prev)));
  Value cand = g.tanh_fn(g.add(cand_x(g, x), cand_h(g, g.cmul(r, h_prev))));
  // h = (1 - z) * h_prev + z * cand
  Value one_minus_z = g.add_scalar(g.scale(z, -1.0), 1.0);
  return g.add(g.cmul(one_minus_z, h_prev), g.cmul(z, cand));
}

void GruCell::collect(ParamList& out) {
  update_x.collect(out);
  update_h.collect(out);
  reset_x.collect(out);
  reset_h.collect(out);
  cand_x.collect(out);
  cand_h.collect(out);
}

Matrix sinusoidal_positional_encoding(Eigen::Index max_len,
                                      Eigen::Index width) {
  Matrix pe(max_len, width);
  for (Eigen::Index pos = 0; pos < max_len; ++pos) {
    for (Eigen::Index i = 0; i < width; i += 2) {
      const double rate =
          std::pow(10000.0, -static_cast<double>(i) / static_cast<double>(width));
      pe(pos, i) = std::sin(static_cast<double>(pos) * rate);
      if (i + 1 < width) pe(pos, i + 1) = std::cos(static_cast<double>(pos) * rate);
    }
  }
  return pe;
}

Adam::Adam(ParamList params, double lr, double beta1, double beta2, double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2),
      eps_(eps) {
  slots_.reserve(params_.size());
  for (Parameter* p : params_) {
    slots_.push_back({Matrix::Zero(p->value.rows(), p->value.cols()),
                      Matrix::Zero(p->value.rows(), p->value.cols())});
  }
}

void Adam::zero_grad() {
  for (Parameter* p : params_) p->zero_grad();
}

void Adam::step(double grad_scale) {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, t_);
  const double bc2 = 1.0 - std::pow(beta2_, t_);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Parameter& p = *params_[i];
    Slot& s = slots_[i];
    const Matrix g = p.grad * grad_scale;
    s.m = beta1_ * s.m + (1.0 - beta1_) * g;
    s.v = (beta2_ * s.v.array() + (1.0 - beta2_) * g.array().square()).matrix();
    const Matrix mhat = s.m / bc1;
    const Matrix vhat = s.v / bc2;
    p.value.array() -= lr_ * mhat.array() / (vhat.array().sqrt() + eps_);
  }
}

}  // namespace bayesic::nn
