#include "bayesic/nn/graph.hpp"

#include <cmath>
#include <numbers>

#include "bayesic/errors.hpp"

namespace bayesic::nn {

namespace {

using RowArray = Eigen::Array<double, 1, Eigen::Dynamic>;

void require_same_shape(const Matrix& x, const Matrix& y, const char* op) {
  if (x.rows() != y.rows() || x.cols() != y.cols()) {
    throw ShapeError(std::string(op) + ": shape mismatch " +
                     std::to_string(x.rows()) + "x" + std::to_string(x.cols()) +
                     " vs " + std::to_string(y.rows()) + "x" +
                     std::to_string(y.cols()));
  }
}

Matrix stable_softmax_rows(const Matrix& x) {
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double m = x.row(i).maxCoeff();
    RowArray e = (x.row(i).array() - m).exp();
    out.row(i) = (e / e.sum()).matrix();
  }
  return out;
}

}  // namespace

const Matrix& Value::val() const { return graph->value_of(*this); }

double Value::scalar() const {
  const Matrix& m = val();
  if (m.size() != 1) throw ShapeError("scalar() on non-1x1 value");
  return m(0, 0);
}

int Graph::push(Matrix value, bool needs_grad) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = needs_grad;
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

void Graph::ensure_grad(int id) {
  Node& n = nodes_[id];
  if (n.grad.size() == 0) {
    n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  }
}

void Graph::check_same_graph(Value v) const {
  if (v.graph != this) throw ShapeError("value belongs to another graph");
}

Value Graph::input(Matrix v) { return wrap(push(std::move(v), false)); }

Value Graph::param(const Parameter& p) {
  const int id = push(p.value, true);
  nodes_[id].bound = const_cast<Parameter*>(&p);
  return wrap(id);
}

Value Graph::matmul(Value a, Value b) {
  check_same_graph(a);
  check_same_graph(b);
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: " + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + " * " + std::to_string(b.rows()) +
                     "x" + std::to_string(b.cols()));
  }
  const bool ng = node(a).needs_grad || node(b).needs_grad;
  const int id = push(node(a).value * node(b).value, ng);
  if (ng) {
    nodes_[id].pull = [this, a, b, id] {
      const Matrix& g = nodes_[id].grad;
      if (node(a).needs_grad) {
        ensure_grad(a.id);
        grad(a.id).noalias() += g * node(b).value.transpose();
      }
      if (node(b).needs_grad) {
        ensure_grad(b.id);
        grad(b.id).noalias() += node(a).value.transpose() * g;
      }
    };
  }
  return wrap(id);
}

Value Graph::add(Value a, Value b) {
  check_same_graph(a);
  check_same_graph(b);
  require_same_shape(node(a).value, node(b).value, "add");
  const bool ng = node(a).needs_grad || node(b).needs_grad;
  const int id = push(node(a).value + node(b).value, ng);
  if (ng) {
    nodes_[id].pull = [this, a, b, id] {
      const Matrix& g = nodes_[id].grad;
      if (node(a).needs_grad) {
        ensure_grad(a.id);
        grad(a.id) += g;
      }
      if (node(b).needs_grad) {
        ensure_grad(b.id);
        grad(b.id) += g;
      }
    };
  }
  return wrap(id);
}

Value Graph::sub(Value a, Value b) {
  check_same_graph(a);
  check_same_graph(b);
  require_same_shape(node(a).value, node(b).value, "sub");
  const bool ng = node(a).needs_grad || node(b).needs_grad;
  const int id = push(node(a).value - node(b).value, ng);
  if (ng) {
    nodes_[id].pull = [this, a, b, id] {
      const Matrix& g = nodes_[id].grad;
      if (node(a).needs_grad) {
        ensure_grad(a.id);
        grad(a.id) += g;
      }
      if (node(b).needs_grad) {
        ensure_grad(b.id);
        grad(b.id) -= g;
      }
    };
  }
  return wrap(id);
}

Value Graph::cmul(Value a, Value b) {
  check_same_graph(a);
  check_same_graph(b);
  require_same_shape(node(a).value, node(b).value, "cmul");
  const bool ng = node(a).needs_grad || node(b).needs_grad;
  const int id = push(node(a).value.cwiseProduct(node(b).value), ng);
  if (ng) {
    nodes_[id].pull = [this, a, b, id] {
      const Matrix& g = nodes_[id].grad;
      if (node(a).needs_grad) {
        ensure_grad(a.id);
        grad(a.id) += g.cwiseProduct(node(b).value);
      }
      if (node(b).needs_grad) {
        ensure_grad(b.id);
        grad(b.id) += g.cwiseProduct(node(a).value);
      }
    };
  }
  return wrap(id);
}

Value Graph::scale(Value a, double s) {
  check_same_graph(a);
  const bool ng = node(a).needs_grad;
  const int id = push(node(a).value * s, ng);
  if (ng) {
    nodes_[id].pull = [this, a, id, s] {
      ensure_grad(a.id);
      grad(a.id) += nodes_[id].grad * s;
    };
  }
  return wrap(id);
}

Value Graph::add_scalar(Value a, double s) {
  check_same_graph(a);
  const bool ng = node(a).needs_grad;
  const int id = push((node(a).value.array() + s).matrix(), ng);
  if (ng) {
    nodes_[id].pull = [this, a, id] {
      ensure_grad(a.id);
      grad(a.id) += nodes_[id].grad;
    };
  }
  return wrap(id);
}

Value Graph::add_rowvec(Value a, Value r) {
  check_same_graph(a);
  check_same_graph(r);
  if (node(r).value.rows() != 1 || node(r).value.cols() != node(a).value.cols()) {
    throw ShapeError("add_rowvec: bad row vector shape");
  }
  const bool ng = node(a).needs_grad || node(r).needs_grad;
  Matrix out = node(a).value;
  out.rowwise() += node(r).value.row(0);
  const int id = push(std::move(out), ng);
  if (ng) {
    nodes_[id].pull = [this, a, r, id] {
      const Matrix& g = nodes_[id].grad;
      if (node(a).needs_grad) {
        ensure_grad(a.id);
        grad(a.id) += g;
      }
      if (node(r).needs_grad) {
        ensure_grad(r.id);
        grad(r.id) += g.colwise().sum();
      }
    };
  }
  return wrap(id);
}

Value Graph::cmul_rowvec(Value a, Value r) {
  check_same_graph(a);
  check_same_graph(r);
  if (node(r).value.rows() != 1 || node(r).value.cols() != node(a).value.cols()) {
    throw ShapeError("cmul_rowvec: bad row vector shape");
  }
  const bool ng = node(a).needs_grad || node(r).needs_grad;
  Matrix out =
      (node(a).value.array().rowwise() * node(r).value.row(0).array()).matrix();
  const int id = push(std::move(out), ng);
  if (ng) {
    nodes_[id].pull = [this, a, r, id] {
      const Matrix& g = nodes_[id].grad;
      if (node(a).needs_grad) {
        ensure_grad(a.id);
        grad(a.id).array() += g.array().rowwise() * node(r).value.row(0).array();
      }
      if (node(r).needs_grad) {
        ensure_grad(r.id);
        grad(r.id) += g.cwiseProduct(node(a).value).colwise().sum();
      }
    };
  }
  return wrap(id);
}

Value Graph::div_rowvec(Value a, Value r) {
  check_same_graph(a);
  check_same_graph(r);
  if (node(r).value.rows() != 1 || node(r).value.cols() != node(a).value.cols()) {
    throw ShapeError("div_rowvec: bad row vector shape");
  }
  const bool ng = node(a).needs_grad || node(r).needs_grad;
  Matrix out =
      (node(a).value.array().rowwise() / node(r).value.row(0).array()).matrix();
  const int id = push(std::move(out), ng);
  if (ng) {
    nodes_[id].pull = [this, a, r, id] {
      const Matrix& g = nodes_[id].grad;
      const RowArray rrow = node(r).value.row(0).array();
      if (node(a).needs_grad) {
        ensure_grad(a.id);
        grad(a.id).array() += g.array().rowwise() / rrow;
      }
      if (node(r).needs_grad) {
        ensure_grad(r.id);
        // d/dr_j = -sum_i g_ij * out_ij / r_j
        const Matrix t = g.cwiseProduct(nodes_[id].value);
        grad(r.id).array() -= t.colwise().sum().array() / rrow;
      }
    };
  }
  return wrap(id);
}

Value Graph::outer_sub(Value a, Value b) {
  check_same_graph(a);
  check_same_graph(b);
  if (node(a).value.cols() != 1 || node(b).value.rows() != 1) {
    throw ShapeError("outer_sub: need column vector and row vector");
  }
  const Eigen::Index n = node(a).value.rows();
  const Eigen::Index m = node(b).value.cols();
  const bool ng = node(a).needs_grad || node(b).needs_grad;
  Matrix out = node(a).value.replicate(1, m) - node(b).value.replicate(n, 1);
  const int id = push(std::move(out), ng);
  if (ng) {
    nodes_[id].pull = [this, a, b, id] {
      const Matrix& g = nodes_[id].grad;
      if (node(a).needs_grad) {
        ensure_grad(a.id);
        grad(a.id) += g.rowwise().sum();
      }
      if (node(b).needs_grad) {
        ensure_grad(b.id);
        grad(b.id) -= g.colwise().sum();
      }
    };
  }
  return wrap(id);
}

Value Graph::tanh_fn(Value a) {
  check_same_graph(a);
  const bool ng = node(a).needs_grad;
  const int id = push(node(a).value.array().tanh().matrix(), ng);
  if (ng) {
    nodes_[id].pull = [this, a, id] {
      ensure_grad(a.id);
      const auto y = nodes_[id].value.array();
      grad(a.id).array() += nodes_[id].grad.array() * (1.0 - y * y);
    };
  }
  return wrap(id);
}

Value Graph::sigmoid_fn(Value a) {
  check_same_graph(a);
  const bool ng = node(a).needs_grad;
  Matrix out = (1.0 / (1.0 + (-node(a).value.array()).exp())).matrix();
  const int id = push(std::move(out), ng);
  if (ng) {
    nodes_[id].pull = [this, a, id] {
      ensure_grad(a.id);
      const auto y = nodes_[id].value.array();
      grad(a.id).array() += nodes_[id].grad.array() * y * (1.0 - y);
    };
  }
  return wrap(id);
}

Value Graph::exp_fn(Value a) {
  check_same_graph(a);
  const bool ng = node(a).needs_grad;
  const int id = push(node(a).value.array().exp().matrix(), ng);
  if (ng) {
    nodes_[id].pull = [this, a, id] {
      ensure_grad(a.id);
      grad(a.id).array() += nodes_[id].grad.array() * nodes_[id].value.array();
    };
  }
  return wrap(id);
}

namespace {
double gelu_scalar(double x) {
  return 0.5 * x * (1.0 + std::erf(x * (std::numbers::sqrt2 / 2.0)));
}
double gelu_grad_scalar(double x) {
  constexpr double kInvSqrt2Pi = 0.3989422804014327;  // 1/sqrt(2*pi)
  const double cdf = 0.5 * (1.0 + std::erf(x * (std::numbers::sqrt2 / 2.0)));
  const double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
  return cdf + x * pdf;
}
}  // namespace

Value Graph::gelu_fn(Value a) {
  check_same_graph(a);
  const bool ng = node(a).needs_grad;
  Matrix out = node(a).value.unaryExpr(&gelu_scalar);
  const int id = push(std::move(out), ng);
  if (ng) {
    nodes_[id].pull = [this, a, id] {
      ensure_grad(a.id);
      grad(a.id).array() += nodes_[id].grad.array() *
                            node(a).value.unaryExpr(&gelu_grad_scalar).array();
    };
  }
  return wrap(id);
}

Value Graph::square(Value a) { return cmul(a, a); }

Value Graph::log_floor(Value a, double floor) {
  check_same_graph(a);
  const bool ng = node(a).needs_grad;
  Matrix out = node(a).value.array().max(floor).log().matrix();
  const int id = push(std::move(out), ng);
  if (ng) {
    nodes_[id].pull = [this, a, id, floor] {
      ensure_grad(a.id);
      const auto x = node(a).value.array();
      grad(a.id).array() +=
          nodes_[id].grad.array() * (x > floor).cast<double>() / x.max(floor);
    };
  }
  return wrap(id);
}

Value Graph::max_scalar(Value a, double c) {
  check_same_graph(a);
  const bool ng = node(a).needs_grad;
  const int id = push(node(a).value.array().max(c).matrix(), ng);
  if (ng) {
    nodes_[id].pull = [this, a, id, c] {
      ensure_grad(a.id);
      const auto x = node(a).value.array();
      grad(a.id).array() += nodes_[id].grad.array() * (x > c).cast<double>();
    };
  }
  return wrap(id);
}

Value Graph::softmax_rows(Value a) {
  check_same_graph(a);
  const bool ng = node(a).needs_grad;
  const int id = push(stable_softmax_rows(node(a).value), ng);
  if (ng) {
    nodes_[id].pull = [this, a, id] {
      ensure_grad(a.id);
      const Matrix& y = nodes_[id].value;
      const Matrix& g = nodes_[id].grad;
      for (Eigen::Index i = 0; i < y.rows(); ++i) {
        const double dot = g.row(i).dot(y.row(i));
        grad(a.id).row(i).array() += y.row(i).array() * (g.row(i).array() - dot);
      }
    };
  }
  return wrap(id);
}

Value Graph::softmax_rows_masked(Value a, const Matrix& additive_mask) {
  check_same_graph(a);
  require_same_shape(node(a).value, additive_mask, "softmax_rows_masked");
  const bool ng = node(a).needs_grad;
  const int id = push(stable_softmax_rows(node(a).value + additive_mask), ng);
  if (ng) {
    nodes_[id].pull = [this, a, id] {
      ensure_grad(a.id);
      const Matrix& y = nodes_[id].value;
      const Matrix& g = nodes_[id].grad;
      for (Eigen::Index i = 0; i < y.rows(); ++i) {
        const double dot = g.row(i).dot(y.row(i));
        grad(a.id).row(i).array() += y.row(i).array() * (g.row(i).array() - dot);
      }
    };
  }
  return wrap(id);
}

Value Graph::layer_norm_rows(Value a, Value gain, Value bias, double eps) {
  check_same_graph(a);
  check_same_graph(gain);
  check_same_graph(bias);
  const Eigen::Index m = node(a).value.cols();
  if (node(gain).value.rows() != 1 || node(gain).value.cols() != m ||
      node(bias).value.rows() != 1 || node(bias).value.cols() != m) {
    throw ShapeError("layer_norm_rows: gain/bias must be 1 x cols");
  }
  const Matrix& x = node(a).value;
  Matrix xhat(x.rows(), m);
  Eigen::VectorXd inv_std(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double mu = x.row(i).mean();
    const double var = (x.row(i).array() - mu).square().mean();
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    xhat.row(i) = ((x.row(i).array() - mu) * inv_std[i]).matrix();
  }
  Matrix out = ((xhat.array().rowwise() * node(gain).value.row(0).array())
                    .rowwise() +
                node(bias).value.row(0).array())
                   .matrix();
  const bool ng =
      node(a).needs_grad || node(gain).needs_grad || node(bias).needs_grad;
  const int id = push(std::move(out), ng);
  if (ng) {
    nodes_[id].pull = [this, a, gain, bias, id, xhat = std::move(xhat),
                       inv_std = std::move(inv_std)] {
      const Matrix& g = nodes_[id].grad;
      if (node(gain).needs_grad) {
        ensure_grad(gain.id);
        grad(gain.id) += g.cwiseProduct(xhat).colwise().sum();
      }
      if (node(bias).needs_grad) {
        ensure_grad(bias.id);
        grad(bias.id) += g.colwise().sum();
      }
      if (node(a).needs_grad) {
        ensure_grad(a.id);
        const RowArray grow = node(gain).value.row(0).array();
        for (Eigen::Index i = 0; i < g.rows(); ++i) {
          const RowArray xh = xhat.row(i).array();
          const RowArray dxhat = g.row(i).array() * grow;
          const double mean_dxhat = dxhat.mean();
          const double mean_dxhat_xhat = (dxhat * xh).mean();
          grad(a.id).row(i).array() +=
              inv_std[i] * (dxhat - mean_dxhat - xh * mean_dxhat_xhat);
        }
      }
    };
  }
  return wrap(id);
}

Value Graph::transpose(Value a) {
  check_same_graph(a);
  const bool ng = node(a).needs_grad;
  const int id = push(node(a).value.transpose(), ng);
  if (ng) {
    nodes_[id].pull = [this, a, id] {
      ensure_grad(a.id);
      grad(a.id) += nodes_[id].grad.transpose();
    };
  }
  return wrap(id);
}

Value Graph::concat_rows(const std::vector<Value>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows: empty");
  Eigen::Index rows = 0;
  const Eigen::Index cols = parts[0].cols();
  bool ng = false;
  for (Value p : parts) {
    check_same_graph(p);
    if (p.cols() != cols) throw ShapeError("concat_rows: column mismatch");
    rows += p.rows();
    ng = ng || node(p).needs_grad;
  }
  Matrix out(rows, cols);
  Eigen::Index r = 0;
  for (Value p : parts) {
    out.middleRows(r, p.rows()) = node(p).value;
    r += p.rows();
  }
  const int id = push(std::move(out), ng);
  if (ng) {
    nodes_[id].pull = [this, parts, id] {
      Eigen::Index r = 0;
      for (Value p : parts) {
        if (node(p).needs_grad) {
          ensure_grad(p.id);
          grad(p.id) += nodes_[id].grad.middleRows(r, p.rows());
        }
        r += p.rows();
      }
    };
  }
  return wrap(id);
}

Value Graph::concat_cols(const std::vector<Value>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: empty");
  Eigen::Index cols = 0;
  const Eigen::Index rows = parts[0].rows();
  bool ng = false;
  for (Value p : parts) {
    check_same_graph(p);
    if (p.rows() != rows) throw ShapeError("concat_cols: row mismatch");
    cols += p.cols();
    ng = ng || node(p).needs_grad;
  }
  Matrix out(rows, cols);
  Eigen::Index c = 0;
  for (Value p : parts) {
    out.middleCols(c, p.cols()) = node(p).value;
    c += p.cols();
  }
  const int id = push(std::move(out), ng);
  if (ng) {
    nodes_[id].pull = [this, parts, id] {
      Eigen::Index c = 0;
      for (Value p : parts) {
        if (node(p).needs_grad) {
          ensure_grad(p.id);
          grad(p.id) += nodes_[id].grad.middleCols(c, p.cols());
        }
        c += p.cols();
      }
    };
  }
  return wrap(id);
}

Value Graph::slice_rows(Value a, Eigen::Index start, Eigen::Index count) {
  check_same_graph(a);
  if (start < 0 || count < 0 || start + count > a.rows()) {
    throw ShapeError("slice_rows: out of range");
  }
  const bool ng = node(a).needs_grad;
  const int id = push(node(a).value.middleRows(start, count), ng);
  if (ng) {
    nodes_[id].pull = [this, a, id, start, count] {
      ensure_grad(a.id);
      grad(a.id).middleRows(start, count) += nodes_[id].grad;
    };
  }
  return wrap(id);
}

Value Graph::slice_cols(Value a, Eigen::Index start, Eigen::Index count) {
  check_same_graph(a);
  if (start < 0 || count < 0 || start + count > a.cols()) {
    throw ShapeError("slice_cols: out of range");
  }
  const bool ng = node(a).needs_grad;
  const int id = push(node(a).value.middleCols(start, count), ng);
  if (ng) {
    nodes_[id].pull = [this, a, id, start, count] {
      ensure_grad(a.id);
      grad(a.id).middleCols(start, count) += nodes_[id].grad;
    };
  }
  return wrap(id);
}

Value Graph::row_sum(Value a) {
  check_same_graph(a);
  const bool ng = node(a).needs_grad;
  const int id = push(node(a).value.rowwise().sum(), ng);
  if (ng) {
    nodes_[id].pull = [this, a, id] {
      ensure_grad(a.id);
      grad(a.id).colwise() += nodes_[id].grad.col(0);
    };
  }
  return wrap(id);
}

Value Graph::col_mean(Value a) {
  check_same_graph(a);
  const bool ng = node(a).needs_grad;
  const double inv_n = 1.0 / static_cast<double>(node(a).value.rows());
  const int id = push(node(a).value.colwise().mean(), ng);
  if (ng) {
    nodes_[id].pull = [this, a, id, inv_n] {
      ensure_grad(a.id);
      grad(a.id).rowwise() += (nodes_[id].grad.row(0) * inv_n).eval();
    };
  }
  return wrap(id);
}

Value Graph::sum_all(Value a) {
  check_same_graph(a);
  const bool ng = node(a).needs_grad;
  Matrix out(1, 1);
  out(0, 0) = node(a).value.sum();
  const int id = push(std::move(out), ng);
  if (ng) {
    nodes_[id].pull = [this, a, id] {
      ensure_grad(a.id);
      grad(a.id).array() += nodes_[id].grad(0, 0);
    };
  }
  return wrap(id);
}

Value Graph::mean_all(Value a) {
  check_same_graph(a);
  const bool ng = node(a).needs_grad;
  const double inv_n = 1.0 / static_cast<double>(node(a).value.size());
  Matrix out(1, 1);
  out(0, 0) = node(a).value.mean();
  const int id = push(std::move(out), ng);
  if (ng) {
    nodes_[id].pull = [this, a, id, inv_n] {
      ensure_grad(a.id);
      grad(a.id).array() += nodes_[id].grad(0, 0) * inv_n;
    };
  }
  return wrap(id);
}

Value Graph::pick(Value a, Eigen::Index i, Eigen::Index j) {
  check_same_graph(a);
  if (i < 0 || i >= a.rows() || j < 0 || j >= a.cols()) {
    throw ShapeError("pick: index out of range");
  }
  const bool ng = node(a).needs_grad;
  Matrix out(1, 1);
  out(0, 0) = node(a).value(i, j);
  const int id = push(std::move(out), ng);
  if (ng) {
    nodes_[id].pull = [this, a, id, i, j] {
      ensure_grad(a.id);
      grad(a.id)(i, j) += nodes_[id].grad(0, 0);
    };
  }
  return wrap(id);
}

void Graph::backward(Value root) {
  check_same_graph(root);
  Node& r = nodes_[root.id];
  if (r.value.size() != 1) throw ShapeError("backward: root must be 1x1");
  if (!r.needs_grad) return;
  ensure_grad(root.id);
  r.grad(0, 0) += 1.0;
  for (int i = root.id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (!n.needs_grad || n.grad.size() == 0) continue;
    if (n.pull) n.pull();
    if (n.bound) n.bound->grad += n.grad;
  }
}

}  // namespace bayesic::nn
