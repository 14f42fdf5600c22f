#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace bayesic::nn {

using Matrix = Eigen::MatrixXd;

/// A trainable tensor: value plus accumulated gradient.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter() = default;
  Parameter(std::string n, Matrix v)
      : name(std::move(n)), value(std::move(v)) {
    grad = Matrix::Zero(value.rows(), value.cols());
  }

  void zero_grad() { grad.setZero(); }
  Eigen::Index size() const { return value.size(); }
};

class Graph;

/// Handle to a node on a Graph tape.
struct Value {
  Graph* graph = nullptr;
  int id = -1;

  bool valid() const { return graph != nullptr && id >= 0; }
  const Matrix& val() const;
  Eigen::Index rows() const { return val().rows(); }
  Eigen::Index cols() const { return val().cols(); }
  double scalar() const;
};

/// Reverse-mode tape over dense matrices. One Graph per forward pass;
/// backward() walks the tape once and accumulates into Parameter::grad.
///
/// Usage:
///   Graph g;
///   Value x = g.input(data);
///   Value w = g.param(weights);
///   Value loss = g.mean_all(g.square(g.sub(g.matmul(x, w), target)));
///   g.backward(loss);
class Graph {
 public:
  Graph() { nodes_.reserve(512); }
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  /// Constant leaf; no gradient flows into it.
  Value input(Matrix v);
  /// Trainable leaf; backward() adds into p.grad. Forward-only passes never
  /// touch the parameter, so frozen models may be used through const refs.
  Value param(const Parameter& p);

  Value matmul(Value a, Value b);
  Value add(Value a, Value b);
  Value sub(Value a, Value b);
  Value cmul(Value a, Value b);
  Value scale(Value a, double s);
  Value add_scalar(Value a, double s);

  /// a (n x m) + row r (1 x m), broadcast over rows.
  Value add_rowvec(Value a, Value r);
  Value cmul_rowvec(Value a, Value r);
  Value div_rowvec(Value a, Value r);
  /// c_ij = a_i - b_j for column a (n x 1) and row b (1 x m).
  Value outer_sub(Value a, Value b);

  Value tanh_fn(Value a);
  Value sigmoid_fn(Value a);
  Value exp_fn(Value a);
  Value gelu_fn(Value a);
  Value square(Value a);
  /// log(max(a, floor)) elementwise; zero gradient where the floor binds.
  Value log_floor(Value a, double floor);
  /// max(a, c) elementwise; zero gradient where clamped.
  Value max_scalar(Value a, double c);

  /// Row-wise softmax (numerically stable).
  Value softmax_rows(Value a);
  /// Softmax of (a + mask); mask uses large negatives to disable entries.
  Value softmax_rows_masked(Value a, const Matrix& additive_mask);

  /// Row-wise layer normalization with learnable gain/bias (1 x m).
  Value layer_norm_rows(Value a, Value gain, Value bias, double eps = 1e-5);

  Value transpose(Value a);
  Value concat_rows(const std::vector<Value>& parts);
  Value concat_cols(const std::vector<Value>& parts);
  Value slice_rows(Value a, Eigen::Index start, Eigen::Index count);
  Value slice_cols(Value a, Eigen::Index start, Eigen::Index count);

  Value row_sum(Value a);   // n x m -> n x 1
  Value col_mean(Value a);  // n x m -> 1 x m
  Value sum_all(Value a);   // -> 1 x 1
  Value mean_all(Value a);  // -> 1 x 1
  Value pick(Value a, Eigen::Index i, Eigen::Index j);  // -> 1 x 1

  /// Seeds d(root)/d(root) = 1 and propagates. `root` must be 1 x 1.
  void backward(Value root);

  const Matrix& value_of(Value v) const { return nodes_[v.id].value; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool needs_grad = false;
    Parameter* bound = nullptr;
    std::function<void()> pull;  // adds this node's grad into its parents
  };

  int push(Matrix value, bool needs_grad);
  Node& node(Value v) { return nodes_[v.id]; }
  Matrix& grad(int id) { return nodes_[id].grad; }
  void ensure_grad(int id);
  Value wrap(int id) { return Value{this, id}; }
  void check_same_graph(Value v) const;

  std::vector<Node> nodes_;
};

}  // namespace bayesic::nn
