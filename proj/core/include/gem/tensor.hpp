#pragma once

#include <Eigen/Core>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace gem {

using Mat = Eigen::MatrixXd;

// ---------------------------------------------------------------------------
// Reverse-mode autodiff over dense double matrices. Each op builds a node in
// a DAG; backward() runs one topological sweep from a scalar seed. Sized for
// the small graphs this project needs, not for large-scale training.
// ---------------------------------------------------------------------------

struct Node;
using NodePtr = std::shared_ptr<Node>;

struct Node {
  Mat value;
  Mat grad;
  bool requires_grad = false;
  std::vector<NodePtr> parents;
  std::function<void(Node&)> backward_fn;

  Node(Mat v, bool rg) : value(std::move(v)), requires_grad(rg) {}

  void ensure_grad() {
    if (grad.rows() != value.rows() || grad.cols() != value.cols())
      grad = Mat::Zero(value.rows(), value.cols());
  }
};

class Var {
 public:
  Var() = default;
  explicit Var(NodePtr n) : node_(std::move(n)) {}

  static Var constant(Mat value);
  static Var param(Mat value);  // tracked by the optimizer
  static Var scalar(double value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Mat& value() const { return node_->value; }
  Mat& value() { return node_->value; }
  const Mat& grad() const { return node_->grad; }
  bool requires_grad() const { return node_->requires_grad; }
  double item() const;  // value of a 1x1 node

  Eigen::Index rows() const { return node_->value.rows(); }
  Eigen::Index cols() const { return node_->value.cols(); }

  NodePtr node() const { return node_; }

 private:
  NodePtr node_;
};

// Seeds `root` (must be 1x1) with gradient 1 and back-propagates through the
// graph. Gradients accumulate; call zero_grad between backward passes.
void backward(const Var& root);
void zero_grad(const std::vector<Var>& params);

// --- elementwise / shape ops -----------------------------------------------
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var cmul(const Var& a, const Var& b);            // elementwise product
Var scale(const Var& a, double s);
Var add_rowvec(const Var& a, const Var& row);    // broadcast 1xM over NxM
Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);
Var gelu(const Var& a);
Var log_clamped(const Var& a, double floor = 1e-12);
Var sqrt_scalar(const Var& a);                   // 1x1, safe subgradient at 0
Var softmax_rows(const Var& a);
Var layer_norm_rows(const Var& x, const Var& gamma, const Var& beta, double eps = 1e-5);

// --- reductions --------------------------------------------------------------
Var sum(const Var& a);                            // -> 1x1
Var mean(const Var& a);                           // -> 1x1

// --- indexing ----------------------------------------------------------------
Var slice_rows(const Var& a, Eigen::Index start, Eigen::Index n);
Var slice_cols(const Var& a, Eigen::Index start, Eigen::Index n);
Var concat_rows(const std::vector<Var>& parts);
Var concat_cols(const std::vector<Var>& parts);
Var gather_rows(const Var& table, const std::vector<int>& ids);
Var gather_cols_row(const Var& row, const std::vector<int>& ids);  // 1xM -> 1x|ids|
// Replaces rows of `seq` at `positions` with the rows of `rows` (in order);
// grads flow to both inputs.
Var replace_rows(const Var& seq, const std::vector<int>& positions, const Var& rows);

// --- 1x1 scalar arithmetic ---------------------------------------------------
Var smul(const Var& a, const Var& b);
Var sdiv(const Var& a, const Var& b);
Var sadd(const Var& a, const Var& b);
Var ssub(const Var& a, const Var& b);
Var sconst_sub(double c, const Var& a);           // c - a, elementwise

}  // namespace gem
