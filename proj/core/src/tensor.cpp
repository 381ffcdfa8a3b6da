#include "gem/tensor.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace gem {

Var Var::constant(Mat value) {
  return Var(std::make_shared<Node>(std::move(value), false));
}

Var Var::param(Mat value) {
  return Var(std::make_shared<Node>(std::move(value), true));
}

Var Var::scalar(double value, bool requires_grad) {
  Mat m(1, 1);
  m(0, 0) = value;
  return Var(std::make_shared<Node>(std::move(m), requires_grad));
}

double Var::item() const {
  if (rows() != 1 || cols() != 1) throw std::logic_error("Var::item: not a 1x1 node");
  return node_->value(0, 0);
}

namespace {

Var make_op(Mat value, std::vector<Var> parents, std::function<void(Node&)> backward_fn) {
  bool rg = false;
  for (const auto& p : parents) rg = rg || p.node()->requires_grad;
  auto n = std::make_shared<Node>(std::move(value), rg);
  if (rg) {
    for (auto& p : parents) n->parents.push_back(p.node());
    n->backward_fn = std::move(backward_fn);
  }
  return Var(n);
}

void topo_sort(const NodePtr& root, std::vector<Node*>& order) {
  std::unordered_set<Node*> visited;
  // iterative DFS: graphs can be thousands of nodes deep across a batch
  std::vector<std::pair<Node*, size_t>> stack;
  stack.emplace_back(root.get(), 0);
  visited.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next_child] = stack.back();
    if (next_child < node->parents.size()) {
      Node* child = node->parents[next_child++].get();
      if (child->requires_grad && visited.insert(child).second)
        stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
}

}  // namespace

void backward(const Var& root) {
  if (root.rows() != 1 || root.cols() != 1)
    throw std::logic_error("backward: root must be a 1x1 scalar");
  if (!root.node()->requires_grad) return;

  std::vector<Node*> order;
  topo_sort(root.node(), order);

  root.node()->ensure_grad();
  root.node()->grad(0, 0) += 1.0;

  // order is child-before-parent; traverse in reverse (root first)
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward_fn) {
      for (auto& p : n->parents)
        if (p->requires_grad) p->ensure_grad();
      n->backward_fn(*n);
    }
  }
}

void zero_grad(const std::vector<Var>& params) {
  for (const auto& p : params) p.node()->grad.setZero();
}

// ---------------------------------------------------------------------------
// Ops
// ---------------------------------------------------------------------------

Var add(const Var& a, const Var& b) {
  return make_op(a.value() + b.value(), {a, b}, [a, b](Node& n) {
    if (a.node()->requires_grad) a.node()->grad += n.grad;
    if (b.node()->requires_grad) b.node()->grad += n.grad;
  });
}

Var sub(const Var& a, const Var& b) {
  return make_op(a.value() - b.value(), {a, b}, [a, b](Node& n) {
    if (a.node()->requires_grad) a.node()->grad += n.grad;
    if (b.node()->requires_grad) b.node()->grad -= n.grad;
  });
}

Var cmul(const Var& a, const Var& b) {
  return make_op(a.value().cwiseProduct(b.value()), {a, b}, [a, b](Node& n) {
    if (a.node()->requires_grad) a.node()->grad += n.grad.cwiseProduct(b.value());
    if (b.node()->requires_grad) b.node()->grad += n.grad.cwiseProduct(a.value());
  });
}

Var scale(const Var& a, double s) {
  return make_op(a.value() * s, {a}, [a, s](Node& n) {
    if (a.node()->requires_grad) a.node()->grad += n.grad * s;
  });
}

Var add_rowvec(const Var& a, const Var& row) {
  Mat v = a.value();
  v.rowwise() += row.value().row(0);
  return make_op(std::move(v), {a, row}, [a, row](Node& n) {
    if (a.node()->requires_grad) a.node()->grad += n.grad;
    if (row.node()->requires_grad) row.node()->grad.row(0) += n.grad.colwise().sum();
  });
}

Var matmul(const Var& a, const Var& b) {
  return make_op(a.value() * b.value(), {a, b}, [a, b](Node& n) {
    if (a.node()->requires_grad) a.node()->grad += n.grad * b.value().transpose();
    if (b.node()->requires_grad) b.node()->grad += a.value().transpose() * n.grad;
  });
}

Var transpose(const Var& a) {
  return make_op(a.value().transpose(), {a}, [a](Node& n) {
    if (a.node()->requires_grad) a.node()->grad += n.grad.transpose();
  });
}

Var gelu(const Var& a) {
  constexpr double kInvSqrt2 = 0.7071067811865475244;
  constexpr double kInvSqrt2Pi = 0.3989422804014326779;
  Mat v = a.value().unaryExpr(
      [](double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); });
  return make_op(std::move(v), {a}, [a](Node& n) {
    if (!a.node()->requires_grad) return;
    const Mat& x = a.value();
    Mat d = x.unaryExpr([](double t) {
      return 0.5 * (1.0 + std::erf(t * kInvSqrt2)) +
             t * kInvSqrt2Pi * std::exp(-0.5 * t * t);
    });
    a.node()->grad += n.grad.cwiseProduct(d);
  });
}

Var log_clamped(const Var& a, double floor) {
  Mat v = a.value().unaryExpr([floor](double x) { return std::log(std::max(x, floor)); });
  return make_op(std::move(v), {a}, [a, floor](Node& n) {
    if (!a.node()->requires_grad) return;
    const Mat& x = a.value();
    Mat d = x.unaryExpr([floor](double t) { return 1.0 / std::max(t, floor); });
    a.node()->grad += n.grad.cwiseProduct(d);
  });
}

Var sqrt_scalar(const Var& a) {
  if (a.rows() != 1 || a.cols() != 1) throw std::logic_error("sqrt_scalar: 1x1 expected");
  Mat v(1, 1);
  v(0, 0) = std::sqrt(std::max(a.value()(0, 0), 0.0));
  return make_op(std::move(v), {a}, [a](Node& n) {
    if (!a.node()->requires_grad) return;
    const double s = n.value(0, 0);
    if (s > 0.0) a.node()->grad(0, 0) += n.grad(0, 0) * 0.5 / s;
  });
}

Var softmax_rows(const Var& a) {
  Mat v = a.value();
  for (Eigen::Index r = 0; r < v.rows(); ++r) {
    const double mx = v.row(r).maxCoeff();
    v.row(r) = (v.row(r).array() - mx).exp();
    v.row(r) /= v.row(r).sum();
  }
  return make_op(std::move(v), {a}, [a](Node& n) {
    if (!a.node()->requires_grad) return;
    for (Eigen::Index r = 0; r < n.value.rows(); ++r) {
      const auto y = n.value.row(r).array();
      const auto g = n.grad.row(r).array();
      const double dot = (g * y).sum();
      a.node()->grad.row(r).array() += y * (g - dot);
    }
  });
}

Var layer_norm_rows(const Var& x, const Var& gamma, const Var& beta, double eps) {
  const Mat& xv = x.value();
  const Eigen::Index d = xv.cols();
  Mat xhat(xv.rows(), d);
  Eigen::VectorXd inv_std(xv.rows());
  for (Eigen::Index r = 0; r < xv.rows(); ++r) {
    const double mu = xv.row(r).mean();
    const double var = (xv.row(r).array() - mu).square().sum() / static_cast<double>(d);
    const double is = 1.0 / std::sqrt(var + eps);
    inv_std(r) = is;
    xhat.row(r) = (xv.row(r).array() - mu) * is;
  }
  Mat out = xhat;
  out.array().rowwise() *= gamma.value().row(0).array();
  out.rowwise() += beta.value().row(0);

  return make_op(std::move(out), {x, gamma, beta},
                 [x, gamma, beta, xhat, inv_std, d](Node& n) {
    for (Eigen::Index r = 0; r < n.value.rows(); ++r) {
      const auto g = n.grad.row(r).array();
      const auto xh = xhat.row(r).array();
      if (gamma.node()->requires_grad)
        gamma.node()->grad.row(0).array() += g * xh;
      if (beta.node()->requires_grad)
        beta.node()->grad.row(0).array() += g;
      if (x.node()->requires_grad) {
        const auto gy = g * gamma.value().row(0).array();  // dL/dxhat
        const double m1 = gy.sum() / static_cast<double>(d);
        const double m2 = (gy * xh).sum() / static_cast<double>(d);
        x.node()->grad.row(r).array() += inv_std(r) * (gy - m1 - xh * m2);
      }
    }
  });
}

Var sum(const Var& a) {
  Mat v(1, 1);
  v(0, 0) = a.value().sum();
  return make_op(std::move(v), {a}, [a](Node& n) {
    if (a.node()->requires_grad) a.node()->grad.array() += n.grad(0, 0);
  });
}

Var mean(const Var& a) {
  const double inv = 1.0 / static_cast<double>(a.value().size());
  Mat v(1, 1);
  v(0, 0) = a.value().sum() * inv;
  return make_op(std::move(v), {a}, [a, inv](Node& n) {
    if (a.node()->requires_grad) a.node()->grad.array() += n.grad(0, 0) * inv;
  });
}

Var slice_rows(const Var& a, Eigen::Index start, Eigen::Index n_rows) {
  return make_op(a.value().middleRows(start, n_rows), {a}, [a, start, n_rows](Node& n) {
    if (a.node()->requires_grad)
      a.node()->grad.middleRows(start, n_rows) += n.grad;
  });
}

Var slice_cols(const Var& a, Eigen::Index start, Eigen::Index n_cols) {
  return make_op(a.value().middleCols(start, n_cols), {a}, [a, start, n_cols](Node& n) {
    if (a.node()->requires_grad)
      a.node()->grad.middleCols(start, n_cols) += n.grad;
  });
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::logic_error("concat_rows: empty input");
  Eigen::Index rows = 0;
  for (const auto& p : parts) rows += p.rows();
  Mat v(rows, parts[0].cols());
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    v.middleRows(at, p.rows()) = p.value();
    at += p.rows();
  }
  return make_op(std::move(v), parts, [parts](Node& n) {
    Eigen::Index at = 0;
    for (const auto& p : parts) {
      if (p.node()->requires_grad)
        p.node()->grad += n.grad.middleRows(at, p.rows());
      at += p.rows();
    }
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::logic_error("concat_cols: empty input");
  Eigen::Index cols = 0;
  for (const auto& p : parts) cols += p.cols();
  Mat v(parts[0].rows(), cols);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    v.middleCols(at, p.cols()) = p.value();
    at += p.cols();
  }
  return make_op(std::move(v), parts, [parts](Node& n) {
    Eigen::Index at = 0;
    for (const auto& p : parts) {
      if (p.node()->requires_grad)
        p.node()->grad += n.grad.middleCols(at, p.cols());
      at += p.cols();
    }
  });
}

Var gather_rows(const Var& table, const std::vector<int>& ids) {
  Mat v(static_cast<Eigen::Index>(ids.size()), table.cols());
  for (size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= table.rows())
      throw std::out_of_range("gather_rows: id out of range");
    v.row(static_cast<Eigen::Index>(i)) = table.value().row(ids[i]);
  }
  return make_op(std::move(v), {table}, [table, ids](Node& n) {
    if (!table.node()->requires_grad) return;
    for (size_t i = 0; i < ids.size(); ++i)
      table.node()->grad.row(ids[i]) += n.grad.row(static_cast<Eigen::Index>(i));
  });
}

Var gather_cols_row(const Var& row, const std::vector<int>& ids) {
  if (row.rows() != 1) throw std::logic_error("gather_cols_row: 1xM input expected");
  Mat v(1, static_cast<Eigen::Index>(ids.size()));
  for (size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= row.cols())
      throw std::out_of_range("gather_cols_row: id out of range");
    v(0, static_cast<Eigen::Index>(i)) = row.value()(0, ids[i]);
  }
  return make_op(std::move(v), {row}, [row, ids](Node& n) {
    if (!row.node()->requires_grad) return;
    for (size_t i = 0; i < ids.size(); ++i)
      row.node()->grad(0, ids[i]) += n.grad(0, static_cast<Eigen::Index>(i));
  });
}

Var replace_rows(const Var& seq, const std::vector<int>& positions, const Var& rows) {
  if (static_cast<Eigen::Index>(positions.size()) != rows.rows())
    throw std::logic_error("replace_rows: positions/rows size mismatch");
  Mat v = seq.value();
  for (size_t i = 0; i < positions.size(); ++i) {
    if (positions[i] < 0 || positions[i] >= seq.rows())
      throw std::out_of_range("replace_rows: position out of range");
    v.row(positions[i]) = rows.value().row(static_cast<Eigen::Index>(i));
  }
  return make_op(std::move(v), {seq, rows}, [seq, rows, positions](Node& n) {
    if (seq.node()->requires_grad) {
      Mat g = n.grad;
      for (int p : positions) g.row(p).setZero();
      seq.node()->grad += g;
    }
    if (rows.node()->requires_grad) {
      for (size_t i = 0; i < positions.size(); ++i)
        rows.node()->grad.row(static_cast<Eigen::Index>(i)) += n.grad.row(positions[i]);
    }
  });
}

namespace {

void expect_scalar(const Var& a, const char* op) {
  if (a.rows() != 1 || a.cols() != 1)
    throw std::logic_error(std::string(op) + ": 1x1 operands expected");
}

}  // namespace

Var smul(const Var& a, const Var& b) {
  expect_scalar(a, "smul");
  expect_scalar(b, "smul");
  return cmul(a, b);
}

Var sadd(const Var& a, const Var& b) {
  expect_scalar(a, "sadd");
  expect_scalar(b, "sadd");
  return add(a, b);
}

Var ssub(const Var& a, const Var& b) {
  expect_scalar(a, "ssub");
  expect_scalar(b, "ssub");
  return sub(a, b);
}

Var sdiv(const Var& a, const Var& b) {
  expect_scalar(a, "sdiv");
  expect_scalar(b, "sdiv");
  Mat v(1, 1);
  v(0, 0) = a.value()(0, 0) / b.value()(0, 0);
  return make_op(std::move(v), {a, b}, [a, b](Node& n) {
    const double bv = b.value()(0, 0);
    if (a.node()->requires_grad) a.node()->grad(0, 0) += n.grad(0, 0) / bv;
    if (b.node()->requires_grad)
      b.node()->grad(0, 0) -= n.grad(0, 0) * a.value()(0, 0) / (bv * bv);
  });
}

Var sconst_sub(double c, const Var& a) {
  return make_op(Mat::Constant(a.rows(), a.cols(), c) - a.value(), {a}, [a](Node& n) {
    if (a.node()->requires_grad) a.node()->grad -= n.grad;
  });
}

}  // namespace gem
