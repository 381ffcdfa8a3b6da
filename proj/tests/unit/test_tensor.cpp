#include "doctest.h"

#include <functional>
#include <random>

#include "gem/nn.hpp"
#include "gem/tensor.hpp"

using namespace gem;

namespace {

Mat random_mat(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Mat m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = dist(rng);
  return m;
}

// Central finite differences of a scalar graph w.r.t. one parameter.
double max_relative_grad_error(Var param, const std::function<Var()>& build,
                               double eps = 1e-6) {
  Var loss = build();
  zero_grad({param});
  backward(loss);
  Mat analytic = param.grad();

  double worst = 0.0;
  Mat& value = param.value();
  for (Eigen::Index r = 0; r < value.rows(); ++r) {
    for (Eigen::Index c = 0; c < value.cols(); ++c) {
      const double keep = value(r, c);
      value(r, c) = keep + eps;
      const double up = build().item();
      value(r, c) = keep - eps;
      const double down = build().item();
      value(r, c) = keep;
      const double fd = (up - down) / (2.0 * eps);
      const double denom = std::max({1.0, std::abs(fd), std::abs(analytic(r, c))});
      worst = std::max(worst, std::abs(fd - analytic(r, c)) / denom);
    }
  }
  return worst;
}

}  // namespace

TEST_SUITE("tensor") {

TEST_CASE("matmul/add/gelu chain gradients match finite differences") {
  std::mt19937_64 rng(3);
  Var w = Var::param(random_mat(4, 3, rng));
  Var x = Var::constant(random_mat(5, 4, rng));
  Var mask = Var::constant(random_mat(5, 3, rng));
  auto build = [&]() { return sum(cmul(gelu(matmul(x, w)), mask)); };
  CHECK(max_relative_grad_error(w, build) < 1e-6);
}

TEST_CASE("softmax row gradients match finite differences") {
  std::mt19937_64 rng(4);
  Var logits = Var::param(random_mat(3, 6, rng));
  Var mask = Var::constant(random_mat(3, 6, rng));
  auto build = [&]() { return sum(cmul(softmax_rows(logits), mask)); };
  CHECK(max_relative_grad_error(logits, build) < 1e-6);
}

TEST_CASE("softmax rows sum to one") {
  std::mt19937_64 rng(5);
  Var logits = Var::constant(random_mat(8, 11, rng) * 4.0);
  Mat probs = softmax_rows(logits).value();
  for (Eigen::Index r = 0; r < probs.rows(); ++r)
    CHECK(probs.row(r).sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("layer norm gradients match finite differences") {
  std::mt19937_64 rng(6);
  Var x = Var::param(random_mat(4, 5, rng));
  Var gamma = Var::param(Mat::Ones(1, 5) + 0.3 * random_mat(1, 5, rng));
  Var beta = Var::param(0.1 * random_mat(1, 5, rng));
  Var mask = Var::constant(random_mat(4, 5, rng));
  auto build = [&]() { return sum(cmul(layer_norm_rows(x, gamma, beta), mask)); };
  CHECK(max_relative_grad_error(x, build, 1e-5) < 1e-5);
  CHECK(max_relative_grad_error(gamma, build, 1e-5) < 1e-6);
  CHECK(max_relative_grad_error(beta, build, 1e-5) < 1e-6);
}

TEST_CASE("gather/replace/concat route gradients to the right rows") {
  std::mt19937_64 rng(7);
  Var table = Var::param(random_mat(6, 3, rng));
  Var repl = Var::param(random_mat(2, 3, rng));
  Var mask = Var::constant(random_mat(4, 3, rng));
  auto build = [&]() {
    Var seq = gather_rows(table, {1, 4, 1, 5});
    Var injected = replace_rows(seq, {0, 2}, repl);
    return sum(cmul(injected, mask));
  };
  CHECK(max_relative_grad_error(table, build) < 1e-6);
  CHECK(max_relative_grad_error(repl, build) < 1e-6);

  Var loss = build();
  zero_grad({table, repl});
  backward(loss);
  // rows 1 at positions 0/2 were both replaced, so the table row 1 gets no
  // gradient while rows 4 and 5 do
  CHECK(table.grad().row(1).cwiseAbs().sum() == doctest::Approx(0.0));
  CHECK(table.grad().row(4).cwiseAbs().sum() > 0.0);
  CHECK(table.grad().row(5).cwiseAbs().sum() > 0.0);
}

TEST_CASE("gradients accumulate through shared subgraphs") {
  Var x = Var::param(Mat::Constant(1, 1, 2.0));
  Var y = sadd(smul(x, x), x);  // x^2 + x, dy/dx = 2x + 1 = 5
  backward(y);
  CHECK(x.grad()(0, 0) == doctest::Approx(5.0));
}

TEST_CASE("scalar division backward") {
  Var a = Var::param(Mat::Constant(1, 1, 3.0));
  Var b = Var::param(Mat::Constant(1, 1, 4.0));
  Var q = sdiv(a, b);
  backward(q);
  CHECK(a.grad()(0, 0) == doctest::Approx(0.25));
  CHECK(b.grad()(0, 0) == doctest::Approx(-3.0 / 16.0));
}

TEST_CASE("log_clamped guards against zero") {
  Var p = Var::constant(Mat::Constant(1, 1, 0.0));
  CHECK(std::isfinite(log_clamped(p).item()));
}

TEST_CASE("sqrt_scalar has a zero subgradient at zero") {
  Var a = Var::param(Mat::Constant(1, 1, 0.0));
  Var s = sqrt_scalar(a);
  backward(s);
  CHECK(a.grad()(0, 0) == doctest::Approx(0.0));
}

TEST_CASE("transformer layer output stays finite and differentiable") {
  std::mt19937_64 seeded(9);
  Rng rng(9);
  TransformerLayer layer(8, 2, 16, rng);
  Var x = Var::param(random_mat(5, 8, seeded));
  Var mask = Var::constant(random_mat(5, 8, seeded));
  auto build = [&]() { return sum(cmul(layer.forward(x), mask)); };
  CHECK(std::isfinite(build().item()));
  CHECK(max_relative_grad_error(x, build, 1e-5) < 1e-5);
}

TEST_CASE("AdamW steps reduce a convex objective") {
  Var w = Var::param(Mat::Constant(1, 1, 5.0));
  AdamW opt({w}, 0.1, 0.0);
  double prev = 25.0;
  for (int i = 0; i < 50; ++i) {
    Var loss = smul(w, w);
    opt.zero_grad();
    backward(loss);
    opt.step();
    CHECK(loss.item() <= prev + 1e-9);
    prev = loss.item();
  }
  CHECK(std::abs(w.value()(0, 0)) < 5.0);
}

}  // TEST_SUITE
