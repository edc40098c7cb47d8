#include <cmath>
#include <random>

#include "doctest.h"
#include "f2l/error.hpp"
#include "f2l/tensor.hpp"
#include "oracles.hpp"

using namespace f2l;

namespace {

std::mt19937_64 gen(7);

Tensor leaf(std::size_t r, std::size_t c, double scale = 1.0) {
  return oracle::to_tensor(oracle::random_matrix(gen, r, c, scale), true);
}

void expect_grad_ok(std::vector<Tensor> leaves, const std::function<Tensor()>& f) {
  const auto check = oracle::grad_check(leaves, f);
  CHECK(check.checked > 0);
  CHECK(check.max_rel_error < 1e-6);
}

}  // namespace

TEST_CASE("elementwise ops match finite differences") {
  Tensor x = leaf(3, 4);
  Tensor pos = Tensor::matrix(2, 2, {0.5, 1.5, 2.0, 3.0}, true);
  expect_grad_ok({x}, [&] { return sum(exp(x)); });
  expect_grad_ok({pos}, [&] { return sum(log(pos)); });
  expect_grad_ok({x}, [&] { return sum(sigmoid(x)); });
  expect_grad_ok({x}, [&] { return sum(tanh(x)); });
  expect_grad_ok({x}, [&] { return sum(neg(mul_const(add_const(x, 2.0), 3.0))); });
  expect_grad_ok({x}, [&] { return mean(hadamard(x, x)); });
}

TEST_CASE("relu gradient away from the kink") {
  Tensor x = Tensor::matrix(1, 4, {-2.0, -0.5, 0.5, 2.0}, true);
  expect_grad_ok({x}, [&] { return sum(relu(x)); });
}

TEST_CASE("matrix ops match finite differences") {
  Tensor a = leaf(3, 4), b = leaf(4, 2), bias = leaf(1, 2), c = leaf(3, 4);
  expect_grad_ok({a, b, bias}, [&] { return sum(tanh(add_row_bias(matmul(a, b), bias))); });
  expect_grad_ok({a, c}, [&] { return sum(hadamard(sub(a, c), add(a, c))); });
  expect_grad_ok({a}, [&] { return sum(hadamard(transpose(a), transpose(a))); });
  expect_grad_ok({a, c}, [&] { return sum(tanh(pairwise_sq_dist(a, c))); });
  const std::vector<double> w{0.5, -1.0, 2.0, 0.25, 1, 1, 1, 1, 3, 0, 0, -2};
  expect_grad_ok({a}, [&] { return weighted_sum(tanh(a), w); });
  const std::vector<std::size_t> rows{2, 0, 2}, cols{3, 1};
  expect_grad_ok({a}, [&] { return sum(tanh(gather_rows(a, rows))); });
  expect_grad_ok({a}, [&] { return sum(tanh(gather_cols(a, cols))); });
}

TEST_CASE("softmax family matches finite differences") {
  Tensor x = leaf(3, 5, 2.0);
  const std::vector<double> t{0.6, 0.9, 1.7};
  const std::vector<double> w{1, 0, 0, 0, 2, 0, 1, 0, 0, 0, 0.5, 0, 0, 3, 0};
  expect_grad_ok({x}, [&] { return weighted_sum(softmax_rows(x), w); });
  expect_grad_ok({x}, [&] { return weighted_sum(softmax_rows(x, t), w); });
  expect_grad_ok({x}, [&] { return weighted_sum(log_softmax_rows(x, t), w); });
  expect_grad_ok({x}, [&] { return weighted_sum(l2_normalize_rows(x), w); });
  const std::vector<std::uint8_t> mask{1, 1, 0, 0, 1, 0, 1, 1, 1, 0, 1, 0, 0, 0, 0};
  expect_grad_ok({x}, [&] { return sum(masked_logsumexp_rows(x, mask)); });
}

TEST_CASE("softmax is shift stable and rows sum to one") {
  Tensor x = Tensor::matrix(2, 3, {1000.0, 1001.0, 1002.0, -1000.0, -1000.0, -1000.0});
  Tensor p = softmax_rows(x);
  for (std::size_t r = 0; r < 2; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < 3; ++c) {
      CHECK(std::isfinite(p.at(r, c)));
      s += p.at(r, c);
    }
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(p.at(1, 0) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("shared subexpressions accumulate gradient") {
  Tensor x = Tensor::matrix(1, 1, {3.0}, true);
  Tensor y = hadamard(x, x);
  sum(add(y, y)).backward();
  CHECK(x.grad()[0] == doctest::Approx(12.0));
}

TEST_CASE("graph is consumed by backward") {
  Tensor x = Tensor::matrix(1, 2, {1.0, 2.0}, true);
  Tensor h = tanh(x);
  Tensor loss = sum(h);
  loss.backward();
  CHECK_THROWS_AS(loss.backward(), GraphError);
  CHECK_THROWS_AS(sum(h), GraphError);
}

TEST_CASE("backward needs a scalar") {
  Tensor x = Tensor::matrix(1, 2, {1.0, 2.0}, true);
  CHECK_THROWS_AS(tanh(x).backward(), GraphError);
}

TEST_CASE("detach cuts the gradient path") {
  Tensor x = Tensor::matrix(1, 2, {1.0, 2.0}, true);
  Tensor y = hadamard(x, x.detach());
  sum(y).backward();
  CHECK(x.grad()[0] == doctest::Approx(1.0));
  CHECK(x.grad()[1] == doctest::Approx(2.0));
}

TEST_CASE("non-finite values are rejected") {
  Tensor x = Tensor::matrix(1, 1, {-1.0}, true);
  CHECK_THROWS_AS(log(x), DomainError);
  Tensor big = Tensor::matrix(1, 1, {1000.0});
  CHECK_THROWS_AS(exp(big), NumericError);
  CHECK_THROWS_AS(Tensor::matrix(1, 1, {NAN}), NumericError);
}

TEST_CASE("shape mismatches raise ShapeError") {
  Tensor a = Tensor::zeros({2, 3}), b = Tensor::zeros({2, 3});
  CHECK_THROWS_AS(matmul(a, b), ShapeError);
  CHECK_THROWS_AS(add(a, Tensor::zeros({3, 2})), ShapeError);
  CHECK_THROWS_AS(add_row_bias(a, Tensor::zeros({1, 2})), ShapeError);
  CHECK_THROWS_AS(Tensor({2, 2}, {1.0, 2.0}), ShapeError);
}

TEST_CASE("l2 normalization leaves unit rows unit and guards zero rows") {
  Tensor x = Tensor::matrix(2, 2, {3.0, 4.0, 0.0, 0.0});
  Tensor n = l2_normalize_rows(x);
  CHECK(n.at(0, 0) == doctest::Approx(0.6));
  CHECK(n.at(0, 1) == doctest::Approx(0.8));
  CHECK(n.at(1, 0) == 0.0);
}
