#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace f2l {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

namespace detail {
struct Node;
}

// Dense row-major tensor of doubles with reverse-mode gradient tracking.
//
// A Tensor is a cheap handle; copies share the same node. Leaves created with
// requires_grad=true accumulate gradients across backward() calls until
// zero_grad(). Intermediate nodes belong to exactly one graph, which is
// consumed by the first backward() through it.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> values, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor scalar(double value);
  static Tensor matrix(std::size_t rows, std::size_t cols,
                       std::vector<double> values, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t size() const;
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> values() const;
  // Writable view; only valid on leaves (parameters and constants).
  std::span<double> mutable_values();
  std::span<const double> grad() const;

  double item() const;
  double at(std::size_t row, std::size_t col) const;

  bool requires_grad() const;
  bool is_leaf() const;
  void zero_grad();

  // Accumulates d(this)/d(leaf) into every reachable leaf's grad.
  void backward() const;

  // Same values, no history, no gradient.
  Tensor detach() const;

  // Identity of the underlying node.
  std::uintptr_t id() const { return reinterpret_cast<std::uintptr_t>(node_.get()); }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  friend struct detail::Node;
  friend class OpBuilder;

  std::shared_ptr<detail::Node> node_;
};

enum class UnaryOp { exp, log, sigmoid, tanh, relu, neg, add_const, mul_const };

// `constant` is used by add_const and mul_const only.
Tensor elementwise(UnaryOp op, const Tensor& x, double constant = 0.0);

Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor relu(const Tensor& x);
Tensor neg(const Tensor& x);
Tensor add_const(const Tensor& x, double c);
Tensor mul_const(const Tensor& x, double c);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor hadamard(const Tensor& a, const Tensor& b);
// a[m x n] + bias[1 x n], bias broadcast over rows.
Tensor add_row_bias(const Tensor& a, const Tensor& bias);

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& x);

// Row-wise softmax of x / temperature[row]; shift-stable.
Tensor softmax_rows(const Tensor& x, std::span<const double> temperature);
Tensor softmax_rows(const Tensor& x);
Tensor log_softmax_rows(const Tensor& x, std::span<const double> temperature);
Tensor log_softmax_rows(const Tensor& x);

// Rows divided by max(norm, 1e-12).
Tensor l2_normalize_rows(const Tensor& x);

// log sum_{c : mask[r*cols+c]} exp(x[r][c]) as an [r x 1] tensor. Every row
// must have at least one selected entry.
Tensor masked_logsumexp_rows(const Tensor& x, std::span<const std::uint8_t> mask);

// Squared Euclidean distances between rows: out[i][j] = |a_i - b_j|^2.
Tensor pairwise_sq_dist(const Tensor& a, const Tensor& b);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
// sum(x .* weights) with constant weights.
Tensor weighted_sum(const Tensor& x, std::span<const double> weights);

Tensor gather_rows(const Tensor& x, std::span<const std::size_t> rows);
Tensor gather_cols(const Tensor& x, std::span<const std::size_t> cols);

}  // namespace f2l
