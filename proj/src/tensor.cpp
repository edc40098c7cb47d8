#include "f2l/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "f2l/error.hpp"

namespace f2l {

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;
  bool requires_grad = false;
  bool leaf = true;
  bool consumed = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this node's grad and accumulates into the parents' grads.
  std::function<void(const Node&)> backward;
};

}  // namespace detail

using detail::Node;

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

namespace {

constexpr double kNormEpsilon = 1e-12;

void check_finite(std::span<const double> values, const char* what) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      std::ostringstream os;
      os << what << ": non-finite value at index " << i;
      throw NumericError(os.str());
    }
  }
}

void require_matrix(const Tensor& x, const char* op) {
  if (x.rank() != 2) {
    throw ShapeError(std::string(op) + ": expected a matrix, got " +
                     shape_string(x.shape()));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) +
                     " vs " + shape_string(b.shape()));
  }
}

std::vector<double> row_temperatures(std::span<const double> temperature,
                                     std::size_t rows, const char* op) {
  if (temperature.size() != rows) {
    throw ShapeError(std::string(op) + ": " + std::to_string(temperature.size()) +
                     " temperatures for " + std::to_string(rows) + " rows");
  }
  std::vector<double> t(temperature.begin(), temperature.end());
  for (std::size_t r = 0; r < rows; ++r) {
    if (!(t[r] > 0.0) || !std::isfinite(t[r])) {
      throw DomainError(std::string(op) + ": temperature must be positive (row " +
                        std::to_string(r) + ")");
    }
  }
  return t;
}

}  // namespace

// Creates op results and wires the backward closure.
class OpBuilder {
 public:
  using Backward = std::function<void(const Node& out)>;

  static Tensor make(Shape shape, std::vector<double> value,
                     std::initializer_list<const Tensor*> inputs, const char* op,
                     Backward backward) {
    check_finite(value, op);
    auto node = std::make_shared<Node>();
    node->shape = std::move(shape);
    node->value = std::move(value);
    node->leaf = false;
    for (const Tensor* in : inputs) {
      const auto& n = in->node_;
      if (n->consumed) {
        throw GraphError(std::string(op) +
                         ": input belongs to a graph already consumed by backward()");
      }
      if (n->requires_grad) node->requires_grad = true;
    }
    if (node->requires_grad) {
      for (const Tensor* in : inputs) node->parents.push_back(in->node_);
      node->grad.assign(node->value.size(), 0.0);
      node->backward = std::move(backward);
    }
    return Tensor(std::move(node));
  }

  static Node& node(const Tensor& t) { return *t.node_; }
};

namespace {

Node& N(const Tensor& t) { return OpBuilder::node(t); }

// Grad buffer of an input, or nullptr when it does not take gradients.
double* grad_of(Node& n) { return n.requires_grad ? n.grad.data() : nullptr; }

}  // namespace

Tensor::Tensor(Shape shape, std::vector<double> values, bool requires_grad) {
  if (shape_size(shape) != values.size()) {
    throw ShapeError("Tensor: " + std::to_string(values.size()) +
                     " values for shape " + shape_string(shape));
  }
  check_finite(values, "Tensor");
  node_ = std::make_shared<Node>();
  node_->shape = std::move(shape);
  node_->value = std::move(values);
  node_->grad.assign(node_->value.size(), 0.0);
  node_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  const std::size_t n = shape_size(shape);
  return Tensor(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
}

Tensor Tensor::scalar(double value) { return Tensor({}, {value}); }

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values,
                      bool requires_grad) {
  return Tensor({rows, cols}, std::move(values), requires_grad);
}

const Shape& Tensor::shape() const { return node_->shape; }
std::size_t Tensor::size() const { return node_->value.size(); }

std::size_t Tensor::rows() const {
  require_matrix(*this, "rows");
  return node_->shape[0];
}

std::size_t Tensor::cols() const {
  require_matrix(*this, "cols");
  return node_->shape[1];
}

std::span<const double> Tensor::values() const { return node_->value; }

std::span<double> Tensor::mutable_values() {
  if (!node_->leaf) throw GraphError("mutable_values: tensor is not a leaf");
  return node_->value;
}

std::span<const double> Tensor::grad() const { return node_->grad; }

double Tensor::item() const {
  if (size() != 1) {
    throw ShapeError("item: tensor of shape " + shape_string(shape()) +
                     " is not a scalar");
  }
  return node_->value[0];
}

double Tensor::at(std::size_t row, std::size_t col) const {
  return node_->value[row * cols() + col];
}

bool Tensor::requires_grad() const { return node_->requires_grad; }
bool Tensor::is_leaf() const { return node_->leaf; }

void Tensor::zero_grad() { std::fill(node_->grad.begin(), node_->grad.end(), 0.0); }

Tensor Tensor::detach() const { return Tensor(shape(), node_->value, false); }

void Tensor::backward() const {
  if (size() != 1) {
    throw GraphError("backward: loss must be a scalar, got shape " +
                     shape_string(shape()));
  }
  if (node_->consumed) {
    throw GraphError("backward: graph already consumed; re-run the forward pass");
  }
  if (!node_->requires_grad) return;

  // Iterative post-order DFS gives a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack{{node_.get(), 0}};
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->parents.size()) {
      Node* p = n->parents[next++].get();
      if (p->requires_grad && visited.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  node_->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward) n->backward(*n);
  }
  for (Node* n : order) {
    if (n->leaf) {
      check_finite(n->grad, "backward");
    } else {
      n->parents.clear();
      n->backward = nullptr;
      n->consumed = true;
    }
  }
}

// ---------------------------------------------------------------------------
// Elementwise

Tensor elementwise(UnaryOp op, const Tensor& x, double constant) {
  const auto in = x.values();
  std::vector<double> out(in.size());
  const char* name = "elementwise";
  switch (op) {
    case UnaryOp::exp:
      name = "exp";
      for (std::size_t i = 0; i < in.size(); ++i) out[i] = std::exp(in[i]);
      break;
    case UnaryOp::log:
      name = "log";
      for (std::size_t i = 0; i < in.size(); ++i) {
        if (!(in[i] > 0.0)) {
          throw DomainError("log: non-positive input " + std::to_string(in[i]) +
                            " at index " + std::to_string(i));
        }
        out[i] = std::log(in[i]);
      }
      break;
    case UnaryOp::sigmoid:
      name = "sigmoid";
      for (std::size_t i = 0; i < in.size(); ++i) {
        out[i] = in[i] >= 0.0 ? 1.0 / (1.0 + std::exp(-in[i]))
                              : std::exp(in[i]) / (1.0 + std::exp(in[i]));
      }
      break;
    case UnaryOp::tanh:
      name = "tanh";
      for (std::size_t i = 0; i < in.size(); ++i) out[i] = std::tanh(in[i]);
      break;
    case UnaryOp::relu:
      name = "relu";
      for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
      break;
    case UnaryOp::neg:
      name = "neg";
      for (std::size_t i = 0; i < in.size(); ++i) out[i] = -in[i];
      break;
    case UnaryOp::add_const:
      name = "add_const";
      for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] + constant;
      break;
    case UnaryOp::mul_const:
      name = "mul_const";
      for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] * constant;
      break;
  }
  auto xn = &N(x);
  return OpBuilder::make(x.shape(), std::move(out), {&x}, name,
                         [xn, op, constant](const Node& o) {
                           double* gx = xn->grad.data();
                           const auto& g = o.grad;
                           const auto& y = o.value;
                           const auto& v = xn->value;
                           for (std::size_t i = 0; i < g.size(); ++i) {
                             double d = 0.0;
                             switch (op) {
                               case UnaryOp::exp: d = y[i]; break;
                               case UnaryOp::log: d = 1.0 / v[i]; break;
                               case UnaryOp::sigmoid: d = y[i] * (1.0 - y[i]); break;
                               case UnaryOp::tanh: d = 1.0 - y[i] * y[i]; break;
                               case UnaryOp::relu: d = v[i] > 0.0 ? 1.0 : 0.0; break;
                               case UnaryOp::neg: d = -1.0; break;
                               case UnaryOp::add_const: d = 1.0; break;
                               case UnaryOp::mul_const: d = constant; break;
                             }
                             gx[i] += g[i] * d;
                           }
                         });
}

Tensor exp(const Tensor& x) { return elementwise(UnaryOp::exp, x); }
Tensor log(const Tensor& x) { return elementwise(UnaryOp::log, x); }
Tensor sigmoid(const Tensor& x) { return elementwise(UnaryOp::sigmoid, x); }
Tensor tanh(const Tensor& x) { return elementwise(UnaryOp::tanh, x); }
Tensor relu(const Tensor& x) { return elementwise(UnaryOp::relu, x); }
Tensor neg(const Tensor& x) { return elementwise(UnaryOp::neg, x); }
Tensor add_const(const Tensor& x, double c) { return elementwise(UnaryOp::add_const, x, c); }
Tensor mul_const(const Tensor& x, double c) { return elementwise(UnaryOp::mul_const, x, c); }

// ---------------------------------------------------------------------------
// Binary

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] + b.values()[i];
  auto an = &N(a), bn = &N(b);
  return OpBuilder::make(a.shape(), std::move(out), {&a, &b}, "add",
                         [an, bn](const Node& o) {
                           double* ga = grad_of(*an);
                           double* gb = grad_of(*bn);
                           for (std::size_t i = 0; i < o.grad.size(); ++i) {
                             if (ga) ga[i] += o.grad[i];
                             if (gb) gb[i] += o.grad[i];
                           }
                         });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] - b.values()[i];
  auto an = &N(a), bn = &N(b);
  return OpBuilder::make(a.shape(), std::move(out), {&a, &b}, "sub",
                         [an, bn](const Node& o) {
                           double* ga = grad_of(*an);
                           double* gb = grad_of(*bn);
                           for (std::size_t i = 0; i < o.grad.size(); ++i) {
                             if (ga) ga[i] += o.grad[i];
                             if (gb) gb[i] -= o.grad[i];
                           }
                         });
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "hadamard");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * b.values()[i];
  auto an = &N(a), bn = &N(b);
  return OpBuilder::make(a.shape(), std::move(out), {&a, &b}, "hadamard",
                         [an, bn](const Node& o) {
                           double* ga = grad_of(*an);
                           double* gb = grad_of(*bn);
                           for (std::size_t i = 0; i < o.grad.size(); ++i) {
                             if (ga) ga[i] += o.grad[i] * bn->value[i];
                             if (gb) gb[i] += o.grad[i] * an->value[i];
                           }
                         });
}

Tensor add_row_bias(const Tensor& a, const Tensor& bias) {
  require_matrix(a, "add_row_bias");
  require_matrix(bias, "add_row_bias");
  const std::size_t m = a.rows(), n = a.cols();
  if (bias.rows() != 1 || bias.cols() != n) {
    throw ShapeError("add_row_bias: bias " + shape_string(bias.shape()) +
                     " does not match " + shape_string(a.shape()));
  }
  std::vector<double> out(a.values().begin(), a.values().end());
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < n; ++c) out[r * n + c] += bias.values()[c];
  auto an = &N(a), bn = &N(bias);
  return OpBuilder::make(a.shape(), std::move(out), {&a, &bias}, "add_row_bias",
                         [an, bn, m, n](const Node& o) {
                           double* ga = grad_of(*an);
                           double* gb = grad_of(*bn);
                           for (std::size_t r = 0; r < m; ++r) {
                             for (std::size_t c = 0; c < n; ++c) {
                               const double g = o.grad[r * n + c];
                               if (ga) ga[r * n + c] += g;
                               if (gb) gb[c] += g;
                             }
                           }
                         });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) {
    throw ShapeError("matmul: inner dimensions differ, " + shape_string(a.shape()) +
                     " x " + shape_string(b.shape()));
  }
  const auto av = a.values();
  const auto bv = b.values();
  std::vector<double> out(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = av[i * k + p];
      for (std::size_t j = 0; j < n; ++j) out[i * n + j] += aip * bv[p * n + j];
    }
  }
  auto an = &N(a), bn = &N(b);
  return OpBuilder::make({m, n}, std::move(out), {&a, &b}, "matmul",
                         [an, bn, m, k, n](const Node& o) {
                           const auto& g = o.grad;
                           if (double* ga = grad_of(*an)) {
                             // dA = G * B^T
                             for (std::size_t i = 0; i < m; ++i)
                               for (std::size_t p = 0; p < k; ++p) {
                                 double s = 0.0;
                                 for (std::size_t j = 0; j < n; ++j)
                                   s += g[i * n + j] * bn->value[p * n + j];
                                 ga[i * k + p] += s;
                               }
                           }
                           if (double* gb = grad_of(*bn)) {
                             // dB = A^T * G
                             for (std::size_t i = 0; i < m; ++i)
                               for (std::size_t p = 0; p < k; ++p) {
                                 const double aip = an->value[i * k + p];
                                 for (std::size_t j = 0; j < n; ++j)
                                   gb[p * n + j] += aip * g[i * n + j];
                               }
                           }
                         });
}

Tensor transpose(const Tensor& x) {
  require_matrix(x, "transpose");
  const std::size_t m = x.rows(), n = x.cols();
  std::vector<double> out(m * n);
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < n; ++c) out[c * m + r] = x.values()[r * n + c];
  auto xn = &N(x);
  return OpBuilder::make({n, m}, std::move(out), {&x}, "transpose",
                         [xn, m, n](const Node& o) {
                           for (std::size_t r = 0; r < m; ++r)
                             for (std::size_t c = 0; c < n; ++c)
                               xn->grad[r * n + c] += o.grad[c * m + r];
                         });
}

// ---------------------------------------------------------------------------
// Row-wise normalizations

Tensor softmax_rows(const Tensor& x, std::span<const double> temperature) {
  require_matrix(x, "softmax_rows");
  const std::size_t r = x.rows(), c = x.cols();
  auto t = row_temperatures(temperature, r, "softmax_rows");
  const auto v = x.values();
  std::vector<double> out(r * c);
  for (std::size_t i = 0; i < r; ++i) {
    const double* row = v.data() + i * c;
    const double mx = *std::max_element(row, row + c);
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      out[i * c + j] = std::exp((row[j] - mx) / t[i]);
      z += out[i * c + j];
    }
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] /= z;
  }
  auto xn = &N(x);
  return OpBuilder::make(x.shape(), std::move(out), {&x}, "softmax_rows",
                         [xn, r, c, t = std::move(t)](const Node& o) {
                           for (std::size_t i = 0; i < r; ++i) {
                             const double* y = o.value.data() + i * c;
                             const double* g = o.grad.data() + i * c;
                             double dot = 0.0;
                             for (std::size_t j = 0; j < c; ++j) dot += g[j] * y[j];
                             for (std::size_t j = 0; j < c; ++j)
                               xn->grad[i * c + j] += y[j] * (g[j] - dot) / t[i];
                           }
                         });
}

Tensor softmax_rows(const Tensor& x) {
  std::vector<double> ones(x.rank() == 2 ? x.rows() : 0, 1.0);
  return softmax_rows(x, ones);
}

Tensor log_softmax_rows(const Tensor& x, std::span<const double> temperature) {
  require_matrix(x, "log_softmax_rows");
  const std::size_t r = x.rows(), c = x.cols();
  auto t = row_temperatures(temperature, r, "log_softmax_rows");
  const auto v = x.values();
  std::vector<double> out(r * c);
  for (std::size_t i = 0; i < r; ++i) {
    const double* row = v.data() + i * c;
    const double mx = *std::max_element(row, row + c);
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) z += std::exp((row[j] - mx) / t[i]);
    const double lz = std::log(z);
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] = (row[j] - mx) / t[i] - lz;
  }
  auto xn = &N(x);
  return OpBuilder::make(x.shape(), std::move(out), {&x}, "log_softmax_rows",
                         [xn, r, c, t = std::move(t)](const Node& o) {
                           for (std::size_t i = 0; i < r; ++i) {
                             const double* y = o.value.data() + i * c;
                             const double* g = o.grad.data() + i * c;
                             double gs = 0.0;
                             for (std::size_t j = 0; j < c; ++j) gs += g[j];
                             for (std::size_t j = 0; j < c; ++j)
                               xn->grad[i * c + j] += (g[j] - std::exp(y[j]) * gs) / t[i];
                           }
                         });
}

Tensor log_softmax_rows(const Tensor& x) {
  std::vector<double> ones(x.rank() == 2 ? x.rows() : 0, 1.0);
  return log_softmax_rows(x, ones);
}

Tensor l2_normalize_rows(const Tensor& x) {
  require_matrix(x, "l2_normalize_rows");
  const std::size_t r = x.rows(), c = x.cols();
  const auto v = x.values();
  std::vector<double> norms(r);
  std::vector<double> out(r * c);
  for (std::size_t i = 0; i < r; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < c; ++j) s += v[i * c + j] * v[i * c + j];
    norms[i] = std::max(std::sqrt(s), kNormEpsilon);
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] = v[i * c + j] / norms[i];
  }
  auto xn = &N(x);
  return OpBuilder::make(x.shape(), std::move(out), {&x}, "l2_normalize_rows",
                         [xn, r, c, norms = std::move(norms)](const Node& o) {
                           for (std::size_t i = 0; i < r; ++i) {
                             const double* y = o.value.data() + i * c;
                             const double* g = o.grad.data() + i * c;
                             // Below the guard the norm is a constant.
                             const bool guarded = norms[i] == kNormEpsilon;
                             double dot = 0.0;
                             if (!guarded)
                               for (std::size_t j = 0; j < c; ++j) dot += y[j] * g[j];
                             for (std::size_t j = 0; j < c; ++j)
                               xn->grad[i * c + j] += (g[j] - y[j] * dot) / norms[i];
                           }
                         });
}

Tensor masked_logsumexp_rows(const Tensor& x, std::span<const std::uint8_t> mask) {
  require_matrix(x, "masked_logsumexp_rows");
  const std::size_t r = x.rows(), c = x.cols();
  if (mask.size() != r * c) throw ShapeError("masked_logsumexp_rows: mask size mismatch");
  const auto v = x.values();
  std::vector<double> out(r);
  for (std::size_t i = 0; i < r; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < c; ++j)
      if (mask[i * c + j]) mx = std::max(mx, v[i * c + j]);
    if (!std::isfinite(mx)) {
      throw DomainError("masked_logsumexp_rows: row " + std::to_string(i) +
                        " selects no entries");
    }
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j)
      if (mask[i * c + j]) z += std::exp(v[i * c + j] - mx);
    out[i] = mx + std::log(z);
  }
  auto xn = &N(x);
  std::vector<std::uint8_t> m(mask.begin(), mask.end());
  return OpBuilder::make({r, 1}, std::move(out), {&x}, "masked_logsumexp_rows",
                         [xn, r, c, m = std::move(m)](const Node& o) {
                           for (std::size_t i = 0; i < r; ++i) {
                             const double lse = o.value[i];
                             for (std::size_t j = 0; j < c; ++j) {
                               if (!m[i * c + j]) continue;
                               xn->grad[i * c + j] +=
                                   o.grad[i] * std::exp(xn->value[i * c + j] - lse);
                             }
                           }
                         });
}

Tensor pairwise_sq_dist(const Tensor& a, const Tensor& b) {
  require_matrix(a, "pairwise_sq_dist");
  require_matrix(b, "pairwise_sq_dist");
  const std::size_t m = a.rows(), n = b.rows(), k = a.cols();
  if (b.cols() != k) {
    throw ShapeError("pairwise_sq_dist: " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  }
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) {
        const double d = a.values()[i * k + p] - b.values()[j * k + p];
        s += d * d;
      }
      out[i * n + j] = s;
    }
  auto an = &N(a), bn = &N(b);
  return OpBuilder::make({m, n}, std::move(out), {&a, &b}, "pairwise_sq_dist",
                         [an, bn, m, n, k](const Node& o) {
                           double* ga = grad_of(*an);
                           double* gb = grad_of(*bn);
                           for (std::size_t i = 0; i < m; ++i)
                             for (std::size_t j = 0; j < n; ++j) {
                               const double g = 2.0 * o.grad[i * n + j];
                               for (std::size_t p = 0; p < k; ++p) {
                                 const double d = an->value[i * k + p] - bn->value[j * k + p];
                                 if (ga) ga[i * k + p] += g * d;
                                 if (gb) gb[j * k + p] -= g * d;
                               }
                             }
                         });
}

// ---------------------------------------------------------------------------
// Reductions and indexing

Tensor sum(const Tensor& x) {
  double s = 0.0;
  for (double v : x.values()) s += v;
  auto xn = &N(x);
  return OpBuilder::make({}, {s}, {&x}, "sum", [xn](const Node& o) {
    for (double& g : xn->grad) g += o.grad[0];
  });
}

Tensor mean(const Tensor& x) {
  if (x.size() == 0) throw ShapeError("mean: empty tensor");
  return mul_const(sum(x), 1.0 / static_cast<double>(x.size()));
}

Tensor weighted_sum(const Tensor& x, std::span<const double> weights) {
  if (weights.size() != x.size()) {
    throw ShapeError("weighted_sum: " + std::to_string(weights.size()) +
                     " weights for " + shape_string(x.shape()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) s += x.values()[i] * weights[i];
  auto xn = &N(x);
  std::vector<double> w(weights.begin(), weights.end());
  return OpBuilder::make({}, {s}, {&x}, "weighted_sum",
                         [xn, w = std::move(w)](const Node& o) {
                           for (std::size_t i = 0; i < w.size(); ++i)
                             xn->grad[i] += o.grad[0] * w[i];
                         });
}

Tensor gather_rows(const Tensor& x, std::span<const std::size_t> rows) {
  require_matrix(x, "gather_rows");
  const std::size_t c = x.cols();
  std::vector<double> out;
  out.reserve(rows.size() * c);
  for (std::size_t r : rows) {
    if (r >= x.rows()) throw ShapeError("gather_rows: row index out of range");
    for (std::size_t j = 0; j < c; ++j) out.push_back(x.values()[r * c + j]);
  }
  auto xn = &N(x);
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  return OpBuilder::make({idx.size(), c}, std::move(out), {&x}, "gather_rows",
                         [xn, c, idx = std::move(idx)](const Node& o) {
                           for (std::size_t i = 0; i < idx.size(); ++i)
                             for (std::size_t j = 0; j < c; ++j)
                               xn->grad[idx[i] * c + j] += o.grad[i * c + j];
                         });
}

Tensor gather_cols(const Tensor& x, std::span<const std::size_t> cols) {
  require_matrix(x, "gather_cols");
  const std::size_t r = x.rows(), c = x.cols(), n = cols.size();
  for (std::size_t j : cols)
    if (j >= c) throw ShapeError("gather_cols: column index out of range");
  std::vector<double> out(r * n);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = x.values()[i * c + cols[j]];
  auto xn = &N(x);
  std::vector<std::size_t> idx(cols.begin(), cols.end());
  return OpBuilder::make({r, n}, std::move(out), {&x}, "gather_cols",
                         [xn, r, c, idx = std::move(idx)](const Node& o) {
                           const std::size_t n = idx.size();
                           for (std::size_t i = 0; i < r; ++i)
                             for (std::size_t j = 0; j < n; ++j)
                               xn->grad[i * c + idx[j]] += o.grad[i * n + j];
                         });
}

}  // namespace f2l
