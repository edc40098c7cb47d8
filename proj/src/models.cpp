#include "f2l/models.hpp"

#include <cmath>

#include "f2l/error.hpp"
#include "f2l/rng.hpp"

namespace f2l {

namespace {

Tensor glorot(std::size_t fan_in, std::size_t fan_out, std::uint64_t seed) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Rng rng(seed);
  std::vector<double> w(fan_in * fan_out);
  for (auto& v : w) v = rng.uniform(-limit, limit);
  return Tensor::matrix(fan_in, fan_out, std::move(w), true);
}

Tensor zero_bias(std::size_t n) { return Tensor::zeros({1, n}, true); }

void require_positive(std::size_t v, const char* what) {
  if (v == 0) throw std::invalid_argument(std::string(what) + " must be positive");
}

Tensor affine(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  return add_row_bias(matmul(x, weight), bias);
}

}  // namespace

ParamVector init_server_params(const ServerArch& arch, std::uint64_t seed) {
  require_positive(arch.input_dim, "input_dim");
  require_positive(arch.hidden_dim, "hidden_dim");
  require_positive(arch.num_base_classes, "num_base_classes");
  const std::size_t d = arch.input_dim, k = arch.hidden_dim, c = arch.num_base_classes;
  ParamVector p;
  p.add("server.enc1.weight", glorot(d, k, derive_seed(seed, {0})));
  p.add("server.enc1.bias", zero_bias(k));
  p.add("server.enc2.weight", glorot(k, k, derive_seed(seed, {2})));
  p.add("server.enc2.bias", zero_bias(k));
  p.add("server.head.weight", glorot(k, c, derive_seed(seed, {4})));
  p.add("server.head.bias", zero_bias(c));
  return p;
}

ParamVector init_client_params(const ClientArch& arch, std::uint64_t seed) {
  require_positive(arch.hidden_dim, "hidden_dim");
  require_positive(arch.num_way, "num_way");
  const std::size_t k = arch.hidden_dim, n = arch.num_way;
  ParamVector p;
  p.add("client.attn.query", glorot(k, k, derive_seed(seed, {0})));
  p.add("client.attn.key", glorot(k, k, derive_seed(seed, {1})));
  p.add("client.attn.value", glorot(k, k, derive_seed(seed, {2})));
  p.add("client.proj.weight", glorot(k, k, derive_seed(seed, {3})));
  p.add("client.proj.bias", zero_bias(k));
  p.add("client.head.weight", glorot(k, n, derive_seed(seed, {5})));
  p.add("client.head.bias", zero_bias(n));
  return p;
}

ServerRepresentation server_encode(const Tensor& features, const ParamVector& params) {
  const Tensor& w1 = params.at("server.enc1.weight");
  if (features.rank() != 2 || features.cols() != w1.rows()) {
    throw ShapeError("server_forward: features " + shape_string(features.shape()) +
                     " do not match input dimension " + std::to_string(w1.rows()));
  }
  Tensor h = tanh(affine(features, w1, params.at("server.enc1.bias")));
  h = tanh(affine(h, params.at("server.enc2.weight"), params.at("server.enc2.bias")));
  return ServerRepresentation(std::move(h));
}

ServerOutput server_forward(const Tensor& features, const ParamVector& params) {
  ServerRepresentation h = server_encode(features, params);
  Tensor logits = affine(h.tensor(), params.at("server.head.weight"), params.at("server.head.bias"));
  return {std::move(h), std::move(logits)};
}

namespace {

// Attention of `from` rows over the rows that produced `keys`/`values`,
// followed by residual, affine and tanh.
Tensor attend(const Tensor& from, const Tensor& keys, const Tensor& values,
              const ParamVector& params, double scale) {
  Tensor queries = matmul(from, params.at("client.attn.query"));
  Tensor scores = mul_const(matmul(queries, transpose(keys)), scale);
  Tensor mixed = add(from, matmul(softmax_rows(scores), values));
  return tanh(affine(mixed, params.at("client.proj.weight"), params.at("client.proj.bias")));
}

}  // namespace

ClientOutput client_forward(const ServerRepresentation& support,
                            const ServerRepresentation& query, const ParamVector& params) {
  const Tensor& hs = support.tensor();
  const Tensor& hq = query.tensor();
  if (hs.rank() != 2 || hs.rows() == 0) throw ShapeError("client_forward: empty support set");
  const std::size_t k = params.at("client.attn.query").rows();
  if (hs.cols() != k || (hq.rank() == 2 && hq.cols() != k)) {
    throw ShapeError("client_forward: representations must have width " + std::to_string(k));
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(k));
  Tensor keys = matmul(hs, params.at("client.attn.key"));
  Tensor values = matmul(hs, params.at("client.attn.value"));

  ClientOutput out;
  out.support_hidden = attend(hs, keys, values, params, scale);
  out.query_hidden = attend(hq, keys, values, params, scale);
  const Tensor& w = params.at("client.head.weight");
  const Tensor& b = params.at("client.head.bias");
  out.support_logits = affine(out.support_hidden, w, b);
  out.query_logits = affine(out.query_hidden, w, b);
  return out;
}

}  // namespace f2l
