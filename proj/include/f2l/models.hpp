#pragma once

#include <cstdint>

#include "f2l/param_vector.hpp"
#include "f2l/tensor.hpp"

namespace f2l {

// Server-model: q_phi is a two-layer tanh MLP R^d -> R^k, f_phi an affine
// head over all global base classes.
struct ServerArch {
  std::size_t input_dim = 16;
  std::size_t hidden_dim = 32;
  std::size_t num_base_classes = 0;
};

// Client-model: q_psi is one single-head scaled dot-product attention block
// over the episode's server representations (residual, then per-row affine
// + tanh); f_psi is an affine N-way head.
struct ClientArch {
  std::size_t hidden_dim = 32;
  std::size_t num_way = 5;
};

// Rows produced by the server encoder. The client-model only accepts this
// type, so raw features cannot be fed to it by accident.
class ServerRepresentation {
 public:
  explicit ServerRepresentation(Tensor hidden) : hidden_(std::move(hidden)) {}
  const Tensor& tensor() const { return hidden_; }
  ServerRepresentation detach() const { return ServerRepresentation(hidden_.detach()); }

 private:
  Tensor hidden_;
};

struct ServerOutput {
  ServerRepresentation hidden;  // [b x k]
  Tensor logits;                // [b x |C_b|]
};

struct ClientOutput {
  Tensor support_hidden;  // [D x k]
  Tensor query_hidden;    // [Q x k]
  Tensor support_logits;  // [D x N]
  Tensor query_logits;    // [Q x N]
};

// Glorot-uniform weights, zero biases, deterministic in `seed`.
ParamVector init_server_params(const ServerArch& arch, std::uint64_t seed);
ParamVector init_client_params(const ClientArch& arch, std::uint64_t seed);

ServerRepresentation server_encode(const Tensor& features, const ParamVector& params);
ServerOutput server_forward(const Tensor& features, const ParamVector& params);

// Support rows self-attend over the support set; query rows attend over the
// support set only, so queries never influence each other.
ClientOutput client_forward(const ServerRepresentation& support,
                            const ServerRepresentation& query, const ParamVector& params);

}  // namespace f2l
