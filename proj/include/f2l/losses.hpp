#pragma once

#include <span>
#include <vector>

#include "f2l/tensor.hpp"

namespace f2l {

// Mean over rows of -log softmax(logits)[label].
Tensor cross_entropy(const Tensor& logits, std::span<const int> labels);

// Same-class confidence weights over a support set of size D.
//   w[i][j] = p_i(y_j) / sum_{k in C(j)} p_k(y_j)   for i in C(j), else 0
// where C(j) holds the support indices sharing y_j and p_i are the
// client-model's class probabilities. Constants: no gradient.
struct MiWeights {
  std::size_t size = 0;
  std::vector<double> weights;  // row-major D x D, weights[i * D + j]
  std::vector<int> labels;      // local label of each support row

  double at(std::size_t i, std::size_t j) const { return weights[i * size + j]; }
};

MiWeights mi_weights(const Tensor& client_support_probs, std::span<const int> labels);

// Transfer loss between server and client support representations:
//   (1/D) sum_j sum_{i in C(j)} [ -w_ij s(i,j) + w_ij log sum_{k in C(i)} exp s(i,k) ]
// with s(i,j) the dot product of the l2-normalized rows h_server_i and
// h_client_j. Gradient reaches `h_server` only.
Tensor mi_loss(const Tensor& h_server, const Tensor& h_client, const MiWeights& weights);

// Per-query distillation temperatures
//   T_i = sigmoid(exp(max_{c != y_i} z_i(c) - z_i(y_i)))
// with the exponent clamped to [-50, 50]. Constants.
struct TemperatureVector {
  std::vector<double> values;
};

TemperatureVector adaptive_temperature(const Tensor& server_task_logits,
                                       std::span<const int> labels);

// Partial distillation over the task's N classes:
//   -(1/Q) sum_i sum_j q_server_i(c_j) log q_client_i(c_j)
// with both q's a softmax at temperature T_i. Gradient reaches
// `client_logits` only.
Tensor kd_loss(const Tensor& server_task_logits, const Tensor& client_logits,
               const TemperatureVector& temperatures);

struct ServerLoss {
  Tensor total;  // (1 - lambda_mi) * ce + lambda_mi * mi
  double ce = 0.0;
  double mi = 0.0;
};

ServerLoss server_loss(const Tensor& server_support_logits, std::span<const int> base_labels,
                       const Tensor& h_server, const Tensor& h_client,
                       const MiWeights& weights, double lambda_mi);

struct ClientLoss {
  Tensor total;  // (1 - lambda_kd) * ce + lambda_kd * kd
  double ce = 0.0;
  double kd = 0.0;
};

ClientLoss client_loss(const Tensor& client_query_logits, std::span<const int> local_labels,
                       const Tensor& server_task_logits, double lambda_kd);

}  // namespace f2l
