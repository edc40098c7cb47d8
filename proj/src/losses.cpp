#include "f2l/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "f2l/error.hpp"

namespace f2l {

namespace {

void check_labels(std::span<const int> labels, std::size_t rows, std::size_t classes,
                  const char* op) {
  if (labels.size() != rows) {
    throw ShapeError(std::string(op) + ": " + std::to_string(labels.size()) +
                     " labels for " + std::to_string(rows) + " rows");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= classes) {
      throw DomainError(std::string(op) + ": label " + std::to_string(labels[i]) +
                        " at row " + std::to_string(i) + " outside [0, " +
                        std::to_string(classes) + ")");
    }
  }
}

void check_lambda(double lambda, const char* name) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw DomainError(std::string(name) + " must lie in [0, 1], got " + std::to_string(lambda));
  }
}

}  // namespace

Tensor cross_entropy(const Tensor& logits, std::span<const int> labels) {
  if (logits.rank() != 2 || logits.rows() == 0) {
    throw ShapeError("cross_entropy: expected non-empty [b x c] logits");
  }
  const std::size_t b = logits.rows(), c = logits.cols();
  check_labels(labels, b, c, "cross_entropy");
  std::vector<double> pick(b * c, 0.0);
  for (std::size_t i = 0; i < b; ++i) pick[i * c + static_cast<std::size_t>(labels[i])] = 1.0;
  return mul_const(weighted_sum(log_softmax_rows(logits), pick), -1.0 / static_cast<double>(b));
}

MiWeights mi_weights(const Tensor& client_support_probs, std::span<const int> labels) {
  const Tensor& p = client_support_probs;
  if (p.rank() != 2) throw ShapeError("mi_weights: expected [D x N] probabilities");
  const std::size_t d = p.rows(), n = p.cols();
  check_labels(labels, d, n, "mi_weights");

  MiWeights w;
  w.size = d;
  w.labels.assign(labels.begin(), labels.end());
  w.weights.assign(d * d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    const auto yj = static_cast<std::size_t>(labels[j]);
    double denom = 0.0;
    for (std::size_t k = 0; k < d; ++k)
      if (labels[k] == labels[j]) denom += p.at(k, yj);
    if (!(denom > 0.0)) {
      throw DomainError("mi_weights: degenerate confidence, class " + std::to_string(yj) +
                        " has zero total probability");
    }
    for (std::size_t i = 0; i < d; ++i)
      if (labels[i] == labels[j]) w.weights[i * d + j] = p.at(i, yj) / denom;
  }
  return w;
}

Tensor mi_loss(const Tensor& h_server, const Tensor& h_client, const MiWeights& weights) {
  if (h_server.rank() != 2 || h_server.shape() != h_client.shape()) {
    throw ShapeError("mi_loss: representation shapes differ, " + shape_string(h_server.shape()) +
                     " vs " + shape_string(h_client.shape()));
  }
  const std::size_t d = h_server.rows();
  if (weights.size != d) {
    throw ShapeError("mi_loss: weights for " + std::to_string(weights.size) +
                     " samples, representations have " + std::to_string(d));
  }
  Tensor server_unit = l2_normalize_rows(h_server);
  Tensor client_unit = l2_normalize_rows(h_client.detach());
  // sim[i][k] = h_server_i . h_client_k
  Tensor sim = matmul(server_unit, transpose(client_unit));

  std::vector<std::uint8_t> same_class(d * d, 0);
  std::vector<double> row_weight(d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t k = 0; k < d; ++k) {
      same_class[i * d + k] = weights.labels[i] == weights.labels[k];
      row_weight[i] += weights.weights[i * d + k];
    }
  }
  Tensor aligned = weighted_sum(sim, weights.weights);
  Tensor normalizer = weighted_sum(masked_logsumexp_rows(sim, same_class), row_weight);
  return mul_const(sub(normalizer, aligned), 1.0 / static_cast<double>(d));
}

TemperatureVector adaptive_temperature(const Tensor& server_task_logits,
                                       std::span<const int> labels) {
  const Tensor& z = server_task_logits;
  if (z.rank() != 2) throw ShapeError("adaptive_temperature: expected [Q x N] logits");
  const std::size_t q = z.rows(), n = z.cols();
  if (n < 2) throw DomainError("adaptive_temperature: need at least one negative class (N >= 2)");
  check_labels(labels, q, n, "adaptive_temperature");

  TemperatureVector t;
  t.values.resize(q);
  for (std::size_t i = 0; i < q; ++i) {
    const auto y = static_cast<std::size_t>(labels[i]);
    double best_negative = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < n; ++c)
      if (c != y) best_negative = std::max(best_negative, z.at(i, c));
    const double exponent = std::clamp(best_negative - z.at(i, y), -50.0, 50.0);
    const double ratio = std::exp(exponent);
    t.values[i] = 1.0 / (1.0 + std::exp(-ratio));
  }
  return t;
}

Tensor kd_loss(const Tensor& server_task_logits, const Tensor& client_logits,
               const TemperatureVector& temperatures) {
  if (server_task_logits.rank() != 2 || server_task_logits.shape() != client_logits.shape()) {
    throw ShapeError("kd_loss: logit shapes differ, " + shape_string(server_task_logits.shape()) +
                     " vs " + shape_string(client_logits.shape()));
  }
  const std::size_t q = client_logits.rows();
  if (q == 0) throw ShapeError("kd_loss: empty query set");
  Tensor soft_target = softmax_rows(server_task_logits.detach(), temperatures.values);
  Tensor log_student = log_softmax_rows(client_logits, temperatures.values);
  return mul_const(weighted_sum(log_student, soft_target.values()), -1.0 / static_cast<double>(q));
}

ServerLoss server_loss(const Tensor& server_support_logits, std::span<const int> base_labels,
                       const Tensor& h_server, const Tensor& h_client,
                       const MiWeights& weights, double lambda_mi) {
  check_lambda(lambda_mi, "lambda_mi");
  Tensor ce = cross_entropy(server_support_logits, base_labels);
  Tensor mi = mi_loss(h_server, h_client, weights);
  ServerLoss out;
  out.ce = ce.item();
  out.mi = mi.item();
  out.total = add(mul_const(ce, 1.0 - lambda_mi), mul_const(mi, lambda_mi));
  return out;
}

ClientLoss client_loss(const Tensor& client_query_logits, std::span<const int> local_labels,
                       const Tensor& server_task_logits, double lambda_kd) {
  check_lambda(lambda_kd, "lambda_kd");
  Tensor ce = cross_entropy(client_query_logits, local_labels);
  Tensor kd = kd_loss(server_task_logits, client_query_logits,
                      adaptive_temperature(server_task_logits, local_labels));
  ClientLoss out;
  out.ce = ce.item();
  out.kd = kd.item();
  out.total = add(mul_const(ce, 1.0 - lambda_kd), mul_const(kd, lambda_kd));
  return out;
}

}  // namespace f2l
