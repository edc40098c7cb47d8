#include "f2l/learner.hpp"

#include <algorithm>
#include <stdexcept>

#include "f2l/error.hpp"
#include "f2l/losses.hpp"
#include "f2l/optim.hpp"

namespace f2l {

std::string_view method_name(Method method) {
  switch (method) {
    case Method::f2l: return "f2l";
    case Method::local: return "local";
    case Method::fl_maml: return "fl_maml";
    case Method::fl_proto: return "fl_proto";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  for (Method m : {Method::f2l, Method::local, Method::fl_maml, Method::fl_proto})
    if (method_name(m) == name) return m;
  throw std::invalid_argument("unknown method '" + std::string(name) + "'");
}

bool uses_client_model(Method method) { return method != Method::fl_proto; }

std::vector<int> argmax_rows(const Tensor& logits) {
  std::vector<int> out(logits.rows());
  const std::size_t c = logits.cols();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto row = logits.values().subspan(i * c, c);
    out[i] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

ParamVector fine_tune_client(const ParamVector& client, const ServerRepresentation& support,
                             const ServerRepresentation& query,
                             std::span<const int> support_labels, double learning_rate) {
  ParamVector leaf = client.clone();
  ClientOutput out = client_forward(support.detach(), query.detach(), leaf);
  cross_entropy(out.support_logits, support_labels).backward();
  return sgd_step(leaf, gradients_of(leaf), learning_rate);
}

FineTunedStack fine_tune_stack(const ParamVector& server, const ParamVector& client,
                               const Tensor& support_features, const Tensor& query_features,
                               std::span<const int> support_labels, double learning_rate) {
  ParamVector server_leaf = server.clone();
  ParamVector client_leaf = client.clone();
  ClientOutput out = client_forward(server_encode(support_features, server_leaf),
                                    server_encode(query_features, server_leaf), client_leaf);
  cross_entropy(out.support_logits, support_labels).backward();
  return {sgd_step(server_leaf, gradients_of(server_leaf), learning_rate),
          sgd_step(client_leaf, gradients_of(client_leaf), learning_rate)};
}

Tensor prototype_logits(const Tensor& support_hidden, std::span<const int> support_labels,
                        std::size_t way, const Tensor& query_hidden) {
  const std::size_t d = support_hidden.rows();
  if (support_labels.size() != d) throw ShapeError("prototype_logits: label count mismatch");
  std::vector<double> counts(way, 0.0);
  for (int y : support_labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= way) {
      throw DomainError("prototype_logits: label " + std::to_string(y) + " outside way");
    }
    counts[static_cast<std::size_t>(y)] += 1.0;
  }
  std::vector<double> averaging(way * d, 0.0);
  for (std::size_t s = 0; s < d; ++s) {
    const auto c = static_cast<std::size_t>(support_labels[s]);
    averaging[c * d + s] = 1.0 / counts[c];
  }
  Tensor prototypes = matmul(Tensor::matrix(way, d, std::move(averaging)), support_hidden);
  return neg(pairwise_sq_dist(query_hidden, prototypes));
}

std::vector<int> predict_task(Method method, const ParamVector& server, const ParamVector& client,
                              const Dataset& data, const MetaTask& task, double lr_finetune) {
  const Tensor xs = data.gather(task.support);
  const Tensor xq = data.gather(task.query);
  switch (method) {
    case Method::f2l: {
      const ServerRepresentation hs = server_encode(xs, server).detach();
      const ServerRepresentation hq = server_encode(xq, server).detach();
      ParamVector tuned = fine_tune_client(client, hs, hq, task.support_labels, lr_finetune);
      return argmax_rows(client_forward(hs, hq, tuned).query_logits);
    }
    case Method::local:
    case Method::fl_maml: {
      FineTunedStack tuned =
          fine_tune_stack(server, client, xs, xq, task.support_labels, lr_finetune);
      ClientOutput out = client_forward(server_encode(xs, tuned.server),
                                        server_encode(xq, tuned.server), tuned.client);
      return argmax_rows(out.query_logits);
    }
    case Method::fl_proto: {
      const Tensor hs = server_encode(xs, server).tensor().detach();
      const Tensor hq = server_encode(xq, server).tensor().detach();
      return argmax_rows(prototype_logits(hs, task.support_labels, task.class_map.size(), hq));
    }
  }
  throw std::logic_error("predict_task: unhandled method");
}

}  // namespace f2l
