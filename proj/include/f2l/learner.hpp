#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "f2l/data.hpp"
#include "f2l/episodes.hpp"
#include "f2l/models.hpp"
#include "f2l/param_vector.hpp"

namespace f2l {

// f2l: decoupled server/client models with transfer and distillation.
// local: per-client MAML-style training of the full stack, never aggregated.
// fl_maml: the full stack trained with first-order MAML and FedAvg.
// fl_proto: server encoder only, prototype classifier, FedAvg.
enum class Method { f2l, local, fl_maml, fl_proto };

std::string_view method_name(Method method);
Method parse_method(std::string_view name);

// Whether the method uses a client-model at all.
bool uses_client_model(Method method);

std::vector<int> argmax_rows(const Tensor& logits);

// One full-batch SGD step of the client-model on the support cross-entropy.
// `client` is not modified.
ParamVector fine_tune_client(const ParamVector& client, const ServerRepresentation& support,
                             const ServerRepresentation& query,
                             std::span<const int> support_labels, double learning_rate);

struct FineTunedStack {
  ParamVector server;
  ParamVector client;
};

// One SGD step of server encoder and client-model jointly on the support
// cross-entropy through the whole stack.
FineTunedStack fine_tune_stack(const ParamVector& server, const ParamVector& client,
                               const Tensor& support_features, const Tensor& query_features,
                               std::span<const int> support_labels, double learning_rate);

// Negative squared distances to per-class support means: [Q x way].
Tensor prototype_logits(const Tensor& support_hidden, std::span<const int> support_labels,
                        std::size_t way, const Tensor& query_hidden);

// Query predictions (local labels) for a task under each method's test-time
// procedure. Parameters are never modified.
std::vector<int> predict_task(Method method, const ParamVector& server, const ParamVector& client,
                              const Dataset& data, const MetaTask& task, double lr_finetune);

}  // namespace f2l
