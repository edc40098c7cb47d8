#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "f2l/data.hpp"
#include "f2l/episodes.hpp"
#include "f2l/learner.hpp"
#include "f2l/param_vector.hpp"

namespace f2l {

// Frozen models needed to classify meta-test tasks. A single entry in
// `servers` (or `clients`) is shared by every client; otherwise entry i
// belongs to client i.
struct ModelSnapshot {
  Method method = Method::f2l;
  std::vector<ParamVector> servers;
  std::vector<ParamVector> clients;

  const ParamVector& server_for(std::size_t client) const;
  const ParamVector& client_for(std::size_t client) const;
  ModelSnapshot clone() const;
};

enum class ClassSide { validation, novel };

struct EvalSettings {
  EpisodeShape shape;
  double lr_finetune = 0.01;
  std::size_t num_tasks = 100;
  ClassSide side = ClassSide::novel;
  std::uint64_t seed = 0;  // task stream seed
  std::string phase = "test";
};

struct EvalReport {
  std::vector<double> accuracies;
  std::vector<std::size_t> task_clients;
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation (n - 1)
  std::size_t task_count = 0;
  std::size_t repetition = 0;
  std::string phase;
  // Hash of (client, support, query) of every task, in task order.
  std::uint64_t manifest_hash = 0;
};

// Clients whose pool on `side` can host the episode shape.
std::vector<std::size_t> eligible_clients(const Dataset& data,
                                          const std::vector<ClientData>& clients,
                                          ClassSide side, const EpisodeShape& shape);

// Task t goes to eligible client t mod E and is drawn from that client's
// pool with a stream derived from (seed, t), so the task set depends only on
// data, partition and seed. Each task fine-tunes a copy of the hosting
// client's model; nothing in `models` changes.
EvalReport meta_test(const ModelSnapshot& models, const Dataset& data,
                     const std::vector<ClientData>& clients, const EvalSettings& settings);

struct RunSummary {
  double mean = 0.0;
  double std = 0.0;
};

// Mean and sample standard deviation of per-repetition means.
RunSummary aggregate_runs(const std::vector<EvalReport>& reports);

double sample_std(const std::vector<double>& values);

}  // namespace f2l
