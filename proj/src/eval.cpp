#include "f2l/eval.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "f2l/error.hpp"
#include "f2l/io.hpp"
#include "f2l/rng.hpp"

namespace f2l {

const ParamVector& ModelSnapshot::server_for(std::size_t client) const {
  if (servers.empty()) throw std::logic_error("ModelSnapshot: no server-model");
  return servers.size() == 1 ? servers[0] : servers.at(client);
}

const ParamVector& ModelSnapshot::client_for(std::size_t client) const {
  static const ParamVector kEmpty;
  if (clients.empty()) return kEmpty;
  return clients.size() == 1 ? clients[0] : clients.at(client);
}

ModelSnapshot ModelSnapshot::clone() const {
  ModelSnapshot out;
  out.method = method;
  for (const auto& s : servers) out.servers.push_back(s.clone());
  for (const auto& c : clients) out.clients.push_back(c.clone());
  return out;
}

namespace {

const std::vector<std::size_t>& pool_of(const ClientData& c, ClassSide side) {
  return side == ClassSide::novel ? c.novel : c.validation;
}

std::uint64_t hash_indices(std::uint64_t h, const std::vector<std::size_t>& v) {
  for (std::size_t i : v) {
    const auto x = static_cast<std::uint64_t>(i);
    h = fnv1a(std::string_view(reinterpret_cast<const char*>(&x), sizeof x), h);
  }
  return h;
}

}  // namespace

double sample_std(const std::vector<double>& values) {
  if (values.size() < 2) return 0.0;
  const double m = std::accumulate(values.begin(), values.end(), 0.0) /
                   static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

std::vector<std::size_t> eligible_clients(const Dataset& data,
                                          const std::vector<ClientData>& clients,
                                          ClassSide side, const EpisodeShape& shape) {
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < clients.size(); ++c)
    if (can_host_task(data, pool_of(clients[c], side), shape)) out.push_back(c);
  return out;
}

EvalReport meta_test(const ModelSnapshot& models, const Dataset& data,
                     const std::vector<ClientData>& clients, const EvalSettings& settings) {
  if (settings.num_tasks == 0) throw std::invalid_argument("meta_test: num_tasks must be positive");
  const auto hosts = eligible_clients(data, clients, settings.side, settings.shape);
  if (hosts.empty()) {
    throw EpisodeError("meta_test: no client holds " + std::to_string(settings.shape.way) +
                       " " + (settings.side == ClassSide::novel ? "novel" : "validation") +
                       " classes with at least " + std::to_string(settings.shape.shot + 1) +
                       " samples");
  }

  EvalReport report;
  report.phase = settings.phase;
  std::uint64_t manifest = fnv1a(std::string_view("manifest"));
  for (std::size_t t = 0; t < settings.num_tasks; ++t) {
    const std::size_t client = hosts[t % hosts.size()];
    Rng rng(derive_seed(settings.seed, {t}));
    MetaTask task = sample_task(data, pool_of(clients[client], settings.side), settings.shape,
                                rng, {client, 0, t, settings.phase});
    const auto predicted = predict_task(models.method, models.server_for(client),
                                        models.client_for(client), data, task,
                                        settings.lr_finetune);
    std::size_t correct = 0;
    for (std::size_t q = 0; q < predicted.size(); ++q)
      if (predicted[q] == task.query_labels[q]) ++correct;
    report.accuracies.push_back(static_cast<double>(correct) /
                                static_cast<double>(task.query.size()));
    report.task_clients.push_back(client);
    manifest = hash_indices(manifest, {client});
    manifest = hash_indices(manifest, task.support);
    manifest = hash_indices(manifest, task.query);
  }
  report.task_count = report.accuracies.size();
  report.mean = std::accumulate(report.accuracies.begin(), report.accuracies.end(), 0.0) /
                static_cast<double>(report.task_count);
  report.std = sample_std(report.accuracies);
  report.manifest_hash = manifest;
  return report;
}

RunSummary aggregate_runs(const std::vector<EvalReport>& reports) {
  if (reports.size() < 2) {
    throw std::invalid_argument("aggregate_runs: need at least two repetitions, got " +
                                std::to_string(reports.size()));
  }
  std::vector<double> means;
  for (const auto& r : reports) means.push_back(r.mean);
  RunSummary s;
  s.mean = std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(means.size());
  s.std = sample_std(means);
  return s;
}

}  // namespace f2l
