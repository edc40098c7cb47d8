#include "f2l/fedsim.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "f2l/error.hpp"
#include "f2l/losses.hpp"
#include "f2l/models.hpp"
#include "f2l/rng.hpp"

namespace f2l {

std::string_view ablation_name(Ablation ablation) {
  switch (ablation) {
    case Ablation::none: return "f2l";
    case Ablation::no_decouple: return "f2l\\M";
    case Ablation::no_transfer: return "f2l\\T";
    case Ablation::no_distill: return "f2l\\A";
  }
  return "?";
}

TrainConfig apply_ablation(TrainConfig config, Ablation ablation) {
  switch (ablation) {
    case Ablation::none: break;
    case Ablation::no_decouple: config.decouple = false; break;
    case Ablation::no_transfer: config.lambda_mi = 0.0; break;
    case Ablation::no_distill: config.lambda_kd = 0.0; break;
  }
  return config;
}

namespace {

bool shares_client_model(const TrainConfig& c) {
  return c.method == Method::fl_maml || (c.method == Method::f2l && !c.decouple);
}

OptimizerConfig adam(double lr, double weight_decay) {
  OptimizerConfig o;
  o.kind = OptimizerKind::adam;
  o.learning_rate = lr;
  o.weight_decay = weight_decay;
  return o;
}

std::vector<int> base_labels_of(const TrainContext& ctx, const MetaTask& task) {
  std::vector<int> out;
  for (int g : task.global_labels(task.support_labels)) {
    const int b = ctx.base_index.at(static_cast<std::size_t>(g));
    if (b < 0) throw DomainError("training task uses non-base class " + std::to_string(g));
    out.push_back(b);
  }
  return out;
}

MetaTask draw_training_task(const ClientState& client, const TrainContext& ctx,
                            std::size_t round, std::size_t step) {
  Rng rng(derive_seed(ctx.config.seed, {kTrainStream, client.id, round, step}));
  return sample_task(*ctx.data, client.data.base, ctx.config.shape, rng,
                     {client.id, round, step, "train"});
}

// Fine-tune (SGD on support CE), server update on L_phi, client update on
// L_psi evaluated at the fine-tuned client-model (first-order).
StepLosses f2l_step(ClientState& client, ParamVector& server, const TrainContext& ctx,
                    const MetaTask& task) {
  const TrainConfig& cfg = ctx.config;
  const Dataset& data = *ctx.data;
  server.zero_grad();
  ServerOutput support_out = server_forward(data.gather(task.support), server);
  ServerOutput query_out = server_forward(data.gather(task.query), server);
  const ServerRepresentation hs = support_out.hidden.detach();
  const ServerRepresentation hq = query_out.hidden.detach();

  ParamVector before = client.client_params.clone();
  ClientOutput pre = client_forward(hs, hq, before);
  Tensor finetune_loss = cross_entropy(pre.support_logits, task.support_labels);
  finetune_loss.backward();
  ParamVector tuned = sgd_step(before, gradients_of(before), cfg.lr_finetune);
  ClientOutput post = client_forward(hs, hq, tuned);

  const ClientOutput& confidence =
      cfg.mi_confidence_source == MiConfidenceSource::pre_finetune ? pre : post;
  const MiWeights weights =
      mi_weights(softmax_rows(confidence.support_logits.detach()), task.support_labels);
  ServerLoss ls = server_loss(support_out.logits, base_labels_of(ctx, task),
                              support_out.hidden.tensor(), confidence.support_hidden.detach(),
                              weights, cfg.lambda_mi);
  ls.total.backward();

  std::vector<std::size_t> task_columns;
  for (int g : task.class_map)
    task_columns.push_back(static_cast<std::size_t>(ctx.base_index.at(static_cast<std::size_t>(g))));
  const Tensor server_task_logits = gather_cols(query_out.logits.detach(), task_columns);
  ClientLoss lc = client_loss(post.query_logits, task.query_labels, server_task_logits, cfg.lambda_kd);
  lc.total.backward();

  client.server_optimizer.step(server);
  client.client_optimizer.step(client.client_params, gradients_of(tuned));

  StepLosses out;
  out.loss_phi = ls.total.item();
  out.loss_psi = lc.total.item();
  out.loss_ce_s = ls.ce;
  out.loss_mi = ls.mi;
  out.loss_ce_q = lc.ce;
  out.loss_kd = lc.kd;
  return out;
}

// First-order MAML on the whole stack with cross-entropy only.
StepLosses maml_step(ClientState& client, ParamVector& server, const TrainContext& ctx,
                     const MetaTask& task) {
  const Dataset& data = *ctx.data;
  const Tensor xs = data.gather(task.support);
  const Tensor xq = data.gather(task.query);
  FineTunedStack tuned = fine_tune_stack(server, client.client_params, xs, xq,
                                         task.support_labels, ctx.config.lr_finetune);
  ClientOutput before = client_forward(server_encode(xs, server).detach(),
                                       server_encode(xq, server).detach(), client.client_params);
  const double support_ce = cross_entropy(before.support_logits.detach(), task.support_labels).item();

  ClientOutput out = client_forward(server_encode(xs, tuned.server),
                                    server_encode(xq, tuned.server), tuned.client);
  Tensor query_ce = cross_entropy(out.query_logits, task.query_labels);
  query_ce.backward();
  client.server_optimizer.step(server, gradients_of(tuned.server));
  client.client_optimizer.step(client.client_params, gradients_of(tuned.client));

  StepLosses s;
  s.loss_phi = query_ce.item();
  s.loss_psi = query_ce.item();
  s.loss_ce_s = support_ce;
  s.loss_ce_q = query_ce.item();
  return s;
}

StepLosses proto_step(ClientState& client, ParamVector& server, const TrainContext& ctx,
                      const MetaTask& task) {
  const Dataset& data = *ctx.data;
  server.zero_grad();
  const Tensor hs = server_encode(data.gather(task.support), server).tensor();
  const Tensor hq = server_encode(data.gather(task.query), server).tensor();
  Tensor loss = cross_entropy(prototype_logits(hs, task.support_labels, task.class_map.size(), hq),
                              task.query_labels);
  loss.backward();
  client.server_optimizer.step(server);
  StepLosses s;
  s.loss_phi = loss.item();
  s.loss_ce_q = loss.item();
  return s;
}

}  // namespace

TrainContext make_context(const TrainConfig& config, const Dataset& data, const ClassSplit& split) {
  if (config.shape.way < 2) throw ConfigError("n_way must be at least 2");
  if (config.shape.shot == 0 || config.shape.query == 0) {
    throw ConfigError("k_shot and query_size must be positive");
  }
  if (split.base.size() < config.shape.way) {
    throw ConfigError("only " + std::to_string(split.base.size()) + " base classes for " +
                      std::to_string(config.shape.way) + "-way tasks");
  }
  if (!(config.lambda_mi >= 0.0 && config.lambda_mi <= 1.0) ||
      !(config.lambda_kd >= 0.0 && config.lambda_kd <= 1.0)) {
    throw ConfigError("loss weights must lie in [0, 1]");
  }
  TrainContext ctx;
  ctx.config = config;
  ctx.data = &data;
  ctx.split = split;
  ctx.base_index.assign(data.num_classes(), -1);
  for (std::size_t i = 0; i < split.base.size(); ++i)
    ctx.base_index.at(static_cast<std::size_t>(split.base[i])) = static_cast<int>(i);
  return ctx;
}

ServerArch server_arch(const TrainContext& ctx) {
  return {ctx.data->dim(), ctx.config.hidden_dim, ctx.split.base.size()};
}

ClientArch client_arch(const TrainContext& ctx) {
  return {ctx.config.hidden_dim, ctx.config.shape.way};
}

ServerState make_server(const TrainContext& ctx) {
  ServerState s;
  s.server_params = init_server_params(server_arch(ctx), derive_seed(ctx.config.seed, {kInitStream, 0}));
  if (shares_client_model(ctx.config)) {
    s.shared_client_params =
        init_client_params(client_arch(ctx), derive_seed(ctx.config.seed, {kInitStream, 1, 0}));
  }
  return s;
}

std::vector<ClientState> make_clients(const TrainContext& ctx, const Partition& partition) {
  const TrainConfig& cfg = ctx.config;
  const auto views = client_views(*ctx.data, partition, ctx.split);
  std::vector<ClientState> clients(views.size());
  for (std::size_t i = 0; i < clients.size(); ++i) {
    ClientState& c = clients[i];
    c.id = i;
    c.data = views[i];
    if (cfg.method == Method::local) {
      c.server_params =
          init_server_params(server_arch(ctx), derive_seed(cfg.seed, {kInitStream, 0}));
    }
    if (uses_client_model(cfg.method)) {
      c.client_params =
          init_client_params(client_arch(ctx), derive_seed(cfg.seed, {kInitStream, 1, i}));
    }
    c.server_optimizer = Optimizer(adam(cfg.lr_server, cfg.weight_decay));
    c.client_optimizer = Optimizer(adam(cfg.lr_client, cfg.weight_decay));
  }
  return clients;
}

LocalResult local_round(ClientState& client, const TrainContext& ctx, std::size_t round) {
  if (client.server_params.empty()) {
    throw std::logic_error("local_round: client " + std::to_string(client.id) +
                           " has not received a server-model");
  }
  LocalResult result;
  result.server_params = client.server_params.clone();
  for (std::size_t step = 1; step <= ctx.config.local_steps; ++step) {
    const MetaTask task = draw_training_task(client, ctx, round, step);
    StepLosses s;
    switch (ctx.config.method) {
      case Method::f2l: s = f2l_step(client, result.server_params, ctx, task); break;
      case Method::local:
      case Method::fl_maml: s = maml_step(client, result.server_params, ctx, task); break;
      case Method::fl_proto: s = proto_step(client, result.server_params, ctx, task); break;
    }
    s.round = round;
    s.client = client.id;
    s.step = step;
    result.losses.push_back(s);
  }
  return result;
}

ParamVector aggregate(std::span<const ParamVector> returns) {
  if (returns.empty()) throw std::invalid_argument("aggregate: no client returns");
  for (const auto& r : returns) {
    if (!r.same_layout(returns[0])) throw ShapeError("aggregate: client returns differ in layout");
  }
  std::vector<std::vector<double>> flat;
  for (const auto& r : returns) flat.push_back(flatten(r));
  // Each coordinate is summed in sorted order so the mean depends only on
  // the multiset of returns, not on their order.
  const auto count = static_cast<double>(returns.size());
  std::vector<double> mean(flat[0].size()), column(returns.size());
  for (std::size_t j = 0; j < mean.size(); ++j) {
    for (std::size_t c = 0; c < flat.size(); ++c) column[c] = flat[c][j];
    std::sort(column.begin(), column.end());
    double total = 0.0;
    for (double v : column) total += v;
    mean[j] = total / count;
  }
  return unflatten(mean, returns[0]);
}

std::vector<std::uint8_t> encode_message(const RoundMessage& message) {
  std::vector<std::uint8_t> out;
  out.reserve(12 + message.payload.size());
  auto u32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  };
  u32(message.round);
  u32(message.client);
  out.push_back(static_cast<std::uint8_t>(message.direction));
  out.insert(out.end(), {0, 0, 0});
  out.insert(out.end(), message.payload.begin(), message.payload.end());
  return out;
}

RoundMessage decode_message(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12) throw ParseError("message shorter than its 12-byte header");
  auto u32 = [&](std::size_t at) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{bytes[at + i]} << (8 * i);
    return v;
  };
  RoundMessage m;
  m.round = u32(0);
  m.client = u32(4);
  if (bytes[8] > 1) throw ParseError("message: unknown direction " + std::to_string(bytes[8]));
  m.direction = static_cast<Direction>(bytes[8]);
  if (bytes[9] || bytes[10] || bytes[11]) throw ParseError("message: reserved bytes not zero");
  m.payload.assign(bytes.begin() + 12, bytes.end());
  return m;
}

ModelSnapshot snapshot(const TrainContext& ctx, const ServerState& server,
                       const std::vector<ClientState>& clients) {
  ModelSnapshot s;
  s.method = ctx.config.method;
  if (ctx.config.method == Method::local) {
    for (const auto& c : clients) s.servers.push_back(c.server_params);
  } else {
    s.servers.push_back(server.server_params);
  }
  if (uses_client_model(ctx.config.method)) {
    for (const auto& c : clients) s.clients.push_back(c.client_params);
  }
  return s;
}

namespace {

class Transport {
 public:
  explicit Transport(bool keep_log) : keep_log_(keep_log) {}

  // Encodes, optionally logs, and decodes on the receiving side.
  ParamVector deliver(const RoundMessage& message) {
    auto bytes = encode_message(message);
    RoundMessage received = decode_message(bytes);
    if (keep_log_) log_.push_back(std::move(bytes));
    return decode_params(received.payload);
  }

  std::vector<std::vector<std::uint8_t>> take_log() { return std::move(log_); }

 private:
  bool keep_log_;
  std::vector<std::vector<std::uint8_t>> log_;
};

void run_clients(std::vector<ClientState>& clients, const TrainContext& ctx, std::size_t round,
                 std::vector<LocalResult>& results) {
  const std::size_t n = clients.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  if (ctx.config.reverse_schedule) std::reverse(order.begin(), order.end());

  std::vector<std::exception_ptr> errors(n);
  auto work = [&](std::size_t i) {
    try {
      results[i] = local_round(clients[i], ctx, round);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  const std::size_t workers = std::min(std::max<std::size_t>(ctx.config.workers, 1), n);
  if (workers == 1) {
    for (std::size_t i : order) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t k = next++; k < n; k = next++) work(order[k]);
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

RoundRecord summarize_round(std::size_t round, std::span<const StepLosses> steps) {
  RoundRecord r;
  r.round = round;
  if (steps.empty()) return r;
  for (const auto& s : steps) {
    r.loss_phi += s.loss_phi;
    r.loss_psi += s.loss_psi;
    r.loss_ce_s += s.loss_ce_s;
    r.loss_mi += s.loss_mi;
    r.loss_ce_q += s.loss_ce_q;
    r.loss_kd += s.loss_kd;
  }
  const auto n = static_cast<double>(steps.size());
  r.loss_phi /= n;
  r.loss_psi /= n;
  r.loss_ce_s /= n;
  r.loss_mi /= n;
  r.loss_ce_q /= n;
  r.loss_kd /= n;
  return r;
}

}  // namespace

RunResult run(const TrainConfig& config, const Dataset& data, const ClassSplit& split,
              const Partition& partition) {
  if (partition.num_clients() != config.num_clients) {
    throw ConfigError("partition has " + std::to_string(partition.num_clients()) +
                      " clients, config expects " + std::to_string(config.num_clients));
  }
  const TrainContext ctx = make_context(config, data, split);
  const bool federated = config.method != Method::local;
  const bool shared_client = shares_client_model(config);

  RunResult res;
  res.server = make_server(ctx);
  res.clients = make_clients(ctx, partition);
  Transport transport(config.keep_message_log);

  auto broadcast = [&](std::size_t round) {
    ParamVector outgoing = res.server.server_params;
    if (shared_client) outgoing = ParamVector::concat(outgoing, res.server.shared_client_params);
    const auto payload = encode_params(outgoing);
    for (auto& c : res.clients) {
      ParamVector in = transport.deliver({static_cast<std::uint32_t>(round),
                                          static_cast<std::uint32_t>(c.id), Direction::broadcast,
                                          payload});
      c.server_params = in.select_prefix("server.");
      if (shared_client) c.client_params = in.select_prefix("client.");
    }
  };

  const EvalSettings validation{config.shape,
                                config.lr_finetune,
                                config.val_tasks,
                                ClassSide::validation,
                                derive_seed(config.seed, {kValidationStream}),
                                "val"};
  const auto views = client_views(data, partition, split);
  const bool can_validate =
      config.val_tasks > 0 &&
      !eligible_clients(data, views, ClassSide::validation, config.shape).empty();

  if (federated) broadcast(1);
  for (std::size_t t = 1; t <= config.rounds; ++t) {
    res.server.round = t;
    std::vector<LocalResult> results(res.clients.size());
    run_clients(res.clients, ctx, t, results);

    const std::size_t first_step = res.steps.size();
    for (const auto& r : results) res.steps.insert(res.steps.end(), r.losses.begin(), r.losses.end());

    if (federated) {
      std::vector<ParamVector> servers, client_models;
      for (std::size_t i = 0; i < res.clients.size(); ++i) {
        ParamVector upload = results[i].server_params;
        if (shared_client) upload = ParamVector::concat(upload, res.clients[i].client_params);
        ParamVector in = transport.deliver({static_cast<std::uint32_t>(t),
                                            static_cast<std::uint32_t>(i), Direction::upload,
                                            encode_params(upload)});
        servers.push_back(in.select_prefix("server."));
        if (shared_client) client_models.push_back(in.select_prefix("client."));
      }
      res.server.server_params = aggregate(servers);
      if (shared_client) res.server.shared_client_params = aggregate(client_models);
      broadcast(t + 1);
    } else {
      for (std::size_t i = 0; i < res.clients.size(); ++i)
        res.clients[i].server_params = std::move(results[i].server_params);
    }

    RoundRecord record = summarize_round(
        t, std::span<const StepLosses>(res.steps).subspan(first_step));
    const bool eval_round = (config.eval_every > 0 && t % config.eval_every == 0) || t == config.rounds;
    if (eval_round && can_validate) {
      EvalReport report =
          meta_test(snapshot(ctx, res.server, res.clients), data, views, validation);
      record.val_accuracy = report.mean;
      if (report.mean > res.server.best_score) {
        res.server.best_score = report.mean;
        res.server.best_round = t;
        res.server.best = snapshot(ctx, res.server, res.clients).clone();
      }
      res.validations.push_back(std::move(report));
    }
    res.rounds.push_back(record);
  }
  if (res.server.best.servers.empty()) {
    // No validation possible: the final models serve as the checkpoint.
    res.server.best = snapshot(ctx, res.server, res.clients).clone();
    res.server.best_round = config.rounds;
  }
  res.message_log = transport.take_log();
  return res;
}

}  // namespace f2l
