#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "f2l/data.hpp"
#include "f2l/episodes.hpp"
#include "f2l/eval.hpp"
#include "f2l/learner.hpp"
#include "f2l/optim.hpp"
#include "f2l/param_vector.hpp"

namespace f2l {

// Which client-model produces the transfer-loss confidences and
// representations: the fine-tuned copy or the pre-fine-tune parameters.
enum class MiConfidenceSource { post_finetune, pre_finetune };

enum class Ablation { none, no_decouple, no_transfer, no_distill };

std::string_view ablation_name(Ablation ablation);

struct TrainConfig {
  Method method = Method::f2l;
  EpisodeShape shape{5, 1, 5};
  std::size_t num_clients = 10;
  std::size_t rounds = 200;
  std::size_t local_steps = 10;
  double lr_finetune = 0.01;
  double lr_client = 0.001;
  double lr_server = 0.001;
  double weight_decay = 1e-4;
  double lambda_mi = 0.5;
  double lambda_kd = 0.5;
  // When false the client-model is aggregated alongside the server-model.
  bool decouple = true;
  MiConfidenceSource mi_confidence_source = MiConfidenceSource::post_finetune;
  std::size_t hidden_dim = 32;
  std::size_t eval_every = 10;
  std::size_t val_tasks = 50;
  std::uint64_t seed = 0;
  // Parallel client execution within a round; results never depend on it.
  std::size_t workers = 1;
  bool reverse_schedule = false;
  bool keep_message_log = false;

  bool transfer() const { return lambda_mi > 0.0; }
  bool distill() const { return lambda_kd > 0.0; }
};

TrainConfig apply_ablation(TrainConfig config, Ablation ablation);

// Seed stream tags for derive_seed.
enum StreamTag : std::uint64_t {
  kInitStream = 1,
  kTrainStream = 2,
  kValidationStream = 3,
  kTestStream = 4,
  kDataStream = 5,
  kSplitStream = 6,
  kPartitionStream = 7,
  kRepetitionStream = 8,
};

struct StepLosses {
  std::size_t round = 0;
  std::size_t client = 0;
  std::size_t step = 0;
  double loss_phi = 0.0;
  double loss_psi = 0.0;
  double loss_ce_s = 0.0;
  double loss_mi = 0.0;
  double loss_ce_q = 0.0;
  double loss_kd = 0.0;
};

struct ClientState {
  std::size_t id = 0;
  ClientData data;
  // The client's copy of the server-model (received by broadcast, or its
  // own model under Method::local).
  ParamVector server_params;
  // psi_i; empty for fl_proto.
  ParamVector client_params;
  Optimizer server_optimizer;
  Optimizer client_optimizer;
};

struct ServerState {
  ParamVector server_params;
  // Aggregated client-model when it is shared (fl_maml, no decoupling).
  ParamVector shared_client_params;
  std::size_t round = 0;
  ModelSnapshot best;
  double best_score = -1.0;
  std::size_t best_round = 0;
};

// Everything a local step needs besides the client itself.
struct TrainContext {
  TrainConfig config;
  const Dataset* data = nullptr;
  ClassSplit split;
  // Global class id -> server head column, -1 for non-base classes.
  std::vector<int> base_index;
};

TrainContext make_context(const TrainConfig& config, const Dataset& data, const ClassSplit& split);

ServerArch server_arch(const TrainContext& ctx);
ClientArch client_arch(const TrainContext& ctx);

ServerState make_server(const TrainContext& ctx);
std::vector<ClientState> make_clients(const TrainContext& ctx, const Partition& partition);

struct LocalResult {
  ParamVector server_params;
  std::vector<StepLosses> losses;
};

// tau local steps on client.server_params (left untouched) and
// client.client_params (updated in place). Returns the updated server-model.
LocalResult local_round(ClientState& client, const TrainContext& ctx, std::size_t round);

// Unweighted mean of parameter vectors with identical layouts.
ParamVector aggregate(std::span<const ParamVector> returns);

enum class Direction : std::uint8_t { broadcast = 0, upload = 1 };

// 12-byte little-endian header (round u32, client u32, direction u8, three
// reserved zero bytes) followed by the checkpoint encoding of the payload.
struct RoundMessage {
  std::uint32_t round = 0;
  std::uint32_t client = 0;
  Direction direction = Direction::broadcast;
  std::vector<std::uint8_t> payload;
};

std::vector<std::uint8_t> encode_message(const RoundMessage& message);
RoundMessage decode_message(std::span<const std::uint8_t> bytes);

struct RoundRecord {
  std::size_t round = 0;
  double loss_phi = 0.0;
  double loss_psi = 0.0;
  double loss_ce_s = 0.0;
  double loss_mi = 0.0;
  double loss_ce_q = 0.0;
  double loss_kd = 0.0;
  std::optional<double> val_accuracy;
};

struct RunResult {
  ServerState server;
  std::vector<ClientState> clients;
  std::vector<RoundRecord> rounds;
  std::vector<StepLosses> steps;
  std::vector<EvalReport> validations;
  // Encoded messages in send order; filled when keep_message_log is set.
  std::vector<std::vector<std::uint8_t>> message_log;
};

// Snapshot of the current models for evaluation.
ModelSnapshot snapshot(const TrainContext& ctx, const ServerState& server,
                       const std::vector<ClientState>& clients);

RunResult run(const TrainConfig& config, const Dataset& data, const ClassSplit& split,
              const Partition& partition);

}  // namespace f2l
