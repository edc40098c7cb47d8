#include "f2l/experiment.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>

#include "f2l/error.hpp"
#include "f2l/io.hpp"
#include "f2l/rng.hpp"

namespace f2l {

std::uint64_t repetition_seed(std::uint64_t master_seed, std::size_t repetition) {
  return derive_seed(master_seed, {kRepetitionStream, repetition});
}

PreparedData prepare_data(const ExperimentConfig& config, std::uint64_t rep_seed) {
  const DataConfig& d = config.data;
  PreparedData out;
  if (d.source == DataSource::synthetic) {
    out.data = synth_gaussian(d.num_classes, d.per_class, d.feature_dim, d.separation,
                              derive_seed(rep_seed, {kDataStream}));
  } else {
    out.data = load_csv(d.csv_path);
  }
  out.split = split_classes(out.data.num_classes(), d.split, derive_seed(rep_seed, {kSplitStream}));
  out.partition = partition(out.data, config.train.num_clients, d.partition,
                            derive_seed(rep_seed, {kPartitionStream}), &out.split.base);
  out.views = client_views(out.data, out.partition, out.split);
  return out;
}

EvalSettings test_settings(const ExperimentConfig& config, std::uint64_t rep_seed) {
  return {config.train.shape,
          config.train.lr_finetune,
          config.test_tasks,
          ClassSide::novel,
          derive_seed(rep_seed, {kTestStream}),
          "test"};
}

std::string metrics_csv(const std::vector<StepLosses>& steps) {
  std::string out = "round,client,step,loss_phi,loss_psi,loss_ce_s,loss_mi,loss_ce_q,loss_kd\n";
  for (const auto& s : steps) {
    out += std::to_string(s.round) + "," + std::to_string(s.client) + "," +
           std::to_string(s.step) + "," + format_double(s.loss_phi) + "," +
           format_double(s.loss_psi) + "," + format_double(s.loss_ce_s) + "," +
           format_double(s.loss_mi) + "," + format_double(s.loss_ce_q) + "," +
           format_double(s.loss_kd) + "\n";
  }
  return out;
}

std::string rounds_csv(const std::vector<RoundRecord>& rounds) {
  std::string out = "round,loss_phi,loss_psi,loss_ce_s,loss_mi,loss_ce_q,loss_kd,val_accuracy\n";
  for (const auto& r : rounds) {
    out += std::to_string(r.round) + "," + format_double(r.loss_phi) + "," +
           format_double(r.loss_psi) + "," + format_double(r.loss_ce_s) + "," +
           format_double(r.loss_mi) + "," + format_double(r.loss_ce_q) + "," +
           format_double(r.loss_kd) + "," +
           (r.val_accuracy ? format_double(*r.val_accuracy) : std::string()) + "\n";
  }
  return out;
}

std::string eval_csv(const EvalReport& report) {
  std::string out = "phase,task_id,accuracy\n";
  for (std::size_t t = 0; t < report.accuracies.size(); ++t)
    out += report.phase + "," + std::to_string(t) + "," + format_double(report.accuracies[t]) + "\n";
  return out;
}

void save_snapshot(const ModelSnapshot& snapshot, const std::filesystem::path& dir) {
  if (snapshot.servers.size() == 1) {
    save_params(snapshot.servers[0], dir / "checkpoint_server.bin");
  } else {
    for (std::size_t i = 0; i < snapshot.servers.size(); ++i)
      save_params(snapshot.servers[i], dir / ("checkpoint_server_" + std::to_string(i) + ".bin"));
  }
  for (std::size_t i = 0; i < snapshot.clients.size(); ++i)
    save_params(snapshot.clients[i], dir / ("checkpoint_client_" + std::to_string(i) + ".bin"));
}

ModelSnapshot load_snapshot(Method method, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  ModelSnapshot s;
  s.method = method;
  if (fs::exists(dir / "checkpoint_server.bin")) {
    s.servers.push_back(load_params(dir / "checkpoint_server.bin"));
  } else {
    for (std::size_t i = 0;; ++i) {
      const auto p = dir / ("checkpoint_server_" + std::to_string(i) + ".bin");
      if (!fs::exists(p)) break;
      s.servers.push_back(load_params(p));
    }
  }
  if (s.servers.empty()) throw ParseError("no server checkpoint in " + dir.string());
  for (std::size_t i = 0;; ++i) {
    const auto p = dir / ("checkpoint_client_" + std::to_string(i) + ".bin");
    if (!fs::exists(p)) break;
    s.clients.push_back(load_params(p));
  }
  if (uses_client_model(method) && s.clients.empty()) {
    throw ParseError("no client checkpoints in " + dir.string());
  }
  return s;
}

std::vector<Variant> run_variants(const ExperimentConfig& config) {
  const std::string name(method_name(config.train.method));
  return {{name, "default", name, config}};
}

std::vector<Variant> baseline_variants(const ExperimentConfig& config,
                                       const std::vector<Method>& methods) {
  std::vector<Variant> out;
  for (Method m : methods) {
    ExperimentConfig c = config;
    c.train.method = m;
    const std::string name(method_name(m));
    out.push_back({name, "default", name, c});
  }
  return out;
}

std::vector<Variant> ablation_variants(const ExperimentConfig& config) {
  const std::pair<Ablation, const char*> kinds[] = {{Ablation::none, "f2l"},
                                                     {Ablation::no_decouple, "f2l_M"},
                                                     {Ablation::no_transfer, "f2l_T"},
                                                     {Ablation::no_distill, "f2l_A"}};
  std::vector<Variant> out;
  for (const auto& [ablation, dir] : kinds) {
    ExperimentConfig c = config;
    c.train.method = Method::f2l;
    c.train = apply_ablation(c.train, ablation);
    out.push_back({std::string(ablation_name(ablation)), "default", dir, c});
  }
  return out;
}

std::vector<Variant> sweep_variants(const ExperimentConfig& config, const std::string& param,
                                    const std::vector<std::string>& values) {
  if (param != "lambda_mi" && param != "lambda_kd" && param != "clients") {
    throw ConfigError("sweep: parameter must be lambda_mi, lambda_kd or clients, got '" + param + "'");
  }
  if (values.empty()) throw ConfigError("sweep: no values given");
  std::vector<Variant> out;
  for (const auto& v : values) {
    ExperimentConfig c = config;
    set_config_value(c, param, v);
    validate(c);
    const std::string setting = param + "=" + get_config_value(c, param);
    out.push_back({std::string(method_name(c.train.method)), setting,
                   "sweep_" + param + "/" + get_config_value(c, param), c});
  }
  return out;
}

VariantOutcome run_variant(const Variant& variant, const std::filesystem::path& dir,
                           std::ostream* log) {
  const ExperimentConfig& cfg = variant.config;
  validate(cfg);
  write_file_atomic(dir / "config.ini", serialize_config(cfg));
  VariantOutcome outcome;
  outcome.variant = variant;
  for (std::size_t r = 0; r < cfg.repetitions; ++r) {
    const std::uint64_t seed = repetition_seed(cfg.train.seed, r);
    const PreparedData prep = prepare_data(cfg, seed);
    TrainConfig train = cfg.train;
    train.seed = seed;
    RunResult result = run(train, prep.data, prep.split, prep.partition);
    EvalReport test = meta_test(result.server.best, prep.data, prep.views, test_settings(cfg, seed));
    test.repetition = r;

    const auto rep_dir = dir / ("rep_" + std::to_string(r));
    write_file_atomic(rep_dir / "partition.csv", partition_manifest_csv(prep.partition));
    write_file_atomic(rep_dir / "metrics.csv", metrics_csv(result.steps));
    write_file_atomic(rep_dir / "rounds.csv", rounds_csv(result.rounds));
    write_file_atomic(rep_dir / "eval.csv", eval_csv(test));
    save_snapshot(result.server.best, rep_dir);
    if (log) {
      *log << variant.method << " [" << variant.setting << "] repetition " << r
           << ": test accuracy " << format_double(test.mean) << " (best round "
           << result.server.best_round << ")\n";
    }
    outcome.tests.push_back(std::move(test));
  }
  if (outcome.tests.size() >= 2) {
    const RunSummary s = aggregate_runs(outcome.tests);
    outcome.mean = s.mean;
    outcome.std = s.std;
  } else {
    outcome.mean = outcome.tests.front().mean;
    outcome.std = std::numeric_limits<double>::quiet_NaN();
  }
  return outcome;
}

std::string summary_csv(const std::vector<VariantOutcome>& outcomes) {
  std::string out = "method,setting,repetitions,mean,std\n";
  for (const auto& o : outcomes) {
    out += o.variant.method + "," + o.variant.setting + "," + std::to_string(o.tests.size()) +
           "," + format_double(o.mean) + "," + format_double(o.std) + "\n";
  }
  return out;
}

std::vector<VariantOutcome> run_experiment(const ExperimentConfig& config,
                                           const std::vector<Variant>& variants,
                                           std::ostream* log) {
  const std::filesystem::path root = config.output_dir;
  write_file_atomic(root / "config.ini", serialize_config(config));
  std::set<std::string> dirs;
  for (const auto& v : variants)
    if (!dirs.insert(v.dir).second) throw ConfigError("duplicate variant directory " + v.dir);
  std::vector<VariantOutcome> outcomes;
  for (const auto& v : variants) {
    outcomes.push_back(run_variant(v, root / v.dir, log));
    write_file_atomic(root / "summary.csv", summary_csv(outcomes));
  }
  return outcomes;
}

std::string partition_report_csv(const PreparedData& prepared) {
  auto classes = [&](const std::vector<std::size_t>& idx) {
    std::set<int> s;
    for (std::size_t i : idx) s.insert(prepared.data.label(i));
    return s.size();
  };
  std::string out = "client,base_samples,base_classes,validation_samples,novel_samples\n";
  for (std::size_t c = 0; c < prepared.views.size(); ++c) {
    const ClientData& v = prepared.views[c];
    out += std::to_string(c) + "," + std::to_string(v.base.size()) + "," +
           std::to_string(classes(v.base)) + "," + std::to_string(v.validation.size()) + "," +
           std::to_string(v.novel.size()) + "\n";
  }
  return out;
}

}  // namespace f2l
