#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "f2l/config.hpp"
#include "f2l/error.hpp"
#include "f2l/experiment.hpp"
#include "f2l/io.hpp"

namespace {

struct CommonOptions {
  std::string config_path;
  std::map<std::string, std::string> overrides;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config_path, "Experiment config file")->required();
  for (const auto& key : f2l::config_keys()) {
    cmd->add_option_function<std::string>(
        "--" + key.name,
        [&opts, name = key.name](const std::string& v) { opts.overrides[name] = v; },
        "Override [" + key.section + "] " + key.name);
  }
}

f2l::ExperimentConfig load(const CommonOptions& opts) {
  f2l::ExperimentConfig config = f2l::parse_config(opts.config_path);
  for (const auto& [key, value] : opts.overrides) f2l::set_config_value(config, key, value);
  f2l::validate(config);
  return config;
}

void print_summary(const std::vector<f2l::VariantOutcome>& outcomes) {
  std::cout << f2l::summary_csv(outcomes);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated few-shot learning simulator"};
  app.require_subcommand(1);

  CommonOptions run_opts, baseline_opts, ablate_opts, sweep_opts, partition_opts, eval_opts;

  auto* run_cmd = app.add_subcommand("run", "Train and meta-test the configured method");
  add_common(run_cmd, run_opts);

  auto* baseline_cmd = app.add_subcommand("baseline", "Train and meta-test baseline methods");
  add_common(baseline_cmd, baseline_opts);
  std::vector<std::string> methods{"local", "fl_maml", "fl_proto"};
  baseline_cmd->add_option("--methods", methods, "Methods to run")->delimiter(',');

  auto* ablate_cmd = app.add_subcommand("ablate", "Run the full model and its three ablations");
  add_common(ablate_cmd, ablate_opts);

  auto* sweep_cmd = app.add_subcommand("sweep", "Sweep one parameter");
  add_common(sweep_cmd, sweep_opts);
  std::string sweep_param;
  std::vector<std::string> sweep_values;
  sweep_cmd->add_option("--param", sweep_param, "lambda_mi, lambda_kd or clients")
      ->required()
      ->check(CLI::IsMember({"lambda_mi", "lambda_kd", "clients"}));
  sweep_cmd->add_option("--values", sweep_values, "Comma-separated values")
      ->required()
      ->delimiter(',');

  auto* partition_cmd = app.add_subcommand("partition", "Write the partition without training");
  add_common(partition_cmd, partition_opts);
  std::size_t partition_rep = 0;
  partition_cmd->add_option("--repetition", partition_rep, "Repetition index");

  auto* eval_cmd = app.add_subcommand("eval", "Meta-test saved checkpoints");
  add_common(eval_cmd, eval_opts);
  std::string checkpoint_dir;
  std::size_t eval_rep = 0;
  eval_cmd->add_option("--checkpoint-dir", checkpoint_dir, "Directory holding checkpoint_*.bin")
      ->required();
  eval_cmd->add_option("--repetition", eval_rep, "Repetition the checkpoints belong to");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      const auto config = load(run_opts);
      print_summary(f2l::run_experiment(config, f2l::run_variants(config), &std::cerr));
    } else if (baseline_cmd->parsed()) {
      const auto config = load(baseline_opts);
      std::vector<f2l::Method> ms;
      for (const auto& m : methods) ms.push_back(f2l::parse_method(m));
      print_summary(f2l::run_experiment(config, f2l::baseline_variants(config, ms), &std::cerr));
    } else if (ablate_cmd->parsed()) {
      const auto config = load(ablate_opts);
      print_summary(f2l::run_experiment(config, f2l::ablation_variants(config), &std::cerr));
    } else if (sweep_cmd->parsed()) {
      const auto config = load(sweep_opts);
      print_summary(f2l::run_experiment(
          config, f2l::sweep_variants(config, sweep_param, sweep_values), &std::cerr));
    } else if (partition_cmd->parsed()) {
      const auto config = load(partition_opts);
      const auto prepared =
          f2l::prepare_data(config, f2l::repetition_seed(config.train.seed, partition_rep));
      const std::filesystem::path root = config.output_dir;
      f2l::write_file_atomic(root / "partition.csv", f2l::partition_manifest_csv(prepared.partition));
      std::cout << f2l::partition_report_csv(prepared);
    } else if (eval_cmd->parsed()) {
      const auto config = load(eval_opts);
      const std::uint64_t seed = f2l::repetition_seed(config.train.seed, eval_rep);
      const auto prepared = f2l::prepare_data(config, seed);
      const auto models = f2l::load_snapshot(config.train.method, checkpoint_dir);
      auto report = f2l::meta_test(models, prepared.data, prepared.views,
                                   f2l::test_settings(config, seed));
      std::cout << "tasks " << report.task_count << " mean " << f2l::format_double(report.mean)
                << " std " << f2l::format_double(report.std) << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
