#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "f2l/config.hpp"
#include "f2l/eval.hpp"
#include "f2l/fedsim.hpp"

namespace f2l {

// Data, split and partition for one repetition. Identical for every method
// and ablation run with the same master seed.
struct PreparedData {
  Dataset data;
  ClassSplit split;
  Partition partition;
  std::vector<ClientData> views;
};

std::uint64_t repetition_seed(std::uint64_t master_seed, std::size_t repetition);
PreparedData prepare_data(const ExperimentConfig& config, std::uint64_t rep_seed);
EvalSettings test_settings(const ExperimentConfig& config, std::uint64_t rep_seed);

std::string metrics_csv(const std::vector<StepLosses>& steps);
std::string rounds_csv(const std::vector<RoundRecord>& rounds);
std::string eval_csv(const EvalReport& report);

void save_snapshot(const ModelSnapshot& snapshot, const std::filesystem::path& dir);
ModelSnapshot load_snapshot(Method method, const std::filesystem::path& dir);

// One row of the summary table.
struct Variant {
  std::string method;   // e.g. "f2l", "fl_maml", "f2l\\T"
  std::string setting;  // e.g. "default", "lambda_mi=0.3"
  std::string dir;      // subdirectory of output_dir
  ExperimentConfig config;
};

struct VariantOutcome {
  Variant variant;
  std::vector<EvalReport> tests;  // one per repetition
  double mean = 0.0;
  double std = 0.0;  // across repetition means; NaN with a single repetition
};

std::vector<Variant> run_variants(const ExperimentConfig& config);
std::vector<Variant> baseline_variants(const ExperimentConfig& config,
                                       const std::vector<Method>& methods);
std::vector<Variant> ablation_variants(const ExperimentConfig& config);
// param is one of lambda_mi, lambda_kd, clients.
std::vector<Variant> sweep_variants(const ExperimentConfig& config, const std::string& param,
                                    const std::vector<std::string>& values);

// Trains and meta-tests every repetition of a variant, writing per-repetition
// artifacts under `dir`.
VariantOutcome run_variant(const Variant& variant, const std::filesystem::path& dir,
                           std::ostream* log = nullptr);

// Runs all variants under config.output_dir and writes config.ini and
// summary.csv there.
std::vector<VariantOutcome> run_experiment(const ExperimentConfig& config,
                                           const std::vector<Variant>& variants,
                                           std::ostream* log = nullptr);

std::string summary_csv(const std::vector<VariantOutcome>& outcomes);

// Per-client sample counts on each class side, as CSV.
std::string partition_report_csv(const PreparedData& prepared);

}  // namespace f2l
