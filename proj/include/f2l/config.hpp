#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "f2l/data.hpp"
#include "f2l/fedsim.hpp"

namespace f2l {

enum class DataSource { synthetic, csv };

struct DataConfig {
  DataSource source = DataSource::synthetic;
  std::string csv_path;
  std::size_t num_classes = 24;
  std::size_t per_class = 100;
  std::size_t feature_dim = 16;
  double separation = 3.0;
  SplitCounts split{14, 5, 5};
  PartitionMode partition = PartitionMode::iid();
};

struct ExperimentConfig {
  TrainConfig train;
  DataConfig data;
  std::string output_dir = "runs";
  std::size_t repetitions = 10;
  std::size_t test_tasks = 100;
};

// One entry per accepted key; `section` is the bracketed header it lives under.
struct ConfigKey {
  std::string name;
  std::string section;
};

const std::vector<ConfigKey>& config_keys();

// Assigns one key from its textual value. Throws ConfigError naming the key.
void set_config_value(ExperimentConfig& config, std::string_view key, std::string_view value);
std::string get_config_value(const ExperimentConfig& config, std::string_view key);

// Constraint check; throws ConfigError listing every violation.
void validate(const ExperimentConfig& config);

// `key = value` lines, `#` comments, `[section]` headers. Missing keys keep
// their defaults. Throws ConfigError listing every bad line.
ExperimentConfig parse_config_text(std::string_view text, std::string_view origin = "<config>");
ExperimentConfig parse_config(const std::filesystem::path& path);

std::string serialize_config(const ExperimentConfig& config);

}  // namespace f2l
