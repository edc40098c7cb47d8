#include "f2l/config.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <functional>
#include <sstream>

#include "f2l/error.hpp"
#include "f2l/io.hpp"

namespace f2l {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string shortest(double v) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), end);
}

std::uint64_t to_u64(std::string_view key, std::string_view text) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError(std::string(key) + ": expected a non-negative integer, got '" +
                      std::string(text) + "'");
  }
  return v;
}

std::size_t to_size(std::string_view key, std::string_view text) {
  return static_cast<std::size_t>(to_u64(key, text));
}

double to_double(std::string_view key, std::string_view text) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v)) {
    throw ConfigError(std::string(key) + ": expected a finite number, got '" +
                      std::string(text) + "'");
  }
  return v;
}

bool to_bool(std::string_view key, std::string_view text) {
  if (text == "true") return true;
  if (text == "false") return false;
  throw ConfigError(std::string(key) + ": expected true or false, got '" + std::string(text) + "'");
}

template <typename Enum, std::size_t N>
Enum to_enum(std::string_view key, std::string_view text,
             const std::array<std::pair<std::string_view, Enum>, N>& names) {
  for (const auto& [name, value] : names)
    if (name == text) return value;
  std::string allowed;
  for (const auto& [name, value] : names) allowed += (allowed.empty() ? "" : "|") + std::string(name);
  throw ConfigError(std::string(key) + ": expected one of " + allowed + ", got '" +
                    std::string(text) + "'");
}

template <typename Enum, std::size_t N>
std::string from_enum(Enum v, const std::array<std::pair<std::string_view, Enum>, N>& names) {
  for (const auto& [name, value] : names)
    if (value == v) return std::string(name);
  return "?";
}

constexpr std::array<std::pair<std::string_view, Method>, 4> kMethods{{
    {"f2l", Method::f2l},
    {"local", Method::local},
    {"fl_maml", Method::fl_maml},
    {"fl_proto", Method::fl_proto},
}};
constexpr std::array<std::pair<std::string_view, DataSource>, 2> kSources{{
    {"synthetic", DataSource::synthetic},
    {"csv", DataSource::csv},
}};
constexpr std::array<std::pair<std::string_view, PartitionMode::Kind>, 2> kPartitions{{
    {"iid", PartitionMode::Kind::iid},
    {"dirichlet", PartitionMode::Kind::dirichlet},
}};
constexpr std::array<std::pair<std::string_view, MiConfidenceSource>, 2> kMiSources{{
    {"post_finetune", MiConfidenceSource::post_finetune},
    {"pre_finetune", MiConfidenceSource::pre_finetune},
}};

struct KeyHandler {
  ConfigKey key;
  std::function<void(ExperimentConfig&, std::string_view)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define F2L_SIZE_KEY(section, name, field)                                              \
  KeyHandler {                                                                          \
    {name, section}, [](ExperimentConfig& c, std::string_view v) { c.field = to_size(name, v); }, \
        [](const ExperimentConfig& c) { return std::to_string(c.field); }               \
  }
#define F2L_DOUBLE_KEY(section, name, field)                                             \
  KeyHandler {                                                                           \
    {name, section}, [](ExperimentConfig& c, std::string_view v) { c.field = to_double(name, v); }, \
        [](const ExperimentConfig& c) { return shortest(c.field); }                      \
  }

const std::vector<KeyHandler>& handlers() {
  static const std::vector<KeyHandler> table = {
      {{"method", "experiment"},
       [](ExperimentConfig& c, std::string_view v) { c.train.method = to_enum("method", v, kMethods); },
       [](const ExperimentConfig& c) { return from_enum(c.train.method, kMethods); }},
      {{"seed", "experiment"},
       [](ExperimentConfig& c, std::string_view v) { c.train.seed = to_u64("seed", v); },
       [](const ExperimentConfig& c) { return std::to_string(c.train.seed); }},
      F2L_SIZE_KEY("experiment", "repetitions", repetitions),
      {{"output_dir", "experiment"},
       [](ExperimentConfig& c, std::string_view v) { c.output_dir = std::string(v); },
       [](const ExperimentConfig& c) { return c.output_dir; }},
      F2L_SIZE_KEY("experiment", "workers", train.workers),

      {{"source", "data"},
       [](ExperimentConfig& c, std::string_view v) { c.data.source = to_enum("source", v, kSources); },
       [](const ExperimentConfig& c) { return from_enum(c.data.source, kSources); }},
      {{"csv_path", "data"},
       [](ExperimentConfig& c, std::string_view v) { c.data.csv_path = std::string(v); },
       [](const ExperimentConfig& c) { return c.data.csv_path; }},
      F2L_SIZE_KEY("data", "num_classes", data.num_classes),
      F2L_SIZE_KEY("data", "per_class", data.per_class),
      F2L_SIZE_KEY("data", "feature_dim", data.feature_dim),
      F2L_DOUBLE_KEY("data", "separation", data.separation),
      F2L_SIZE_KEY("data", "split_base", data.split.base),
      F2L_SIZE_KEY("data", "split_validation", data.split.validation),
      F2L_SIZE_KEY("data", "split_novel", data.split.novel),
      {{"partition", "data"},
       [](ExperimentConfig& c, std::string_view v) {
         c.data.partition.kind = to_enum("partition", v, kPartitions);
       },
       [](const ExperimentConfig& c) { return from_enum(c.data.partition.kind, kPartitions); }},
      F2L_DOUBLE_KEY("data", "dirichlet_alpha", data.partition.alpha),

      F2L_SIZE_KEY("model", "hidden_dim", train.hidden_dim),

      F2L_SIZE_KEY("train", "n_way", train.shape.way),
      F2L_SIZE_KEY("train", "k_shot", train.shape.shot),
      F2L_SIZE_KEY("train", "query_size", train.shape.query),
      F2L_SIZE_KEY("train", "clients", train.num_clients),
      F2L_SIZE_KEY("train", "rounds", train.rounds),
      F2L_SIZE_KEY("train", "local_steps", train.local_steps),
      F2L_DOUBLE_KEY("train", "lr_finetune", train.lr_finetune),
      F2L_DOUBLE_KEY("train", "lr_client", train.lr_client),
      F2L_DOUBLE_KEY("train", "lr_server", train.lr_server),
      F2L_DOUBLE_KEY("train", "weight_decay", train.weight_decay),
      F2L_DOUBLE_KEY("train", "lambda_mi", train.lambda_mi),
      F2L_DOUBLE_KEY("train", "lambda_kd", train.lambda_kd),
      {{"decouple", "train"},
       [](ExperimentConfig& c, std::string_view v) { c.train.decouple = to_bool("decouple", v); },
       [](const ExperimentConfig& c) { return std::string(c.train.decouple ? "true" : "false"); }},
      {{"mi_confidence_source", "train"},
       [](ExperimentConfig& c, std::string_view v) {
         c.train.mi_confidence_source = to_enum("mi_confidence_source", v, kMiSources);
       },
       [](const ExperimentConfig& c) { return from_enum(c.train.mi_confidence_source, kMiSources); }},

      F2L_SIZE_KEY("eval", "eval_every", train.eval_every),
      F2L_SIZE_KEY("eval", "val_tasks", train.val_tasks),
      F2L_SIZE_KEY("eval", "test_tasks", test_tasks),
  };
  return table;
}

#undef F2L_SIZE_KEY
#undef F2L_DOUBLE_KEY

const KeyHandler* find_handler(std::string_view key) {
  for (const auto& h : handlers())
    if (h.key.name == key) return &h;
  return nullptr;
}

std::string join_lines(const std::vector<std::string>& lines) {
  std::string out;
  for (const auto& l : lines) out += (out.empty() ? "" : "\n") + l;
  return out;
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> out;
    for (const auto& h : handlers()) out.push_back(h.key);
    return out;
  }();
  return keys;
}

void set_config_value(ExperimentConfig& config, std::string_view key, std::string_view value) {
  const KeyHandler* h = find_handler(key);
  if (!h) throw ConfigError("unknown key '" + std::string(key) + "'");
  h->set(config, value);
}

std::string get_config_value(const ExperimentConfig& config, std::string_view key) {
  const KeyHandler* h = find_handler(key);
  if (!h) throw ConfigError("unknown key '" + std::string(key) + "'");
  return h->get(config);
}

void validate(const ExperimentConfig& c) {
  std::vector<std::string> bad;
  auto require = [&](bool ok, std::string_view key, std::string_view what) {
    if (!ok) bad.push_back(std::string(key) + ": " + std::string(what));
  };
  const TrainConfig& t = c.train;
  require(t.lambda_mi >= 0.0 && t.lambda_mi <= 1.0, "lambda_mi", "must lie in [0, 1]");
  require(t.lambda_kd >= 0.0 && t.lambda_kd <= 1.0, "lambda_kd", "must lie in [0, 1]");
  require(t.lr_finetune > 0.0, "lr_finetune", "must be positive");
  require(t.lr_client > 0.0, "lr_client", "must be positive");
  require(t.lr_server > 0.0, "lr_server", "must be positive");
  require(t.weight_decay >= 0.0, "weight_decay", "must be non-negative");
  require(t.shape.way >= 2, "n_way", "must be at least 2");
  require(t.shape.shot >= 1, "k_shot", "must be at least 1");
  require(t.shape.query >= 1, "query_size", "must be at least 1");
  require(t.num_clients >= 1, "clients", "must be at least 1");
  require(t.hidden_dim >= 1, "hidden_dim", "must be at least 1");
  require(t.workers >= 1, "workers", "must be at least 1");
  require(c.repetitions >= 1, "repetitions", "must be at least 1");
  require(c.test_tasks >= 1, "test_tasks", "must be at least 1");
  require(!c.output_dir.empty(), "output_dir", "must not be empty");
  const DataConfig& d = c.data;
  require(d.partition.alpha > 0.0, "dirichlet_alpha", "must be positive");
  require(d.split.base >= t.shape.way, "split_base", "must be at least n_way");
  require(d.split.novel >= t.shape.way, "split_novel", "must be at least n_way");
  if (d.source == DataSource::synthetic) {
    require(d.num_classes >= 1, "num_classes", "must be at least 1");
    require(d.per_class >= 1, "per_class", "must be at least 1");
    require(d.feature_dim >= 1, "feature_dim", "must be at least 1");
    require(d.separation >= 0.0, "separation", "must be non-negative");
    require(d.split.base + d.split.validation + d.split.novel == d.num_classes, "split_base",
            "split_base + split_validation + split_novel must equal num_classes");
  } else {
    require(!d.csv_path.empty(), "csv_path", "required when source = csv");
  }
  if (!bad.empty()) throw ConfigError(join_lines(bad));
}

ExperimentConfig parse_config_text(std::string_view text, std::string_view origin) {
  ExperimentConfig config;
  std::vector<std::string> bad;
  std::string section;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string where = std::string(origin) + ":" + std::to_string(line_no) + ": ";
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        bad.push_back(where + "unterminated section header");
        continue;
      }
      section = std::string(trim(line.substr(1, line.size() - 2)));
      static const std::array<std::string_view, 5> kSections{"experiment", "data", "model",
                                                             "train", "eval"};
      if (std::find(kSections.begin(), kSections.end(), section) == kSections.end()) {
        bad.push_back(where + "unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      bad.push_back(where + "expected 'key = value'");
      continue;
    }
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    const KeyHandler* h = find_handler(key);
    if (!h) {
      bad.push_back(where + "unknown key '" + std::string(key) + "'");
      continue;
    }
    if (!section.empty() && h->key.section != section) {
      bad.push_back(where + "key '" + std::string(key) + "' belongs in [" + h->key.section + "]");
      continue;
    }
    try {
      h->set(config, value);
    } catch (const ConfigError& e) {
      bad.push_back(where + e.what());
    }
  }
  if (!bad.empty()) throw ConfigError(join_lines(bad));
  try {
    validate(config);
  } catch (const ConfigError& e) {
    throw ConfigError(std::string(origin) + ": " + e.what());
  }
  return config;
}

ExperimentConfig parse_config(const std::filesystem::path& path) {
  return parse_config_text(read_file(path), path.string());
}

std::string serialize_config(const ExperimentConfig& config) {
  std::string out;
  std::string section;
  for (const auto& h : handlers()) {
    if (h.key.section != section) {
      if (!section.empty()) out += "\n";
      section = h.key.section;
      out += "[" + section + "]\n";
    }
    out += h.key.name + " = " + h.get(config) + "\n";
  }
  return out;
}

}  // namespace f2l
