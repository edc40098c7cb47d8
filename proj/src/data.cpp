#include "f2l/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "f2l/error.hpp"
#include "f2l/io.hpp"
#include "f2l/rng.hpp"

namespace f2l {

Dataset::Dataset(std::size_t dim, std::vector<double> features, std::vector<int> labels,
                 std::string provenance)
    : dim_(dim),
      features_(std::move(features)),
      labels_(std::move(labels)),
      provenance_(std::move(provenance)) {
  if (dim_ == 0) throw std::invalid_argument("Dataset: feature dimension must be positive");
  if (features_.size() != labels_.size() * dim_) {
    throw ShapeError("Dataset: " + std::to_string(features_.size()) + " feature values for " +
                     std::to_string(labels_.size()) + " rows of width " + std::to_string(dim_));
  }
  int max_label = -1;
  for (int y : labels_) {
    if (y < 0) throw DomainError("Dataset: negative label " + std::to_string(y));
    max_label = std::max(max_label, y);
  }
  num_classes_ = static_cast<std::size_t>(max_label + 1);
  std::vector<bool> seen(num_classes_, false);
  for (int y : labels_) seen[static_cast<std::size_t>(y)] = true;
  for (std::size_t c = 0; c < num_classes_; ++c) {
    if (!seen[c]) throw DomainError("Dataset: class " + std::to_string(c) + " has no samples");
  }
}

Tensor Dataset::gather(std::span<const std::size_t> indices) const {
  std::vector<double> out;
  out.reserve(indices.size() * dim_);
  for (std::size_t i : indices) {
    const auto r = row(i);
    out.insert(out.end(), r.begin(), r.end());
  }
  return Tensor::matrix(indices.size(), dim_, std::move(out));
}

Dataset synth_gaussian(std::size_t num_classes, std::size_t per_class, std::size_t dim,
                       double separation, std::uint64_t seed) {
  if (num_classes == 0 || per_class == 0 || dim == 0) {
    throw std::invalid_argument("synth_gaussian: counts must be positive");
  }
  Rng rng(seed);
  std::vector<double> means(num_classes * dim);
  for (std::size_t c = 0; c < num_classes; ++c) {
    double norm = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
      means[c * dim + j] = rng.normal();
      norm += means[c * dim + j] * means[c * dim + j];
    }
    norm = std::sqrt(norm);
    for (std::size_t j = 0; j < dim; ++j) means[c * dim + j] *= separation / norm;
  }
  std::vector<double> features;
  std::vector<int> labels;
  features.reserve(num_classes * per_class * dim);
  labels.reserve(num_classes * per_class);
  for (std::size_t c = 0; c < num_classes; ++c) {
    for (std::size_t s = 0; s < per_class; ++s) {
      for (std::size_t j = 0; j < dim; ++j) features.push_back(means[c * dim + j] + rng.normal());
      labels.push_back(static_cast<int>(c));
    }
  }
  return Dataset(dim, std::move(features), std::move(labels), "synthetic");
}

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    cells.push_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return cells;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

[[noreturn]] void csv_error(const std::filesystem::path& path, std::size_t line,
                            const std::string& what) {
  throw ParseError(path.string() + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

Dataset load_csv(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;

  std::size_t dim = 0;
  bool have_header = false;
  std::vector<double> features;
  std::vector<int> labels;
  std::unordered_map<long long, int> dense;

  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view content = trim(line);
    if (content.empty()) continue;
    const auto cells = split_commas(content);
    if (!have_header) {
      if (cells.size() < 2 || trim(cells[0]) != "label") {
        csv_error(path, line_no, "expected header 'label,f0,...'");
      }
      for (std::size_t j = 1; j < cells.size(); ++j) {
        if (trim(cells[j]) != "f" + std::to_string(j - 1)) {
          csv_error(path, line_no, "unknown header column '" + std::string(cells[j]) + "'");
        }
      }
      dim = cells.size() - 1;
      have_header = true;
      continue;
    }
    if (cells.size() != dim + 1) {
      csv_error(path, line_no, "expected " + std::to_string(dim + 1) + " cells, got " +
                                   std::to_string(cells.size()));
    }
    const auto label_cell = trim(cells[0]);
    long long raw = 0;
    auto [lp, lec] = std::from_chars(label_cell.data(), label_cell.data() + label_cell.size(), raw);
    if (lec != std::errc() || lp != label_cell.data() + label_cell.size()) {
      csv_error(path, line_no, "non-integer label '" + std::string(label_cell) + "'");
    }
    auto [it, inserted] = dense.try_emplace(raw, static_cast<int>(dense.size()));
    labels.push_back(it->second);
    for (std::size_t j = 1; j <= dim; ++j) {
      const auto cell = trim(cells[j]);
      double v = 0.0;
      auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || p != cell.data() + cell.size() || !std::isfinite(v)) {
        csv_error(path, line_no, "non-numeric cell '" + std::string(cell) + "' in column " +
                                     std::to_string(j));
      }
      features.push_back(v);
    }
  }
  if (!have_header) csv_error(path, line_no, "empty file");
  if (labels.empty()) csv_error(path, line_no, "no data rows");
  return Dataset(dim, std::move(features), std::move(labels), path.string());
}

void save_csv(const Dataset& data, const std::filesystem::path& path) {
  std::string out = "label";
  for (std::size_t j = 0; j < data.dim(); ++j) out += ",f" + std::to_string(j);
  out += '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    out += std::to_string(data.label(i));
    for (double v : data.row(i)) {
      out += ',';
      out += format_double(v);
    }
    out += '\n';
  }
  write_file_atomic(path, out);
}

ClassSplit split_classes(std::size_t num_classes, SplitCounts counts, std::uint64_t seed) {
  if (counts.base + counts.validation + counts.novel != num_classes) {
    throw std::invalid_argument("split_classes: counts " + std::to_string(counts.base) + "/" +
                                std::to_string(counts.validation) + "/" +
                                std::to_string(counts.novel) + " do not sum to " +
                                std::to_string(num_classes) + " classes");
  }
  std::vector<int> ids(num_classes);
  std::iota(ids.begin(), ids.end(), 0);
  Rng rng(seed);
  rng.shuffle(ids);
  ClassSplit split;
  auto take = [&](std::size_t from, std::size_t n) {
    std::vector<int> v(ids.begin() + static_cast<std::ptrdiff_t>(from),
                       ids.begin() + static_cast<std::ptrdiff_t>(from + n));
    std::sort(v.begin(), v.end());
    return v;
  };
  split.base = take(0, counts.base);
  split.validation = take(counts.base, counts.validation);
  split.novel = take(counts.base + counts.validation, counts.novel);
  return split;
}

std::vector<std::size_t> apportion(std::size_t total, std::span<const double> proportions) {
  const std::size_t n = proportions.size();
  std::vector<std::size_t> counts(n, 0);
  if (n == 0) return counts;
  std::vector<double> remainder(n);
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double exact = static_cast<double>(total) * proportions[i];
    counts[i] = static_cast<std::size_t>(std::floor(exact));
    remainder[i] = exact - static_cast<double>(counts[i]);
    assigned += counts[i];
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  // Floating-point slack can leave more than n units; cycle until placed.
  for (std::size_t k = 0; assigned < total; ++k, ++assigned) counts[order[k % n]] += 1;
  while (assigned > total) {
    // Only reachable if proportions sum above one; take from the largest.
    auto it = std::max_element(counts.begin(), counts.end());
    --*it;
    --assigned;
  }
  return counts;
}

namespace {

std::vector<double> dirichlet_draw(Rng& rng, std::size_t k, double alpha) {
  std::vector<double> p(k);
  double total = 0.0;
  for (auto& v : p) {
    v = rng.gamma(alpha);
    total += v;
  }
  if (!(total > 0.0)) {
    std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(k));
  } else {
    for (auto& v : p) v /= total;
  }
  return p;
}

// Draws proportions, shuffles the class samples and deals them in blocks.
void assign_dirichlet(Rng& rng, std::vector<std::size_t> samples, std::size_t num_clients,
                      double alpha, std::vector<std::size_t>& owner) {
  const auto p = dirichlet_draw(rng, num_clients, alpha);
  const auto counts = apportion(samples.size(), p);
  rng.shuffle(samples);
  std::size_t pos = 0;
  for (std::size_t c = 0; c < num_clients; ++c)
    for (std::size_t k = 0; k < counts[c]; ++k) owner[samples[pos++]] = c;
}

}  // namespace

Partition partition(const Dataset& data, std::size_t num_clients, PartitionMode mode,
                    std::uint64_t seed, const std::vector<int>* base_classes) {
  if (num_clients == 0) throw std::invalid_argument("partition: need at least one client");
  if (num_clients > data.size()) {
    throw std::invalid_argument("partition: " + std::to_string(num_clients) +
                                " clients for " + std::to_string(data.size()) + " samples");
  }
  if (mode.kind == PartitionMode::Kind::dirichlet && !(mode.alpha > 0.0)) {
    throw DomainError("partition: Dirichlet concentration must be positive");
  }
  std::vector<std::vector<std::size_t>> by_class(data.num_classes());
  for (std::size_t i = 0; i < data.size(); ++i)
    by_class[static_cast<std::size_t>(data.label(i))].push_back(i);

  Rng rng(seed);
  std::vector<std::size_t> owner(data.size(), 0);
  if (mode.kind == PartitionMode::Kind::iid) {
    std::size_t offset = 0;
    for (auto samples : by_class) {
      rng.shuffle(samples);
      for (std::size_t j = 0; j < samples.size(); ++j)
        owner[samples[j]] = (offset + j) % num_clients;
      offset = (offset + samples.size()) % num_clients;
    }
  } else {
    for (const auto& samples : by_class)
      assign_dirichlet(rng, samples, num_clients, mode.alpha, owner);

    if (base_classes != nullptr && !base_classes->empty()) {
      for (std::size_t attempt = 0; attempt < 100; ++attempt) {
        std::vector<std::size_t> base_count(num_clients, 0);
        for (int c : *base_classes)
          for (std::size_t s : by_class.at(static_cast<std::size_t>(c))) ++base_count[owner[s]];
        if (std::find(base_count.begin(), base_count.end(), 0) == base_count.end()) break;
        const int c = (*base_classes)[attempt % base_classes->size()];
        assign_dirichlet(rng, by_class[static_cast<std::size_t>(c)], num_clients, mode.alpha,
                         owner);
      }
    }
  }

  Partition out;
  out.clients.resize(num_clients);
  for (std::size_t i = 0; i < data.size(); ++i) out.clients[owner[i]].push_back(i);
  return out;
}

std::string partition_manifest_csv(const Partition& partition) {
  std::string out = "client,sample_index\n";
  for (std::size_t c = 0; c < partition.clients.size(); ++c)
    for (std::size_t i : partition.clients[c])
      out += std::to_string(c) + "," + std::to_string(i) + "\n";
  return out;
}

std::vector<ClientData> client_views(const Dataset& data, const Partition& partition,
                                     const ClassSplit& split) {
  enum Side : std::uint8_t { none, base, validation, novel };
  std::vector<Side> side(data.num_classes(), none);
  auto mark = [&](const std::vector<int>& ids, Side s) {
    for (int c : ids) {
      if (c < 0 || static_cast<std::size_t>(c) >= side.size()) {
        throw DomainError("client_views: class id " + std::to_string(c) + " out of range");
      }
      side[static_cast<std::size_t>(c)] = s;
    }
  };
  mark(split.base, base);
  mark(split.validation, validation);
  mark(split.novel, novel);

  std::vector<ClientData> views(partition.clients.size());
  for (std::size_t c = 0; c < partition.clients.size(); ++c) {
    for (std::size_t i : partition.clients[c]) {
      switch (side[static_cast<std::size_t>(data.label(i))]) {
        case base: views[c].base.push_back(i); break;
        case validation: views[c].validation.push_back(i); break;
        case novel: views[c].novel.push_back(i); break;
        case none: break;
      }
    }
  }
  return views;
}

}  // namespace f2l
