#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "f2l/tensor.hpp"

namespace f2l {

// n x d feature matrix with dense global class ids in [0, num_classes).
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::size_t dim, std::vector<double> features, std::vector<int> labels,
          std::string provenance);

  std::size_t size() const { return labels_.size(); }
  std::size_t dim() const { return dim_; }
  std::size_t num_classes() const { return num_classes_; }
  const std::string& provenance() const { return provenance_; }

  std::span<const double> row(std::size_t i) const {
    return {features_.data() + i * dim_, dim_};
  }
  int label(std::size_t i) const { return labels_[i]; }
  const std::vector<int>& labels() const { return labels_; }
  const std::vector<double>& features() const { return features_; }

  // Stacks the selected rows into a constant [indices.size() x d] tensor.
  Tensor gather(std::span<const std::size_t> indices) const;

 private:
  std::size_t dim_ = 0;
  std::vector<double> features_;
  std::vector<int> labels_;
  std::size_t num_classes_ = 0;
  std::string provenance_;
};

// Class c is centered at separation * u_c for a random unit direction u_c,
// with isotropic unit-variance noise. Rows are class-major.
Dataset synth_gaussian(std::size_t num_classes, std::size_t per_class, std::size_t dim,
                       double separation, std::uint64_t seed);

// Header `label,f0,...,f{d-1}`. Labels are arbitrary integers, re-indexed
// densely in first-appearance order.
Dataset load_csv(const std::filesystem::path& path);
void save_csv(const Dataset& data, const std::filesystem::path& path);

struct ClassSplit {
  std::vector<int> base;
  std::vector<int> validation;
  std::vector<int> novel;
};

struct SplitCounts {
  std::size_t base = 0;
  std::size_t validation = 0;
  std::size_t novel = 0;
};

// Uniformly random disjoint split of [0, num_classes); each side sorted.
ClassSplit split_classes(std::size_t num_classes, SplitCounts counts, std::uint64_t seed);

struct PartitionMode {
  enum class Kind { iid, dirichlet };
  Kind kind = Kind::iid;
  double alpha = 1.0;

  static PartitionMode iid() { return {}; }
  static PartitionMode dirichlet(double alpha) { return {Kind::dirichlet, alpha}; }
};

// Per-client sample indices, each list sorted ascending.
struct Partition {
  std::vector<std::vector<std::size_t>> clients;

  std::size_t num_clients() const { return clients.size(); }
};

// iid: each class's shuffled samples are dealt round-robin, so per-class
// counts differ by at most one across clients.
// dirichlet: per class, p ~ Dir(alpha * 1_I), counts by largest-remainder
// apportionment, shuffled samples assigned in contiguous blocks by client id.
// When `base_classes` is given, a client holding no base-class sample gets a
// fresh draw for one base class (cycling), up to 100 times.
Partition partition(const Dataset& data, std::size_t num_clients, PartitionMode mode,
                    std::uint64_t seed, const std::vector<int>* base_classes = nullptr);

// Largest-remainder rounding of total * proportions; ties go to the lower
// index. Sums to `total` exactly.
std::vector<std::size_t> apportion(std::size_t total, std::span<const double> proportions);

// Partition manifest, `client,sample_index` rows.
std::string partition_manifest_csv(const Partition& partition);

// One client's samples split by class side.
struct ClientData {
  std::vector<std::size_t> base;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> novel;
};

std::vector<ClientData> client_views(const Dataset& data, const Partition& partition,
                                     const ClassSplit& split);

}  // namespace f2l
