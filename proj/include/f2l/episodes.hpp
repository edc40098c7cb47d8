#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "f2l/data.hpp"
#include "f2l/rng.hpp"

namespace f2l {

struct EpisodeShape {
  std::size_t way = 5;    // N
  std::size_t shot = 1;   // K
  std::size_t query = 5;  // Q, total over the episode
};

// Where a task came from, carried into error messages and manifests.
struct TaskOrigin {
  std::size_t client = 0;
  std::size_t round = 0;
  std::size_t step = 0;
  std::string phase = "train";
};

// One N-way K-shot episode. Support is class-major in class_map order.
// Local label of a sample = position of its global class in class_map.
struct MetaTask {
  std::vector<std::size_t> support;
  std::vector<std::size_t> query;
  std::vector<int> support_labels;  // local ids
  std::vector<int> query_labels;    // local ids
  std::vector<int> class_map;       // sorted global ids
  TaskOrigin origin;

  std::vector<int> global_labels(std::span<const int> local) const;
};

// Samples a task from `pool` (sample indices into `data`). Eligible classes
// have at least K+1 samples in the pool; N of them are drawn uniformly, K
// support samples per class, then Q query samples uniformly from what remains
// of those classes.
MetaTask sample_task(const Dataset& data, std::span<const std::size_t> pool,
                     const EpisodeShape& shape, Rng& rng, TaskOrigin origin = {});

// True when sample_task cannot fail on this pool.
bool can_host_task(const Dataset& data, std::span<const std::size_t> pool,
                   const EpisodeShape& shape);

// Local id of each global label under class_map. Throws DomainError when a
// label is not in the map.
std::vector<int> to_local_labels(std::span<const int> global, std::span<const int> class_map);

}  // namespace f2l
