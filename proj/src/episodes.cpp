#include "f2l/episodes.hpp"

#include <algorithm>
#include <map>

#include "f2l/error.hpp"

namespace f2l {

namespace {

std::map<int, std::vector<std::size_t>> group_by_class(const Dataset& data,
                                                       std::span<const std::size_t> pool) {
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t i : pool) groups[data.label(i)].push_back(i);
  return groups;
}

std::string describe(const TaskOrigin& o) {
  return "client " + std::to_string(o.client) + " (" + o.phase + ", round " +
         std::to_string(o.round) + ", step " + std::to_string(o.step) + ")";
}

}  // namespace

std::vector<int> MetaTask::global_labels(std::span<const int> local) const {
  std::vector<int> out;
  out.reserve(local.size());
  for (int l : local) out.push_back(class_map.at(static_cast<std::size_t>(l)));
  return out;
}

std::vector<int> to_local_labels(std::span<const int> global, std::span<const int> class_map) {
  std::vector<int> out;
  out.reserve(global.size());
  for (int g : global) {
    auto it = std::lower_bound(class_map.begin(), class_map.end(), g);
    if (it == class_map.end() || *it != g) {
      throw DomainError("label " + std::to_string(g) + " not in the task's class map");
    }
    out.push_back(static_cast<int>(it - class_map.begin()));
  }
  return out;
}

bool can_host_task(const Dataset& data, std::span<const std::size_t> pool,
                   const EpisodeShape& shape) {
  std::size_t eligible = 0;
  std::vector<std::size_t> spare;
  for (const auto& [label, samples] : group_by_class(data, pool)) {
    if (samples.size() >= shape.shot + 1) {
      ++eligible;
      spare.push_back(samples.size() - shape.shot);
    }
  }
  if (eligible < shape.way) return false;
  // Worst case: the N chosen classes are those with the fewest spare samples.
  std::sort(spare.begin(), spare.end());
  std::size_t worst = 0;
  for (std::size_t i = 0; i < shape.way; ++i) worst += spare[i];
  return worst >= shape.query;
}

MetaTask sample_task(const Dataset& data, std::span<const std::size_t> pool,
                     const EpisodeShape& shape, Rng& rng, TaskOrigin origin) {
  if (shape.way == 0 || shape.shot == 0) {
    throw std::invalid_argument("sample_task: way and shot must be positive");
  }
  const auto groups = group_by_class(data, pool);
  std::vector<int> eligible;
  for (const auto& [label, samples] : groups)
    if (samples.size() >= shape.shot + 1) eligible.push_back(label);
  if (eligible.size() < shape.way) {
    throw EpisodeError(describe(origin) + ": " + std::to_string(eligible.size()) +
                       " classes with at least " + std::to_string(shape.shot + 1) +
                       " samples, need " + std::to_string(shape.way) + " (short by " +
                       std::to_string(shape.way - eligible.size()) + ")");
  }

  // Partial Fisher-Yates: first N entries become the chosen classes.
  for (std::size_t i = 0; i < shape.way; ++i) {
    const std::size_t j = i + rng.index(eligible.size() - i);
    std::swap(eligible[i], eligible[j]);
  }
  std::vector<int> chosen(eligible.begin(), eligible.begin() + static_cast<std::ptrdiff_t>(shape.way));
  std::sort(chosen.begin(), chosen.end());

  MetaTask task;
  task.class_map = chosen;
  task.origin = std::move(origin);
  std::vector<std::size_t> remaining;
  std::vector<int> remaining_labels;
  for (std::size_t local = 0; local < chosen.size(); ++local) {
    std::vector<std::size_t> samples = groups.at(chosen[local]);
    rng.shuffle(samples);
    for (std::size_t k = 0; k < samples.size(); ++k) {
      if (k < shape.shot) {
        task.support.push_back(samples[k]);
        task.support_labels.push_back(static_cast<int>(local));
      } else {
        remaining.push_back(samples[k]);
        remaining_labels.push_back(static_cast<int>(local));
      }
    }
  }
  if (remaining.size() < shape.query) {
    throw EpisodeError(describe(task.origin) + ": " + std::to_string(remaining.size()) +
                       " samples left for a query set of " + std::to_string(shape.query) +
                       " (short by " + std::to_string(shape.query - remaining.size()) + ")");
  }
  for (std::size_t i = 0; i < shape.query; ++i) {
    const std::size_t j = i + rng.index(remaining.size() - i);
    std::swap(remaining[i], remaining[j]);
    std::swap(remaining_labels[i], remaining_labels[j]);
    task.query.push_back(remaining[i]);
    task.query_labels.push_back(remaining_labels[i]);
  }
  return task;
}

}  // namespace f2l
