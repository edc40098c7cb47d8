#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "f2l/tensor.hpp"

namespace f2l {

// Ordered (name, tensor) list. The unit of broadcast, aggregation and
// checkpointing. Tensors are leaves that require gradients.
class ParamVector {
 public:
  ParamVector() = default;

  void add(std::string name, Tensor tensor);

  std::size_t size() const { return tensors_.size(); }
  bool empty() const { return tensors_.empty(); }
  const std::string& name(std::size_t i) const { return names_[i]; }
  const Tensor& operator[](std::size_t i) const { return tensors_[i]; }
  Tensor& operator[](std::size_t i) { return tensors_[i]; }
  // Throws std::out_of_range for unknown names.
  const Tensor& at(std::string_view name) const;

  const std::vector<std::string>& names() const { return names_; }
  const std::vector<Tensor>& tensors() const { return tensors_; }

  // Total number of scalars.
  std::size_t numel() const;

  // Deep copy into fresh leaves with zero gradients.
  ParamVector clone() const;
  void zero_grad();

  // Same names, order and shapes.
  bool same_layout(const ParamVector& other) const;

  // Concatenation of two vectors with disjoint names.
  static ParamVector concat(const ParamVector& a, const ParamVector& b);
  // Entries whose names start with `prefix`.
  ParamVector select_prefix(std::string_view prefix) const;

  friend bool operator==(const ParamVector& a, const ParamVector& b);

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> tensors_;
};

// Per-parameter gradient buffers, parallel to a ParamVector.
using Gradients = std::vector<std::vector<double>>;

Gradients gradients_of(const ParamVector& params);

std::vector<double> flatten(const ParamVector& params);
ParamVector unflatten(std::span<const double> flat, const ParamVector& layout);

// Checkpoint byte layout, all integers little-endian:
//   u32 entry count
//   per entry: u32 name length, name bytes, u32 rank, rank x u64 dims,
//              product(dims) x f64 values
std::vector<std::uint8_t> encode_params(const ParamVector& params);
ParamVector decode_params(std::span<const std::uint8_t> bytes);

void save_params(const ParamVector& params, const std::filesystem::path& path);
ParamVector load_params(const std::filesystem::path& path);

// FNV-1a over the checkpoint encoding.
std::uint64_t params_hash(const ParamVector& params);

}  // namespace f2l
