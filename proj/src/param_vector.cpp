#include "f2l/param_vector.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "f2l/error.hpp"
#include "f2l/io.hpp"

namespace f2l {

void ParamVector::add(std::string name, Tensor tensor) {
  for (const auto& n : names_) {
    if (n == name) throw std::invalid_argument("ParamVector: duplicate name " + name);
  }
  names_.push_back(std::move(name));
  tensors_.push_back(std::move(tensor));
}

const Tensor& ParamVector::at(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return tensors_[i];
  throw std::out_of_range("ParamVector: no parameter named " + std::string(name));
}

std::size_t ParamVector::numel() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += t.size();
  return n;
}

ParamVector ParamVector::clone() const {
  ParamVector out;
  for (std::size_t i = 0; i < size(); ++i) {
    const auto v = tensors_[i].values();
    out.add(names_[i], Tensor(tensors_[i].shape(), {v.begin(), v.end()}, true));
  }
  return out;
}

void ParamVector::zero_grad() {
  for (auto& t : tensors_) t.zero_grad();
}

bool ParamVector::same_layout(const ParamVector& other) const {
  if (size() != other.size()) return false;
  for (std::size_t i = 0; i < size(); ++i) {
    if (names_[i] != other.names_[i]) return false;
    if (tensors_[i].shape() != other.tensors_[i].shape()) return false;
  }
  return true;
}

ParamVector ParamVector::concat(const ParamVector& a, const ParamVector& b) {
  ParamVector out;
  for (std::size_t i = 0; i < a.size(); ++i) out.add(a.names_[i], a.tensors_[i]);
  for (std::size_t i = 0; i < b.size(); ++i) out.add(b.names_[i], b.tensors_[i]);
  return out;
}

ParamVector ParamVector::select_prefix(std::string_view prefix) const {
  ParamVector out;
  for (std::size_t i = 0; i < size(); ++i)
    if (names_[i].starts_with(prefix)) out.add(names_[i], tensors_[i]);
  return out;
}

bool operator==(const ParamVector& a, const ParamVector& b) {
  if (!a.same_layout(b)) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto x = a.tensors_[i].values();
    const auto y = b.tensors_[i].values();
    if (std::memcmp(x.data(), y.data(), x.size() * sizeof(double)) != 0) return false;
  }
  return true;
}

Gradients gradients_of(const ParamVector& params) {
  Gradients g;
  g.reserve(params.size());
  for (const auto& t : params.tensors()) g.emplace_back(t.grad().begin(), t.grad().end());
  return g;
}

std::vector<double> flatten(const ParamVector& params) {
  std::vector<double> flat;
  flat.reserve(params.numel());
  for (const auto& t : params.tensors()) flat.insert(flat.end(), t.values().begin(), t.values().end());
  return flat;
}

ParamVector unflatten(std::span<const double> flat, const ParamVector& layout) {
  if (flat.size() != layout.numel()) {
    throw ShapeError("unflatten: vector of length " + std::to_string(flat.size()) +
                     " does not match layout with " + std::to_string(layout.numel()) +
                     " values");
  }
  ParamVector out;
  std::size_t offset = 0;
  for (std::size_t i = 0; i < layout.size(); ++i) {
    const std::size_t n = layout[i].size();
    out.add(layout.name(i),
            Tensor(layout[i].shape(),
                   std::vector<double>(flat.begin() + offset, flat.begin() + offset + n), true));
    offset += n;
  }
  return out;
}

namespace {

class ByteWriter {
 public:
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
  void bytes(std::string_view s) { out_.insert(out_.end(), s.begin(), s.end()); }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  void put(std::uint64_t v, int width) {
    for (int i = 0; i < width; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> in) : in_(in) {}
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  double f64() { return std::bit_cast<double>(get(8)); }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == in_.size(); }
  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) {
      throw ParseError("checkpoint truncated at byte " + std::to_string(pos_));
    }
  }
  std::uint64_t get(int width) {
    need(static_cast<std::size_t>(width));
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v |= std::uint64_t{in_[pos_ + i]} << (8 * i);
    pos_ += static_cast<std::size_t>(width);
    return v;
  }
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_params(const ParamVector& params) {
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& name = params.name(i);
    const auto& shape = params[i].shape();
    w.u32(static_cast<std::uint32_t>(name.size()));
    w.bytes(name);
    w.u32(static_cast<std::uint32_t>(shape.size()));
    for (std::size_t d : shape) w.u64(d);
    for (double v : params[i].values()) w.f64(v);
  }
  return w.take();
}

ParamVector decode_params(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  const std::uint32_t count = r.u32();
  ParamVector out;
  for (std::uint32_t e = 0; e < count; ++e) {
    const std::uint32_t name_len = r.u32();
    std::string name = r.bytes(name_len);
    const std::uint32_t rank = r.u32();
    if (rank > 8) throw ParseError("checkpoint: implausible rank for " + name);
    Shape shape(rank);
    for (auto& d : shape) d = r.u64();
    const std::size_t n = shape_size(shape);
    if (n > r.remaining() / 8) throw ParseError("checkpoint truncated in " + name);
    std::vector<double> values(n);
    for (auto& v : values) v = r.f64();
    out.add(std::move(name), Tensor(std::move(shape), std::move(values), true));
  }
  if (!r.done()) throw ParseError("checkpoint: trailing bytes after last entry");
  return out;
}

void save_params(const ParamVector& params, const std::filesystem::path& path) {
  const auto bytes = encode_params(params);
  write_file_atomic(path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

ParamVector load_params(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_params(bytes);
}

std::uint64_t params_hash(const ParamVector& params) {
  return fnv1a(encode_params(params));
}

}  // namespace f2l
