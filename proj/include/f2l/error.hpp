#pragma once

#include <stdexcept>
#include <string>

namespace f2l {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Incompatible tensor or parameter shapes.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Input outside an operation's mathematical domain (log of non-positive,
// non-positive temperature, out-of-range label, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf appeared in values or gradients.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Misuse of the autodiff graph (non-scalar loss, second backward).
class GraphError : public Error {
 public:
  using Error::Error;
};

// A client pool cannot host the requested N-way K-shot episode.
class EpisodeError : public Error {
 public:
  using Error::Error;
};

// Malformed input file (CSV, checkpoint, message).
class ParseError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace f2l
