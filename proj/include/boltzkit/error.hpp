#pragma once

#include <stdexcept>
#include <string>

namespace boltzkit {

/// Base class for every error raised by the library. `kind()` is a stable
/// machine-readable tag that ends up in the CLI's structured error JSON.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

struct ConfigurationError : Error {
  explicit ConfigurationError(const std::string& w) : Error("configuration", w) {}
};
struct UnsupportedDimensionError : Error {
  explicit UnsupportedDimensionError(const std::string& w) : Error("unsupported-dimension", w) {}
};
struct RangeError : Error {
  explicit RangeError(const std::string& w) : Error("range", w) {}
};
struct GeometryError : Error {
  explicit GeometryError(const std::string& w) : Error("geometry", w) {}
};
struct UnsupportedRegimeError : Error {
  explicit UnsupportedRegimeError(const std::string& w) : Error("unsupported-regime", w) {}
};
struct InsufficientDataError : Error {
  explicit InsufficientDataError(const std::string& w) : Error("insufficient-data", w) {}
};

/// Raised when an intermediate Duhamel node leaves the representable range.
struct NumericalRangeError : Error {
  NumericalRangeError(int node, const std::string& w)
      : Error("numerical-range", w + " (node " + std::to_string(node) + ")"), node_(node) {}
  int node() const noexcept { return node_; }

 private:
  int node_;
};

struct InstabilityError : Error {
  InstabilityError(long step, const std::string& w)
      : Error("instability", w + " (step " + std::to_string(step) + ")"), step_(step) {}
  long step() const noexcept { return step_; }

 private:
  long step_;
};

struct ParseError : Error {
  ParseError(int line, const std::string& w)
      : Error("parse", "line " + std::to_string(line) + ": " + w), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

}  // namespace boltzkit
