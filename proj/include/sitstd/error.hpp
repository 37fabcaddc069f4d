#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sitstd {

enum class ErrorKind {
  InvalidArgument,
  DimensionMismatch,
  GridMismatch,
  EmptyInput,
  EmptyKernel,
  Extent,
  UndefinedObjective,
  UndefinedMetric,
  SearchFailed,
  BaselineUnavailable,
  NotFound,
  Format,
  Io,
};

std::string_view to_string(ErrorKind kind);

// All library failures are reported through this type; `kind()` lets callers
// (and the CLI exit-code table) distinguish them without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace sitstd
