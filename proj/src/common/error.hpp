// Copyright 2026 The avseci Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <stdexcept>
#include <string>

namespace avseci {

// Failure classes. The numeric values double as C API status codes and CLI
// exit codes.
enum class ErrorKind : int {
  kUsage = 1,
  kData = 2,
  kNumeric = 3,
  kInternal = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Malformed file contents (WAV, ELEC, VISF, manifest, checkpoint).
class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what)
      : Error(ErrorKind::kData, what) {}
};

class UnsupportedLayoutError : public Error {
 public:
  explicit UnsupportedLayoutError(const std::string& what)
      : Error(ErrorKind::kData, what) {}
};

// Input too short for the requested analysis.
class LengthError : public Error {
 public:
  explicit LengthError(const std::string& what)
      : Error(ErrorKind::kData, what) {}
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what)
      : Error(ErrorKind::kData, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what)
      : Error(ErrorKind::kData, what) {}
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what)
      : Error(ErrorKind::kUsage, what) {}
};

// NaN/Inf in a tensor, diverged training, degenerate metric input.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what)
      : Error(ErrorKind::kNumeric, what) {}
};

class UndefinedMetricError : public Error {
 public:
  explicit UndefinedMetricError(const std::string& what)
      : Error(ErrorKind::kNumeric, what) {}
};

class InternalError : public Error {
 public:
  explicit InternalError(const std::string& what)
      : Error(ErrorKind::kInternal, what) {}
};

}  // namespace avseci
