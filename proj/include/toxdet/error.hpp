#pragma once

#include <stdexcept>
#include <string>

namespace toxdet {

// Base for every error raised by the library. CLI maps these to exit codes.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input file (bad column, bad number, inconsistent row width).
class FormatError : public Error {
 public:
  using Error::Error;
};

// Value outside its documented domain (e.g. annotation score not in -2..2).
class RangeError : public Error {
 public:
  using Error::Error;
};

// Cross-record consistency violation (duplicate id, dangling reference,
// manifest hash mismatch).
class IntegrityError : public Error {
 public:
  using Error::Error;
};

// Row-count / boundary mismatch between aligned sequences.
class AlignmentError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration field. Message names the field.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Missing key in a store or table that the contract requires to be present.
class LookupError : public Error {
 public:
  using Error::Error;
};

// A required external dependency (pretrained encoder) is not available.
class DependencyError : public Error {
 public:
  using Error::Error;
};

// Training diverged or hit a non-finite loss.
class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace toxdet
