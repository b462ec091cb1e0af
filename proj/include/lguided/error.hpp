#pragma once

#include <stdexcept>
#include <string>

namespace lguided {

// Error taxonomy mirrored by the CLI exit codes:
//   usage/config -> 2, data/parse -> 3, I/O -> 4.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Incompatible tensor shapes at a call site.
struct ShapeError : Error {
  using Error::Error;
};

// Caller violated an API precondition (bad flag combination, empty input, ...).
struct UsageError : Error {
  using Error::Error;
};

// Inconsistent model configuration (dimension constraints, layer counts, ...).
struct ConfigError : Error {
  using Error::Error;
};

// Malformed input file contents.
struct ParseError : Error {
  using Error::Error;
};

// Dataset-level problems (label coverage, unknown ids, ...).
struct DataError : Error {
  using Error::Error;
};

// Filesystem and serialization failures, including corrupt containers.
struct IoError : Error {
  using Error::Error;
};

}  // namespace lguided
