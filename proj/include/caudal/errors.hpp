#pragma once

#include <stdexcept>
#include <string>

namespace caudal {

/// Base class for all library errors.
class error : public std::runtime_error {
 public:
  explicit error(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid configuration: bad grid steps, incommensurate sample times,
/// unknown preset names, malformed config files.
class config_error : public error {
 public:
  explicit config_error(const std::string& what) : error(what) {}
};

/// Invalid input data: schema mismatches, out-of-range queries,
/// missing derivative columns, out-of-order samples.
class input_error : public error {
 public:
  explicit input_error(const std::string& what) : error(what) {}
};

/// Numerical failure: fit-quality rejection, insufficient excitation,
/// non-invertible feedforward model.
class numeric_error : public error {
 public:
  explicit numeric_error(const std::string& what) : error(what) {}
};

/// Filesystem failure; the message carries the offending path.
class io_error : public error {
 public:
  explicit io_error(const std::string& what) : error(what) {}
};

/// Query on a component that has not received data yet.
class not_ready_error : public error {
 public:
  explicit not_ready_error(const std::string& what) : error(what) {}
};

}  // namespace caudal
