#pragma once

// Shared numeric aliases and the error hierarchy used across the library.

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace ncfm {

// Row-major so that each sample (row) is contiguous in memory.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using IntVector = Eigen::VectorXi;

// Caller-owned random state. Every stochastic operation takes one by reference
// and never keeps it.
using Rng = std::mt19937_64;

inline constexpr const char* kVersion = "ncfm 0.1.0";

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Mismatched matrix dimensions.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration values or unknown configuration keys.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed input files. The message names the line/column or byte offset.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Object used in a state that does not permit the operation.
class StateError : public Error {
 public:
  using Error::Error;
};

class LookupError : public Error {
 public:
  using Error::Error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf encountered in a loss, gradient or update.
class NumericError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Whether data-parallel reductions are allowed. Strict mode runs every
// reduction sequentially in a fixed order and is bit-reproducible.
struct Execution {
  bool strict = true;
  unsigned threads = 0;  // 0 = hardware concurrency; ignored when strict
};

inline bool all_finite(const Matrix& m) { return m.allFinite(); }
inline bool all_finite(const Vector& v) { return v.allFinite(); }

}  // namespace ncfm
