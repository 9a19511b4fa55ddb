#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

namespace msfa {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

/// Seconds since the Unix epoch.
using Timestamp = std::int64_t;

// Error hierarchy. The C API maps each class to a distinct status code.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or out-of-contract input data / arguments.
class InputError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure could not produce a valid result.
class NumericError : public Error {
 public:
  using Error::Error;
};

class ModelFileError : public Error {
 public:
  using Error::Error;
};

class CorruptModelError : public ModelFileError {
 public:
  using ModelFileError::ModelFileError;
};

class ModelVersionError : public ModelFileError {
 public:
  using ModelFileError::ModelFileError;
};

class ChecksumError : public ModelFileError {
 public:
  using ModelFileError::ModelFileError;
};

/// Structural, bit-level equality of two dense matrices (shape and every value).
inline bool bit_equal(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         (a.size() == 0 ||
          std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0);
}

inline bool bit_equal(const Vector& a, const Vector& b) {
  return a.size() == b.size() &&
         (a.size() == 0 ||
          std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0);
}

}  // namespace msfa
