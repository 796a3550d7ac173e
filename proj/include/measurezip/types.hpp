#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace measurezip {

using Vec3 = Eigen::Vector3d;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Rows are points / atoms. Kept row-major so a point is a contiguous slice.
using PointMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input files.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Caller violated a precondition (bad sizes, out-of-range parameters).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Factorization failure, divergence, non-finite state.
class NumericalError : public Error {
 public:
  using Error::Error;
};

inline constexpr const char* kVersion = "0.3.0";

}  // namespace measurezip
