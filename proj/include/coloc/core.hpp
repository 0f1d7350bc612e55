#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>

namespace coloc {

// Dynamic-size Eigen aliases templated on scalar, in the spirit of Eigen's own
// VectorX<T> / MatrixX<T>.
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Eigen::Index;
using Eigen::Matrix2d;
using Eigen::Matrix3d;
using Eigen::MatrixXd;
using Eigen::Vector2d;
using Eigen::Vector3d;
using Eigen::VectorXd;

using VehicleId = std::size_t;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Dimension of a single vehicle state (x, y, theta).
inline constexpr Index kStateDim = 3;
// Dimension of one pairwise AoA measurement.
inline constexpr Index kMeasDim = 2;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input: out-of-range arguments, inconsistent dimensions, broken invariants.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Factorization failures, singular systems, non-finite results.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Malformed scenario or config documents.
class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace coloc
