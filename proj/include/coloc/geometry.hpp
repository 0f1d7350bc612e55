#pragma once

#include "coloc/core.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace coloc {

/// Wraps an angle onto (-pi, pi].
///
/// Uses the exact IEEE remainder so the result differs from the input by an
/// integer multiple of the Scalar 2*pi constant with no extra rounding.
template <typename Scalar>
Scalar wrap_angle(Scalar a) {
  using std::isfinite;
  using std::remainder;
  if (!isfinite(a)) throw DomainError("wrap_angle: non-finite angle");
  const Scalar pi = std::numbers::pi_v<Scalar>;
  const Scalar two_pi = Scalar(2) * pi;
  Scalar r = remainder(a, two_pi);
  if (r <= -pi) r += two_pi;
  if (r > pi) r -= two_pi;
  return r;
}

template <typename Derived>
typename Derived::PlainObject wrap_angles(const Eigen::MatrixBase<Derived>& a) {
  typename Derived::PlainObject out = a;
  for (Index k = 0; k < out.size(); ++k) out(k) = wrap_angle(out(k));
  return out;
}

/// Ground-truth vehicle state: planar position in meters and heading in
/// radians on (-pi, pi].
struct VehicleState {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  Vector3d vector() const { return {x, y, theta}; }
  static VehicleState from_vector(const Eigen::Ref<const Vector3d>& v) {
    return {v(0), v(1), wrap_angle(v(2))};
  }

  bool operator==(const VehicleState&) const = default;
};

/// A pairwise angle-of-arrival measurement. z(0) is measured at vehicle i,
/// z(1) at vehicle j.
struct AoAPair {
  Vector2d z = Vector2d::Zero();
  Matrix2d noise_cov = Matrix2d::Identity();

  bool operator==(const AoAPair&) const = default;
};

// Positions closer than this are considered co-located.
inline constexpr double kCoLocationThreshold = 1e-9;

/// Noise-free AoA pair for vehicles i and j:
///   [atan2(yj - yi, xj - xi) - theta_i, atan2(yi - yj, xi - xj) - theta_j],
/// both components wrapped. Throws DomainError for co-located vehicles.
Vector2d measure_pair(const VehicleState& xi, const VehicleState& xj);

/// Same map on a stacked 6-vector [xi; xj]; used on sigma points, whose
/// headings are not necessarily wrapped. Components are wrapped.
Vector2d measure_pair(const Eigen::Ref<const VectorXd>& x_ij);

/// Whether `target` falls inside either side-mounted array of `observer`.
/// The two arrays look out at +-pi/2 from the heading, each covering `fov`.
bool in_fov(const VehicleState& observer, const VehicleState& target, double fov);

/// measure_pair plus a N(0, noise_cov) sample, wrapped afterwards.
AoAPair simulate_measurement(const VehicleState& xi, const VehicleState& xj,
                             const Matrix2d& noise_cov, std::mt19937_64& rng);

}  // namespace coloc
