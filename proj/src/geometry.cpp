#include "coloc/geometry.hpp"

#include "coloc/gaussian.hpp"

namespace coloc {
namespace {

double bearing(double from_x, double from_y, double to_x, double to_y) {
  const double dx = to_x - from_x;
  const double dy = to_y - from_y;
  if (std::hypot(dx, dy) < kCoLocationThreshold)
    throw DomainError("bearing undefined: vehicles are co-located");
  return std::atan2(dy, dx);
}

}  // namespace

Vector2d measure_pair(const VehicleState& xi, const VehicleState& xj) {
  return {wrap_angle(bearing(xi.x, xi.y, xj.x, xj.y) - xi.theta),
          wrap_angle(bearing(xj.x, xj.y, xi.x, xi.y) - xj.theta)};
}

Vector2d measure_pair(const Eigen::Ref<const VectorXd>& x_ij) {
  if (x_ij.size() != 2 * kStateDim) throw DomainError("measure_pair: expected a 6-vector");
  if (!x_ij.allFinite()) throw DomainError("measure_pair: non-finite state");
  return {wrap_angle(bearing(x_ij(0), x_ij(1), x_ij(3), x_ij(4)) - x_ij(2)),
          wrap_angle(bearing(x_ij(3), x_ij(4), x_ij(0), x_ij(1)) - x_ij(5))};
}

bool in_fov(const VehicleState& observer, const VehicleState& target, double fov) {
  if (!(fov > 0.0 && fov <= kPi)) throw DomainError("in_fov: fov must lie in (0, pi]");
  const double relative =
      wrap_angle(bearing(observer.x, observer.y, target.x, target.y) - observer.theta);
  if (fov == kPi) return true;
  const double half = 0.5 * fov + 1e-12;
  return std::abs(wrap_angle(relative - 0.5 * kPi)) <= half ||
         std::abs(wrap_angle(relative + 0.5 * kPi)) <= half;
}

AoAPair simulate_measurement(const VehicleState& xi, const VehicleState& xj,
                             const Matrix2d& noise_cov, std::mt19937_64& rng) {
  const Vector2d clean = measure_pair(xi, xj);
  const Gaussiand noise(Vector2d::Zero(), noise_cov);
  validate(noise, "simulate_measurement noise");
  const Vector2d drawn = clean + sample(noise, rng);
  return {wrap_angles(drawn), noise_cov};
}

}  // namespace coloc
