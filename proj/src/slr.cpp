#include "coloc/slr.hpp"

#include <cmath>

namespace coloc {

double correct_sigma_angle(double raw, double reference) {
  if (!std::isfinite(raw) || !std::isfinite(reference))
    throw DomainError("correct_sigma_angle: non-finite angle");
  double m = std::fmod(reference - raw + kPi, kTwoPi);
  if (m < 0.0) m += kTwoPi;
  if (m >= kTwoPi) m = 0.0;
  double out = reference + (kPi - m);
  // Rounding in the final addition can overshoot the pi bound by an ulp.
  while (out - reference > kPi) out = std::nextafter(out, reference);
  while (reference - out > kPi) out = std::nextafter(out, reference);
  return out;
}

namespace {

void check_pair_belief(const Gaussiand& belief) {
  if (belief.dim() != 2 * kStateDim)
    throw DomainError("slr_linearize: joint belief must be 6-dimensional");
}

}  // namespace

LinearModel slr_linearize(const Gaussiand& joint_belief, const AoAPair& measurement) {
  check_pair_belief(joint_belief);
  const Vector2d reference = measurement.z;
  return statistical_linear_regression(
      joint_belief, [](const VectorXd& x) { return VectorXd(measure_pair(x)); },
      [&](const VectorXd& z) { return VectorXd(correct_sigma_angles(z, reference)); });
}

LinearModel slr_linearize(const Gaussiand& joint_belief) {
  check_pair_belief(joint_belief);
  // Reference is the weighted circular mean of the raw images.
  const SigmaSet<double> sigma = sigma_points(joint_belief);
  Vector2d s = Vector2d::Zero();
  Vector2d c = Vector2d::Zero();
  for (Index l = 0; l < sigma.size(); ++l) {
    const Vector2d z = measure_pair(VectorXd(sigma.points.col(l)));
    s += sigma.weights(l) * z.array().sin().matrix();
    c += sigma.weights(l) * z.array().cos().matrix();
  }
  const Vector2d reference{std::atan2(s(0), c(0)), std::atan2(s(1), c(1))};
  return statistical_linear_regression(
      joint_belief, [](const VectorXd& x) { return VectorXd(measure_pair(x)); },
      [&](const VectorXd& z) { return VectorXd(correct_sigma_angles(z, reference)); });
}

}  // namespace coloc
