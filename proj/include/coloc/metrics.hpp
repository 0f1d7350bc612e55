#pragma once

#include "coloc/core.hpp"
#include "coloc/gaussian.hpp"
#include "coloc/geometry.hpp"

#include <span>
#include <utility>
#include <vector>

namespace coloc {

/// Euclidean position error of every vehicle not listed in `exclude`.
std::vector<double> position_errors(std::span<const Gaussiand> beliefs, std::span<const VehicleState> truth,
                                    std::span<const VehicleId> exclude = {});

/// Wrapped heading error of every vehicle not listed in `exclude`.
std::vector<double> direction_errors(std::span<const Gaussiand> beliefs, std::span<const VehicleState> truth,
                                     std::span<const VehicleId> exclude = {});

/// sqrt(mean ||p_hat - p||^2) over included vehicles, in meters.
double position_rmse(std::span<const Gaussiand> beliefs, std::span<const VehicleState> truth,
                     std::span<const VehicleId> exclude = {});

/// sqrt(mean wrap(theta_hat - theta)^2) over included vehicles, in radians.
double direction_rmse(std::span<const Gaussiand> beliefs, std::span<const VehicleState> truth,
                      std::span<const VehicleId> exclude = {});

/// Empirical CDF over a sample of errors.
class EmpiricalCdf {
 public:
  explicit EmpiricalCdf(std::vector<double> samples);

  /// Fraction of samples <= x.
  double operator()(double x) const;
  /// (threshold, fraction) at each distinct sorted sample point.
  const std::vector<std::pair<double, double>>& points() const { return points_; }
  std::size_t sample_count() const { return sorted_.size(); }

 private:
  std::vector<double> sorted_;
  std::vector<std::pair<double, double>> points_;
};

EmpiricalCdf error_cdf(std::vector<double> errors);

}  // namespace coloc
