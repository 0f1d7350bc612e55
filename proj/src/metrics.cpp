#include "coloc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace coloc {
namespace {

template <typename ErrorFn>
std::vector<double> collect(std::span<const Gaussiand> beliefs, std::span<const VehicleState> truth,
                            std::span<const VehicleId> exclude, ErrorFn&& error) {
  if (beliefs.size() != truth.size()) throw DomainError("metrics: beliefs and truth are not aligned");
  std::vector<double> out;
  for (VehicleId v = 0; v < truth.size(); ++v) {
    if (std::find(exclude.begin(), exclude.end(), v) != exclude.end()) continue;
    if (beliefs[v].dim() < kStateDim) throw DomainError("metrics: belief is not a vehicle state");
    out.push_back(error(beliefs[v].mean, truth[v]));
  }
  if (out.empty()) throw DomainError("metrics: no vehicles left after exclusion");
  return out;
}

double rms(const std::vector<double>& e) {
  double sum = 0.0;
  for (double x : e) sum += x * x;
  return std::sqrt(sum / double(e.size()));
}

}  // namespace

std::vector<double> position_errors(std::span<const Gaussiand> beliefs, std::span<const VehicleState> truth,
                                    std::span<const VehicleId> exclude) {
  return collect(beliefs, truth, exclude, [](const VectorXd& m, const VehicleState& t) {
    return std::hypot(m(0) - t.x, m(1) - t.y);
  });
}

std::vector<double> direction_errors(std::span<const Gaussiand> beliefs, std::span<const VehicleState> truth,
                                     std::span<const VehicleId> exclude) {
  return collect(beliefs, truth, exclude, [](const VectorXd& m, const VehicleState& t) {
    return std::abs(wrap_angle(m(2) - t.theta));
  });
}

double position_rmse(std::span<const Gaussiand> beliefs, std::span<const VehicleState> truth,
                     std::span<const VehicleId> exclude) {
  return rms(position_errors(beliefs, truth, exclude));
}

double direction_rmse(std::span<const Gaussiand> beliefs, std::span<const VehicleState> truth,
                      std::span<const VehicleId> exclude) {
  return rms(direction_errors(beliefs, truth, exclude));
}

EmpiricalCdf::EmpiricalCdf(std::vector<double> samples) : sorted_(std::move(samples)) {
  if (sorted_.empty()) throw DomainError("error_cdf: empty sample");
  for (double x : sorted_)
    if (std::isnan(x)) throw DomainError("error_cdf: NaN sample");
  std::sort(sorted_.begin(), sorted_.end());
  const double n = double(sorted_.size());
  for (std::size_t k = 0; k < sorted_.size(); ++k) {
    // Keep only the last index of each run of ties.
    if (k + 1 < sorted_.size() && sorted_[k + 1] == sorted_[k]) continue;
    points_.emplace_back(sorted_[k], double(k + 1) / n);
  }
}

double EmpiricalCdf::operator()(double x) const {
  const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x);
  return double(it - sorted_.begin()) / double(sorted_.size());
}

EmpiricalCdf error_cdf(std::vector<double> errors) { return EmpiricalCdf(std::move(errors)); }

}  // namespace coloc
