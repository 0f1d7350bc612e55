#pragma once

#include "coloc/core.hpp"
#include "coloc/gaussian.hpp"
#include "coloc/geometry.hpp"

#include <type_traits>

namespace coloc {

/// Affine approximation h(x) ~ A x + b + e, e ~ N(0, omega), fitted over a
/// Gaussian belief. For a pair edge A is 2x6 and splits as [A_i | A_j].
struct LinearModel {
  MatrixXd A;
  VectorXd b;
  MatrixXd omega;

  Index state_dim() const { return A.cols() / 2; }
  // Columns acting on the first (i) or second (j) vehicle of the pair.
  auto block_i() const { return A.leftCols(state_dim()); }
  auto block_j() const { return A.rightCols(state_dim()); }
};

/// Moves `raw` by a multiple of 2 pi so it lies within pi of `reference`:
///   reference + pi - mod(reference - raw + pi, 2 pi), mod taken in [0, 2 pi).
double correct_sigma_angle(double raw, double reference);

template <typename Derived, typename RefDerived>
Eigen::Matrix<double, Derived::RowsAtCompileTime, 1> correct_sigma_angles(
    const Eigen::MatrixBase<Derived>& raw, const Eigen::MatrixBase<RefDerived>& reference) {
  if (raw.size() != reference.size()) throw DomainError("correct_sigma_angles: size mismatch");
  Eigen::Matrix<double, Derived::RowsAtCompileTime, 1> out(raw.size());
  for (Index k = 0; k < raw.size(); ++k) out(k) = correct_sigma_angle(raw(k), reference(k));
  return out;
}

/// Statistical linear regression of `h` over `belief` with unscented sigma
/// points. `correct(Z)` post-processes each sigma image before the moments
/// are taken.
///
/// A = C_xz^T P^{-1}, b = z_bar - A mu, omega = C_zz - A P A^T (clipped PSD).
template <typename Fn, typename Correct>
LinearModel statistical_linear_regression(const Gaussiand& belief, Fn&& h, Correct&& correct) {
  const SigmaSet<double> sigma = sigma_points(belief);
  const Index L = sigma.size();

  VectorXd first = correct(VectorXd(h(VectorXd(sigma.points.col(0)))));
  MatrixXd images(first.size(), L);
  images.col(0) = first;
  for (Index l = 1; l < L; ++l) images.col(l) = correct(VectorXd(h(VectorXd(sigma.points.col(l)))));
  if (!images.allFinite()) throw NumericError("slr: non-finite sigma image");

  const VectorXd z_bar = images * sigma.weights;
  const MatrixXd dz = images.colwise() - z_bar;
  const MatrixXd dx = sigma.points.colwise() - belief.mean;
  const MatrixXd c_xz = dx * sigma.weights.asDiagonal() * dz.transpose();
  const MatrixXd c_zz = symmetrized(MatrixXd(dz * sigma.weights.asDiagonal() * dz.transpose()));

  // Solve P A^T = C_xz, jittering a near-singular P.
  MatrixXd P = symmetrized(belief.cov);
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(P, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (lo <= 0.0 || hi > kMaxInnovationCondition * lo)
    P.diagonal().array() += std::max(1e-9 * P.trace() / double(P.rows()), 1e-12);
  const Eigen::LDLT<MatrixXd> ldlt(P);
  if (ldlt.info() != Eigen::Success) throw NumericError("slr: belief covariance factorization failed");

  LinearModel model;
  model.A = ldlt.solve(c_xz).transpose();
  model.b = z_bar - model.A * belief.mean;
  model.omega = psd_repair<double>(c_zz - model.A * belief.cov * model.A.transpose());
  if (!model.A.allFinite() || !model.b.allFinite() || !model.omega.allFinite())
    throw NumericError("slr: non-finite linear model");
  return model;
}

template <typename Fn>
LinearModel statistical_linear_regression(const Gaussiand& belief, Fn&& h) {
  return statistical_linear_regression(belief, std::forward<Fn>(h),
                                       [](const VectorXd& z) { return z; });
}

/// Posterior linearization of the AoA pair model against a 6-dim joint belief.
/// Sigma images are corrected against the measured angles before regression.
LinearModel slr_linearize(const Gaussiand& joint_belief, const AoAPair& measurement);

/// Variant without a measurement: sigma images are corrected against their
/// weighted circular mean instead.
LinearModel slr_linearize(const Gaussiand& joint_belief);

}  // namespace coloc
