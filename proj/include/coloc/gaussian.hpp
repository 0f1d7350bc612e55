#pragma once

#include "coloc/core.hpp"
#include "coloc/geometry.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <utility>

namespace coloc {

/// Mean vector and covariance matrix of a multivariate normal density.
///
/// The same carrier is used for priors, marginal beliefs, joint pairwise
/// beliefs and extrinsic beliefs. Validity (symmetry, PSD, finiteness) is not
/// enforced on construction; call validate() at module boundaries.
template <typename Scalar>
struct Gaussian {
  VectorX<Scalar> mean;
  MatrixX<Scalar> cov;

  Gaussian() = default;
  Gaussian(VectorX<Scalar> m, MatrixX<Scalar> c) : mean(std::move(m)), cov(std::move(c)) {
    if (cov.rows() != mean.size() || cov.cols() != mean.size())
      throw DomainError("Gaussian: covariance is " + std::to_string(cov.rows()) + "x" +
                        std::to_string(cov.cols()) + " for a mean of size " +
                        std::to_string(mean.size()));
  }

  Index dim() const { return mean.size(); }

  // Exact comparison; used for round-trip checks.
  bool operator==(const Gaussian& o) const {
    return mean.size() == o.mean.size() && cov.rows() == o.cov.rows() &&
           cov.cols() == o.cov.cols() && mean == o.mean && cov == o.cov;
  }
};

using Gaussiand = Gaussian<double>;

template <typename Derived>
typename Derived::PlainObject symmetrized(const Eigen::MatrixBase<Derived>& m) {
  return (m + m.transpose()) / typename Derived::Scalar(2);
}

/// Returns a reason string when `m` is not symmetric PSD under relative
/// tolerance `rel_tol`, or nullopt when it is.
template <typename Scalar>
std::optional<std::string> psd_violation(const MatrixX<Scalar>& m, Scalar rel_tol = Scalar(1e-9)) {
  using std::abs;
  if (m.rows() != m.cols()) return "matrix is not square";
  if (!m.allFinite()) return "matrix has non-finite entries";
  if (m.size() == 0) return std::nullopt;
  const Scalar scale = m.cwiseAbs().maxCoeff();
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > rel_tol * scale) return "matrix is not symmetric";
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> eig(symmetrized(m), Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) return "eigen decomposition failed";
  const Scalar trace = abs(m.trace());
  if (eig.eigenvalues().minCoeff() < -rel_tol * trace)
    return "matrix has a negative eigenvalue";
  return std::nullopt;
}

template <typename Scalar>
std::optional<std::string> gaussian_violation(const Gaussian<Scalar>& g) {
  if (g.cov.rows() != g.dim() || g.cov.cols() != g.dim()) return "covariance dimension mismatch";
  if (!g.mean.allFinite()) return "mean has non-finite entries";
  return psd_violation<Scalar>(g.cov);
}

template <typename Scalar>
bool is_valid(const Gaussian<Scalar>& g) {
  return !gaussian_violation(g).has_value();
}

template <typename Scalar>
void validate(const Gaussian<Scalar>& g, const std::string& context = "Gaussian") {
  if (auto why = gaussian_violation(g)) throw DomainError(context + ": " + *why);
}

/// Symmetrizes and clips eigenvalues below `floor`.
template <typename Scalar>
MatrixX<Scalar> psd_repair(const MatrixX<Scalar>& m, Scalar floor = Scalar(0)) {
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> eig(symmetrized(m));
  if (eig.info() != Eigen::Success) throw NumericError("psd_repair: eigen decomposition failed");
  const VectorX<Scalar> clipped = eig.eigenvalues().cwiseMax(floor);
  return symmetrized(eig.eigenvectors() * clipped.asDiagonal() * eig.eigenvectors().transpose());
}

/// Symmetric square root V sqrt(L) V^T with negative eigenvalues clipped to 0.
template <typename Scalar>
MatrixX<Scalar> symmetric_sqrt(const MatrixX<Scalar>& m) {
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> eig(symmetrized(m));
  if (eig.info() != Eigen::Success) throw NumericError("symmetric_sqrt: eigen decomposition failed");
  const VectorX<Scalar> roots = eig.eigenvalues().cwiseMax(Scalar(0)).cwiseSqrt();
  return eig.eigenvectors() * roots.asDiagonal() * eig.eigenvectors().transpose();
}

template <typename Scalar>
Gaussian<Scalar> block_diagonal(const Gaussian<Scalar>& a, const Gaussian<Scalar>& b) {
  const Index n = a.dim() + b.dim();
  VectorX<Scalar> mean(n);
  mean << a.mean, b.mean;
  MatrixX<Scalar> cov = MatrixX<Scalar>::Zero(n, n);
  cov.topLeftCorner(a.dim(), a.dim()) = a.cov;
  cov.bottomRightCorner(b.dim(), b.dim()) = b.cov;
  return {std::move(mean), std::move(cov)};
}

template <typename Scalar>
Gaussian<Scalar> marginal(const Gaussian<Scalar>& g, Index start, Index size) {
  if (start < 0 || size < 0 || start + size > g.dim())
    throw DomainError("marginal: block out of range");
  return {g.mean.segment(start, size), g.cov.block(start, start, size, size)};
}

/// One draw from `g`.
template <typename Scalar>
VectorX<Scalar> sample(const Gaussian<Scalar>& g, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  VectorX<Scalar> u(g.dim());
  for (Index k = 0; k < u.size(); ++k) u(k) = Scalar(normal(rng));
  return g.mean + symmetric_sqrt<Scalar>(g.cov) * u;
}

/// Unscented-transform sigma points: one point per column of `points`.
template <typename Scalar>
struct SigmaSet {
  MatrixX<Scalar> points;   // d x L
  VectorX<Scalar> weights;  // L

  Index dim() const { return points.rows(); }
  Index size() const { return points.cols(); }
};

/// Scaling parameter of the unscented transform: 3 - d for d <= 2, 0 above.
/// At d >= 3 this keeps every weight non-negative.
inline double ut_kappa(Index d) { return d <= 2 ? 3.0 - double(d) : 0.0; }

/// 2d + 1 unscented sigma points of `g`:
///   X_0 = mu, X_{+-i} = mu +- col_i(sqrt((d + kappa) P)),
///   w_0 = kappa / (d + kappa), w_{+-i} = 1 / (2 (d + kappa)).
/// The zero-weight center point is kept at d >= 3 so L is always 2d + 1.
template <typename Scalar>
SigmaSet<Scalar> sigma_points(const Gaussian<Scalar>& g) {
  const Index d = g.dim();
  if (d < 1) throw DomainError("sigma_points: empty Gaussian");
  validate(g, "sigma_points");
  const Scalar kappa = Scalar(ut_kappa(d));
  const Scalar spread = Scalar(d) + kappa;
  const MatrixX<Scalar> root = symmetric_sqrt<Scalar>(spread * g.cov);
  if (!root.allFinite()) throw NumericError("sigma_points: square root is not finite");

  SigmaSet<Scalar> set;
  set.points.resize(d, 2 * d + 1);
  set.weights.resize(2 * d + 1);
  set.points.col(0) = g.mean;
  set.weights(0) = kappa / spread;
  for (Index i = 0; i < d; ++i) {
    set.points.col(1 + i) = g.mean + root.col(i);
    set.points.col(1 + d + i) = g.mean - root.col(i);
    set.weights(1 + i) = Scalar(1) / (Scalar(2) * spread);
    set.weights(1 + d + i) = Scalar(1) / (Scalar(2) * spread);
  }
  return set;
}

/// Weighted mean and scatter of a sigma set.
template <typename Scalar>
Gaussian<Scalar> moments(const SigmaSet<Scalar>& set) {
  VectorX<Scalar> mean = set.points * set.weights;
  const MatrixX<Scalar> centered = set.points.colwise() - mean;
  MatrixX<Scalar> cov = centered * set.weights.asDiagonal() * centered.transpose();
  return {std::move(mean), symmetrized(cov)};
}

/// How to form the innovation z - H mu in a measurement update.
enum class Innovation {
  linear,   // plain difference
  angular,  // each component wrapped onto (-pi, pi]
};

// Conditioning above which the innovation covariance gets diagonal jitter.
inline constexpr double kMaxInnovationCondition = 1e12;

/// Kalman measurement update of `prior` with observation z = H x + v,
/// v ~ N(0, noise_cov).
///
/// S = H P H^T + noise_cov is jittered by 1e-9 trace(S)/m when its condition
/// number exceeds 1e12; a still non-positive S raises NumericError. The
/// posterior covariance is (I - K H) P, symmetrized.
template <typename Scalar>
Gaussian<Scalar> kalman_update(const Gaussian<Scalar>& prior, const MatrixX<Scalar>& H,
                               const VectorX<Scalar>& z, const MatrixX<Scalar>& noise_cov,
                               Innovation innovation = Innovation::linear) {
  const Index d = prior.dim();
  const Index m = z.size();
  if (H.rows() != m || H.cols() != d || noise_cov.rows() != m || noise_cov.cols() != m)
    throw DomainError("kalman_update: inconsistent dimensions");

  const MatrixX<Scalar> HP = H * prior.cov;
  MatrixX<Scalar> S = symmetrized(MatrixX<Scalar>(HP * H.transpose() + noise_cov));
  if (!S.allFinite()) throw NumericError("kalman_update: non-finite innovation covariance");

  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> eig(S, Eigen::EigenvaluesOnly);
  Scalar lo = eig.eigenvalues().minCoeff();
  const Scalar hi = eig.eigenvalues().maxCoeff();
  if (lo <= Scalar(0) || hi > Scalar(kMaxInnovationCondition) * lo) {
    const Scalar jitter = Scalar(1e-9) * S.trace() / Scalar(m);
    S.diagonal().array() += jitter;
    lo += jitter;
    if (!(lo > Scalar(0))) throw NumericError("kalman_update: singular innovation covariance");
  }

  VectorX<Scalar> nu = z - H * prior.mean;
  if (innovation == Innovation::angular)
    for (Index k = 0; k < m; ++k) nu(k) = wrap_angle(nu(k));

  const Eigen::LDLT<MatrixX<Scalar>> ldlt(S);
  if (ldlt.info() != Eigen::Success) throw NumericError("kalman_update: factorization failed");
  // K^T = S^{-1} H P
  const MatrixX<Scalar> gain_t = ldlt.solve(HP);
  VectorX<Scalar> mean = prior.mean + gain_t.transpose() * nu;
  MatrixX<Scalar> cov = symmetrized(MatrixX<Scalar>(prior.cov - gain_t.transpose() * HP));
  return {std::move(mean), std::move(cov)};
}

}  // namespace coloc
