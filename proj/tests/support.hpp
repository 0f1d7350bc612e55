#pragma once

// Random instance generators shared by the property tests.

#include "coloc/bp.hpp"
#include "coloc/gaussian.hpp"
#include "coloc/slr.hpp"

#include <random>
#include <vector>

namespace coloc::test {

inline MatrixXd random_matrix(std::mt19937_64& rng, Index rows, Index cols, double scale = 1.0)
{
    std::normal_distribution<double> n(0.0, scale);
    MatrixXd m(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j)
            m(i, j) = n(rng);
    return m;
}

// SPD with eigenvalues spread over roughly [0.05, 5] times `scale`.
inline MatrixXd random_spd(std::mt19937_64& rng, Index d, double scale = 1.0)
{
    const MatrixXd g = random_matrix(rng, d, d);
    const Eigen::HouseholderQR<MatrixXd> qr(g);
    const MatrixXd q = qr.householderQ();
    std::uniform_real_distribution<double> u(std::log(0.05), std::log(5.0));
    VectorXd ev(d);
    for (Index k = 0; k < d; ++k)
        ev(k) = scale * std::exp(u(rng));
    return symmetrized(MatrixXd(q * ev.asDiagonal() * q.transpose()));
}

inline Gaussiand random_gaussian(std::mt19937_64& rng, Index d, double mean_scale = 3.0, double cov_scale = 1.0)
{
    return {VectorXd(random_matrix(rng, d, 1, mean_scale)), random_spd(rng, d, cov_scale)};
}

// Random tree over n vehicles with exact affine edge models: the measurement
// is A x_ij + b plus noise drawn from R, and omega = 0.
inline FactorGraph random_affine_tree(std::mt19937_64& rng, std::size_t n, Index d = 3, Index m = 2)
{
    FactorGraph g;
    std::vector<VectorXd> truth;
    for (std::size_t v = 0; v < n; ++v) {
        const Gaussiand prior = random_gaussian(rng, d, 3.0, 2.0);
        truth.push_back(prior.mean + random_matrix(rng, d, 1));
        g.add_vehicle(prior);
    }
    for (std::size_t v = 1; v < n; ++v) {
        const std::size_t parent = std::size_t(rng() % v);
        LinearModel model;
        model.A = random_matrix(rng, m, 2 * d);
        model.b = random_matrix(rng, m, 1);
        model.omega = MatrixXd::Zero(m, m);
        const MatrixXd R = random_spd(rng, m, 0.1);
        VectorXd x(2 * d);
        x << truth[parent], truth[v];
        const VectorXd z = model.A * x + model.b + random_matrix(rng, m, 1, 0.1);
        const std::size_t e = g.add_edge(parent, v, Observation{z, R});
        g.set_model(e, model);
    }
    return g;
}

}  // namespace coloc::test
