#include <catch_amalgamated.hpp>

#include "coloc/oracle.hpp"
#include "support.hpp"

#include <random>

using namespace coloc;
using Catch::Approx;

namespace {

VectorXd difference(const VectorXd& xi, const VectorXd& xj)
{
    return xi - xj;
}

}  // namespace

TEST_CASE("importance_posterior without edges returns the prior", "[oracle]")
{
    const std::vector<Gaussiand> priors{
        {Eigen::Vector3d(1, 2, 0.5), Eigen::Vector3d(4, 1, 0.1).asDiagonal().toDenseMatrix()}};
    OracleOptions o;
    o.sample_count = 200'000;
    const OracleResult r = importance_posterior(priors, {}, o);
    CHECK(r.effective_sample_size == Approx(double(o.sample_count)));
    for (Index k = 0; k < 3; ++k) {
        const double tol = 3.0 * std::sqrt(priors[0].cov(k, k) / double(o.sample_count));
        CHECK(std::abs(r.posteriors[0].mean(k) - priors[0].mean(k)) < tol);
        CHECK(r.mean_stderr[0](k) == Approx(std::sqrt(priors[0].cov(k, k) / double(o.sample_count))).epsilon(0.02));
    }
    CHECK(r.posteriors[0].cov(0, 0) == Approx(4.0).epsilon(0.02));
}

TEST_CASE("importance_posterior matches the linear-Gaussian solve", "[oracle]")
{
    // Two 2-dim vehicles observed through z = x_i - x_j.
    const std::vector<Gaussiand> priors{{Eigen::Vector2d(0, 0), MatrixXd::Identity(2, 2)},
                                        {Eigen::Vector2d(2, 1), 2.0 * MatrixXd::Identity(2, 2)}};
    const Observation z(Eigen::Vector2d(-1.5, -0.5), 0.5 * MatrixXd::Identity(2, 2));
    const std::vector<OracleEdge> edges{{0, 1, z}};
    OracleOptions o;
    o.sample_count = 400'000;
    o.angular = false;
    const OracleResult r = importance_posterior(priors, edges, o, difference);

    FactorGraph g;
    g.add_vehicle(priors[0]);
    g.add_vehicle(priors[1]);
    LinearModel m;
    m.A = MatrixXd(2, 4);
    m.A << MatrixXd::Identity(2, 2), -MatrixXd::Identity(2, 2);
    m.b = VectorXd::Zero(2);
    m.omega = MatrixXd::Zero(2, 2);
    g.add_edge(0, 1, z, m);
    const Gaussiand exact = dense_linear_solve(g);

    for (VehicleId v = 0; v < 2; ++v)
        for (Index k = 0; k < 2; ++k)
            CHECK(std::abs(r.posteriors[v].mean(k) - exact.mean(2 * Index(v) + k)) < 3.0 * r.mean_stderr[v](k));
}

TEST_CASE("importance_posterior standard error shrinks with samples", "[oracle]")
{
    const std::vector<Gaussiand> priors{
        {Eigen::Vector3d(0, 0, 0), 0.01 * MatrixXd::Identity(3, 3)},
        {Eigen::Vector3d(15, 3, 0.2), Eigen::Vector3d(4, 4, 0.05).asDiagonal().toDenseMatrix()}};
    VectorXd truth(6);
    truth << 0, 0, 0, 14, 2, 0.1;
    const std::vector<OracleEdge> edges{{0, 1, Observation(measure_pair(truth), 0.01 * MatrixXd::Identity(2, 2))}};
    OracleOptions o;
    o.sample_count = 200'000;
    const double se1 = importance_posterior(priors, edges, o).mean_stderr[1](0);
    o.sample_count = 400'000;
    const double se2 = importance_posterior(priors, edges, o).mean_stderr[1](0);
    CHECK(se1 / se2 == Approx(std::sqrt(2.0)).epsilon(0.15));
}

TEST_CASE("importance_posterior refusals", "[oracle]")
{
    const Gaussiand p{Eigen::Vector3d(0, 0, 0), MatrixXd::Identity(3, 3)};
    OracleOptions o;
    o.sample_count = 1000;
    CHECK_THROWS_AS(importance_posterior(std::vector{p}, {}, o), DomainError);
    o.sample_count = 100'000;
    CHECK_THROWS_AS(importance_posterior(std::vector{p, p, p, p}, {}, o), DomainError);

    // A measurement far from anything the prior supports starves the weights.
    const std::vector<Gaussiand> priors{p, {Eigen::Vector3d(0, 0, 0), MatrixXd::Identity(3, 3)}};
    const std::vector<OracleEdge> edges{{0, 1, Observation(Eigen::Vector3d(50, 50, 50), 1e-6 * MatrixXd::Identity(3, 3))}};
    o.angular = false;
    CHECK_THROWS_AS(importance_posterior(priors, edges, o, difference), NumericError);
}

TEST_CASE("dense_linear_solve", "[oracle]")
{
    SECTION("single vehicle returns the prior")
    {
        std::mt19937_64 rng(3);
        FactorGraph g;
        const Gaussiand p{Eigen::Vector3d(1, 2, 3), test::random_spd(rng, 3)};
        g.add_vehicle(p);
        const Gaussiand s = dense_linear_solve(g);
        CHECK((s.mean - p.mean).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((s.cov - p.cov).cwiseAbs().maxCoeff() < 1e-12);
    }

    SECTION("errors")
    {
        CHECK_THROWS_AS(dense_linear_solve(FactorGraph{}), DomainError);
        FactorGraph g;
        g.add_vehicle({Eigen::Vector3d(0, 0, 0), MatrixXd::Zero(3, 3)});
        CHECK_THROWS_AS(dense_linear_solve(g), NumericError);
    }
}
