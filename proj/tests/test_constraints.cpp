#include "cmcc/constraints.hpp"
#include "cmcc/errors.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

using namespace cmcc;

namespace {

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

void check_invariants(const ConstraintSet& cs)
{
    const auto& P = cs.P();
    const auto M = cs.M(), K = cs.K();
    CHECK(max_abs(P * P - P) <= 1e-10);
    CHECK(max_abs(P - P.transpose()) <= 1e-10);
    CHECK(max_abs(P * cs.C()) <= 1e-10);
    CHECK(max_abs(cs.C().transpose() * cs.Q() - cs.f()) <= 1e-10);

    Eigen::SelfAdjointEigenSolver<Matrix> es(P);
    int ones = 0, zeros = 0;
    for (Eigen::Index i = 0; i < M; ++i) {
        const double v = es.eigenvalues()(i);
        ones += std::abs(v - 1.0) <= 1e-8;
        zeros += std::abs(v) <= 1e-8;
    }
    CHECK(ones == M - K);
    CHECK(zeros == K);
}

} // namespace

TEST_CASE("unit-vector constraint")
{
    Matrix C = Matrix::Zero(4, 1);
    C(0, 0) = 1.0;
    Vector f(1);
    f << 1.0;
    const auto cs = build_constraints(C, f);
    Vector diag(4);
    diag << 0, 1, 1, 1;
    CHECK(max_abs(cs.P() - Matrix(diag.asDiagonal())) <= 1e-15);
    Vector q(4);
    q << 1, 0, 0, 0;
    CHECK(max_abs(cs.Q() - q) <= 1e-15);
    check_invariants(cs);
}

TEST_CASE("linear-phase beamforming constraint")
{
    const Matrix C = linear_phase_constraint_matrix(7);
    REQUIRE(C.rows() == 7);
    REQUIRE(C.cols() == 3);
    for (int i = 0; i < 3; ++i) {
        CHECK(C(i, i) == 1.0);
        CHECK(C(6 - i, i) == -1.0);
        CHECK(C.row(3).isZero());
    }
    const auto cs = build_constraints(C, Vector::Zero(3));
    CHECK(cs.Q().isZero(0.0));
    check_invariants(cs);
    CHECK_THROWS_AS(linear_phase_constraint_matrix(6), ConfigError);
}

TEST_CASE("random constraints satisfy the projection invariants")
{
    RandomStream rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const int M = 2 + trial % 9;
        const int K = 1 + trial % (M - 1);
        const Matrix C = oracle::random_matrix(M, K, rng);
        const Vector f = oracle::random_vector(K, rng);
        const auto cs = build_constraints(C, f);
        check_invariants(cs);

        // P (Q + P z) + Q - (Q + P z) = 0 for feasible points.
        const Vector z = oracle::random_vector(M, rng);
        const Vector W = cs.Q() + cs.P() * z;
        CHECK((cs.P() * W + cs.Q() - W).cwiseAbs().maxCoeff() <= 1e-10);
    }
}

TEST_CASE("feasibility checks")
{
    RandomStream rng(5);
    const Matrix C = oracle::random_matrix(7, 3, rng);
    const Vector f = oracle::random_vector(3, rng);
    const auto cs = build_constraints(C, f);
    CHECK(check_feasible(cs.Q(), cs, 1e-10));
    CHECK(check_feasible(cs.Q() + cs.P() * oracle::random_vector(7, rng), cs, 1e-8));
    // C^T (Q + c_1) - f = C^T c_1, nonzero.
    CHECK_FALSE(check_feasible(cs.Q() + C.col(0), cs, 1e-8));
    CHECK(cs.residual(cs.Q() + C.col(0)) == doctest::Approx((C.transpose() * C.col(0)).cwiseAbs().maxCoeff()));
    CHECK_THROWS_AS(check_feasible(Vector::Zero(6), cs, 1e-8), DimensionError);
}

TEST_CASE("construction errors")
{
    RandomStream rng(3);
    Matrix C = oracle::random_matrix(5, 2, rng);
    C.col(1) = 2.0 * C.col(0);
    CHECK_THROWS_AS(build_constraints(C, Vector::Zero(2)), ConstraintRankError);

    // Nearly dependent columns beyond the conditioning guard.
    Matrix D = oracle::random_matrix(5, 2, rng);
    D.col(1) = D.col(0) + 1e-9 * oracle::random_vector(5, rng);
    CHECK_THROWS_AS(build_constraints(D, Vector::Zero(2)), ConstraintRankError);

    CHECK_THROWS_AS(build_constraints(oracle::random_matrix(5, 2, rng), Vector::Zero(3)), DimensionError);
    CHECK_THROWS_AS(build_constraints(oracle::random_matrix(3, 3, rng), Vector::Zero(3)), DimensionError);
    CHECK_THROWS_AS(build_constraints(oracle::random_matrix(1, 1, rng), Vector::Zero(1)), DimensionError);
    Matrix bad = oracle::random_matrix(4, 1, rng);
    bad(2, 0) = std::nan("");
    CHECK_THROWS_AS(build_constraints(bad, Vector::Zero(1)), DimensionError);
}
