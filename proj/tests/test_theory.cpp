#include "cmcc/errors.hpp"
#include "cmcc/theory.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>

using namespace cmcc;

namespace {

struct Instance {
    Matrix R;
    ConstraintSet cs;
    Vector W_true;
};

Instance random_instance(int M, int K, RandomStream& rng)
{
    Matrix R = oracle::random_spd(M, rng);
    auto cs = build_constraints(oracle::random_matrix(M, K, rng), oracle::random_vector(K, rng));
    return {R, cs, oracle::random_vector(M, rng)};
}

TheoryInputs inputs(const Instance& in, double eta, double sigma, NoiseModel noise)
{
    return TheoryInputs{in.R, in.cs, in.W_true, eta, sigma, noise};
}

// Weight-error covariance recursion iterated to its fixed point; returns tr K.
double covariance_fixed_point(const Matrix& R, const Matrix& P, double eta, double Eg, double Eg2, double drive)
{
    const auto M = R.rows();
    const Matrix I = Matrix::Identity(M, M);
    const Matrix B = I - eta * Eg * R;
    const Matrix Ups = P * R * P;
    Matrix K = Matrix::Zero(M, M);
    for (int it = 0; it < 200000; ++it) {
        const Matrix next = P *
                                (B * K * B + eta * eta * Eg2 * (K * R).trace() * R +
                                 (2 * Eg2 - Eg * Eg) * eta * eta * R * K * R) *
                                P +
                            eta * eta * Eg2 * drive * Ups;
        const double change = (next - K).norm();
        K = next;
        if (change <= 1e-16 * K.norm())
            break;
    }
    return K.trace();
}

} // namespace

TEST_CASE("optimal weights: hand example")
{
    Matrix C(2, 1);
    C << 1, 0;
    Vector f(1);
    f << 1;
    const auto cs = build_constraints(C, f);
    Vector Wt(2);
    Wt << 0, 2;
    const auto o = optimal_weights(Matrix::Identity(2, 2), cs, Wt);
    CHECK(o.W_opt(0) == doctest::Approx(1.0));
    CHECK(o.W_opt(1) == doctest::Approx(2.0));
    CHECK(o.eps_w(0) == doctest::Approx(-1.0));
    CHECK(std::abs(o.eps_w(1)) < 1e-15);

    // Correlated input moves the free tap too.
    Matrix R(2, 2);
    R << 2, 1, 1, 2;
    const auto c = optimal_weights(R, cs, Wt);
    // minimise (W - W*)^T R (W - W*) with W_0 = 1: W_1 = 2 - (1/2)(1 - 0) = 1.5.
    CHECK(c.W_opt(0) == doctest::Approx(1.0));
    CHECK(c.W_opt(1) == doctest::Approx(1.5));
}

TEST_CASE("optimal weights agree with the KKT oracle")
{
    RandomStream rng(5);
    for (int t = 0; t < 50; ++t) {
        const int M = 3 + t % 6, K = 1 + t % (M - 1);
        const auto in = random_instance(M, K, rng);
        const auto o = optimal_weights(in.R, in.cs, in.W_true);
        const Vector ref = oracle::kkt_weighted_projection(in.R, in.cs.C(), in.cs.f(), in.W_true);
        CHECK((o.W_opt - ref).norm() <= 1e-8 * std::max(1.0, ref.norm()));
        CHECK((in.cs.C().transpose() * o.W_opt - in.cs.f()).norm() <= 1e-9);
        CHECK((in.cs.P() * in.R * o.eps_w).norm() <= 1e-9 * std::max(1.0, o.eps_w.norm()));
        CHECK((o.W_opt + o.eps_w - in.W_true).norm() <= 1e-12 * std::max(1.0, in.W_true.norm()));
    }
}

TEST_CASE("stability bound")
{
    Matrix C = Matrix::Zero(5, 1);
    C(2, 0) = 1;
    const auto cs = build_constraints(C, Vector::Ones(1));
    const auto b = stability_bound(Matrix::Identity(5, 5), cs);
    CHECK(b.eta_max == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    CHECK(b.lambda_max == doctest::Approx(1.0));
    CHECK(b.trace == doctest::Approx(4.0));

    RandomStream rng(9);
    const auto in = random_instance(7, 3, rng);
    const auto base = stability_bound(in.R, in.cs);
    const auto scaled = stability_bound(4.0 * in.R, in.cs);
    CHECK(scaled.eta_max == doctest::Approx(base.eta_max / 4.0).epsilon(1e-12));
    CHECK(base.eta_max > 0.0);
    CHECK(base.eta_max <= 2.0 / (2.0 * base.lambda_max));
}

TEST_CASE("limiting gains")
{
    RandomStream rng(3);
    auto in = random_instance(7, 3, rng);
    in.W_true = optimal_weights(in.R, in.cs, in.W_true).W_opt; // feasible, no excess
    const Vector zero = Vector::Zero(7);

    const auto g = limiting_gains(inputs(in, 0.01, 8.0, make_noise(noise::Gaussian{0.81})), zero);
    CHECK(g.path == GainPath::Gaussian);
    CHECK(g.Eg == doctest::Approx(8.0 / std::sqrt(64.81)).epsilon(1e-14));
    CHECK(g.Eg2 == doctest::Approx(8.0 / std::sqrt(64.0 + 1.62)).epsilon(1e-14));

    const auto b = limiting_gains(inputs(in, 0.01, 2.0, make_noise(noise::Binary{})), zero);
    CHECK(b.path == GainPath::Taylor);
    CHECK(b.Eg == doctest::Approx(std::exp(-1.0 / 8.0)).epsilon(1e-14));
    CHECK(b.Eg2 == doctest::Approx(std::exp(-0.25)).epsilon(1e-14));

    // Taylor expansion of the Gaussian closed form, first order in the excess.
    Vector e = Vector::Zero(7);
    e(0) = 0.05;
    const auto gi = inputs(in, 0.01, 8.0, make_noise(noise::Gaussian{0.81}));
    const auto exact = limiting_gains(gi, e, GainPath::Gaussian);
    const auto taylor = limiting_gains(gi, e, GainPath::Taylor);
    CHECK(taylor.Eg == doctest::Approx(exact.Eg).epsilon(1e-6));
    CHECK(taylor.Eg2 == doctest::Approx(exact.Eg2).epsilon(1e-6));

    CHECK_THROWS_AS(limiting_gains(inputs(in, 0.01, 2.0, make_noise(noise::Laplace{1.0})), zero, GainPath::Gaussian),
                    ConfigError);
    CHECK_THROWS_AS(limiting_gains(inputs(in, 0.01, 2.0, make_noise(noise::Cauchy{1.0})), zero), InfiniteMomentError);
    CHECK_THROWS_AS(limiting_gains(inputs(in, 0.01, 0.0, make_noise(noise::Binary{})), zero), ConfigError);
}

TEST_CASE("F matrix")
{
    RandomStream rng(12);
    const auto in = random_instance(4, 2, rng);
    const Matrix& P = in.cs.P();
    CHECK((f_matrix(in.R, in.cs, 0.0, 0.9, 0.8) - kron(P, P)).cwiseAbs().maxCoeff() <= 1e-15);

    // Apply F to each basis matrix of M = 2 and compare with the weighted-norm update.
    auto check_against_update = [](const Matrix& R, const ConstraintSet& cs, double eta, double Eg, double Eg2,
                                   const Matrix& T, double tol) {
        const auto M = R.rows();
        const Matrix& P = cs.P();
        const Matrix I = Matrix::Identity(M, M);
        const Matrix B = I - eta * Eg * R;
        const Matrix Ups = P * R * P;
        const Matrix U = B * P * T * P * B + eta * eta * Eg2 * (T * Ups).trace() * R +
                         2 * eta * eta * Eg2 * R * P * T * P * R - eta * eta * Eg * Eg * R * P * T * P * R;
        const Vector lhs = f_matrix(R, cs, eta, Eg, Eg2) * vec(T);
        CHECK((lhs - vec(U)).cwiseAbs().maxCoeff() <= tol * std::max(1.0, U.cwiseAbs().maxCoeff()));
    };
    Matrix C2(2, 1);
    C2 << 1, 1;
    const auto cs2 = build_constraints(C2, Vector::Ones(1));
    Matrix R2(2, 2);
    R2 << 1.2, 0.3, 0.3, 0.8;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            Matrix T = Matrix::Zero(2, 2);
            T(i, j) = 1;
            check_against_update(R2, cs2, 0.1, 0.95, 0.9, T, 1e-12);
        }
    for (int t = 0; t < 20; ++t) {
        const auto ri = random_instance(5, 2, rng);
        Matrix T = oracle::random_matrix(5, 5, rng);
        T = (T + T.transpose()).eval();
        check_against_update(ri.R, ri.cs, 0.05, 0.9, 0.85, T, 1e-10);
    }
}

TEST_CASE("F is stable inside the bound")
{
    RandomStream rng(77);
    for (int t = 0; t < 100; ++t) {
        const auto in = random_instance(5, 2, rng);
        const auto b = stability_bound(in.R, in.cs);
        const Matrix F = f_matrix(in.R, in.cs, 0.5 * b.eta_max, 1.0, 1.0);
        Eigen::EigenSolver<Matrix> eig(F, false);
        CHECK(eig.eigenvalues().cwiseAbs().maxCoeff() < 1.0);
    }
}

TEST_CASE("fourth-order Gaussian moment")
{
    // E[x x^T T x x^T] = R tr{T R} + 2 R T R for symmetric T and x ~ N(0, R).
    RandomStream rng(404);
    const int M = 3;
    const Matrix R = oracle::random_spd(M, rng);
    Matrix T = oracle::random_matrix(M, M, rng);
    T = (T + T.transpose()).eval();
    const Matrix L = R.llt().matrixL();
    const long n = 1'000'000;
    Matrix sum = Matrix::Zero(M, M), sum2 = Matrix::Zero(M, M);
    for (long i = 0; i < n; ++i) {
        const Vector x = L * oracle::random_vector(M, rng);
        const Matrix y = x * x.transpose() * x.dot(T * x);
        sum += y;
        sum2 += y.cwiseProduct(y);
    }
    const Matrix mean = sum / n;
    const Matrix se = ((sum2 / n - mean.cwiseProduct(mean)) / n).cwiseSqrt();
    const Matrix expected = R * (T * R).trace() + 2 * R * T * R;
    for (int i = 0; i < M; ++i)
        for (int j = 0; j < M; ++j)
            CHECK(std::abs(mean(i, j) - expected(i, j)) <= 3.5 * se(i, j));
}

TEST_CASE("steady-state MSD matches the covariance recursion")
{
    RandomStream rng(55);
    for (int t = 0; t < 10; ++t) {
        const auto in = random_instance(6, 2, rng);
        const auto b = stability_bound(in.R, in.cs);
        const auto ti = inputs(in, 0.3 * b.eta_max, 2.0, make_noise(noise::Laplace{0.7}));
        const auto p = steady_state_msd(ti);
        const double ref = covariance_fixed_point(in.R, in.cs.P(), ti.eta, p.Eg, p.Eg2, p.excess + p.noise_power);
        CHECK(p.S == doctest::Approx(ref).epsilon(1e-8));
        CHECK(p.S > 0.0);
        CHECK(p.spectral_radius < 1.0);
        CHECK(p.Eg2 <= p.Eg);
        CHECK(p.Eg <= 1.0);
        CHECK(p.eta_max_with_gains >= p.eta_max * (1 - 1e-12));
        CHECK(p.noise_power == doctest::Approx(2 * 0.49));
    }
}

TEST_CASE("zero excess and zero noise give zero MSD")
{
    RandomStream rng(8);
    auto in = random_instance(7, 3, rng);
    in.W_true = optimal_weights(in.R, in.cs, in.W_true).W_opt;
    const auto p = steady_state_msd(inputs(in, 0.05, 2.0, make_noise(noise::Zero{})));
    CHECK(p.S == doctest::Approx(0.0).epsilon(1e-30));
    CHECK(p.excess <= 1e-20);
}

TEST_CASE("monotone in step size and noise power")
{
    RandomStream rng(19);
    const auto in = random_instance(7, 3, rng);
    const double eta_max = stability_bound(in.R, in.cs).eta_max;
    double prev = 0.0;
    for (double frac : {0.01, 0.05, 0.1, 0.2, 0.4, 0.6, 0.8}) {
        const double S = steady_state_msd(inputs(in, frac * eta_max, 8.0, make_noise(noise::Gaussian{0.81}))).S;
        CHECK(S > prev);
        prev = S;
    }
    prev = 0.0;
    for (double var : {0.2, 0.4, 0.6, 0.8, 1.0}) {
        const double S = steady_state_msd(inputs(in, 0.01, 8.0, make_noise(noise::Gaussian{var}))).S;
        CHECK(S > prev);
        prev = S;
    }
}

TEST_CASE("Gaussian and Taylor paths agree for Gaussian noise")
{
    RandomStream rng(23);
    const auto in = random_instance(7, 3, rng);
    const auto ti = inputs(in, 0.01, 8.0, make_noise(noise::Gaussian{0.81}));
    const auto a = steady_state_msd(ti, GainPath::Gaussian);
    const auto b = steady_state_msd(ti, GainPath::Taylor);
    CHECK(b.S == doctest::Approx(a.S).epsilon(0.05));
    CHECK(b.path == GainPath::Taylor);
}

TEST_CASE("theory errors")
{
    RandomStream rng(29);
    const auto in = random_instance(7, 3, rng);
    const double eta_max = stability_bound(in.R, in.cs).eta_max;
    const auto gauss = make_noise(noise::Gaussian{0.5});
    CHECK_THROWS_AS(steady_state_msd(inputs(in, eta_max * 1.01, 2.0, gauss)), InstabilityError);
    CHECK_THROWS_AS(steady_state_msd(inputs(in, 0.0, 2.0, gauss)), InstabilityError);
    try {
        steady_state_msd(inputs(in, 1.0, 2.0, gauss));
        FAIL("expected InstabilityError");
    } catch (const InstabilityError& e) {
        CHECK(e.bound() == doctest::Approx(eta_max));
        CHECK(std::string(e.code()) == "unstable");
    }
    CHECK_THROWS_AS(steady_state_msd(inputs(in, 0.01, 2.0, make_noise(noise::Cauchy{1.0}))), InfiniteMomentError);
    CHECK_THROWS_AS(steady_state_msd(inputs(in, 0.01, 2.0, make_noise(noise::AlphaStable{1.5, 0, 0.4, 0}))),
                    InfiniteMomentError);
    CHECK_NOTHROW(steady_state_msd(inputs(in, 0.01, 2.0, make_noise(noise::AlphaStable{2.0, 0, 0.4, 0}))));

    Matrix bad = in.R;
    bad(0, 1) += 0.1;
    CHECK_THROWS_AS(validate_covariance(bad), ConfigError);
    CHECK_THROWS_AS(validate_covariance(-in.R), ConfigError);
    CHECK_THROWS_AS(optimal_weights(Matrix::Identity(5, 5), in.cs, in.W_true), DimensionError);
}

TEST_CASE("kron and vec")
{
    Matrix a(2, 2), b(2, 1);
    a << 1, 2, 3, 4;
    b << 5, 6;
    const Matrix k = kron(a, b);
    CHECK(k.rows() == 4);
    CHECK(k(3, 1) == 24);
    CHECK(k(1, 0) == 6);
    const Vector v = vec(a);
    CHECK(v(1) == 3);
    CHECK(v(2) == 2);
}
