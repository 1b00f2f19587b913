#pragma once
// Independent reference computations shared by the unit tests.

#include "cmcc/random.hpp"
#include "cmcc/types.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <vector>

namespace oracle {

using cmcc::Matrix;
using cmcc::Vector;

inline Matrix random_matrix(int rows, int cols, cmcc::RandomStream& rng)
{
    Matrix m(rows, cols);
    for (int j = 0; j < cols; ++j)
        for (int i = 0; i < rows; ++i)
            m(i, j) = rng.normal();
    return m;
}

inline Vector random_vector(int n, cmcc::RandomStream& rng) { return random_matrix(n, 1, rng).col(0); }

// SPD with trace n built as A A^T + n I, rescaled.
inline Matrix random_spd(int n, cmcc::RandomStream& rng)
{
    const Matrix A = random_matrix(n, n, rng);
    Matrix R = A * A.transpose() + static_cast<double>(n) * Matrix::Identity(n, n);
    R *= static_cast<double>(n) / R.trace();
    return 0.5 * (R + R.transpose());
}

// min (W - W0)^T R (W - W0) s.t. C^T W = f via the dense KKT system.
inline Vector kkt_weighted_projection(const Matrix& R, const Matrix& C, const Vector& f, const Vector& W0)
{
    const auto M = R.rows(), K = C.cols();
    Matrix A = Matrix::Zero(M + K, M + K);
    A.topLeftCorner(M, M) = 2.0 * R;
    A.topRightCorner(M, K) = C;
    A.bottomLeftCorner(K, M) = C.transpose();
    Vector b(M + K);
    b.head(M) = 2.0 * R * W0;
    b.tail(K) = f;
    return A.fullPivLu().solve(b).head(M);
}

// Largest distance between the empirical CDF of `xs` and `cdf`.
template <class Cdf>
double ks_distance(std::vector<double> xs, Cdf cdf)
{
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double F = cdf(xs[i]);
        d = std::max({d, std::abs(F - static_cast<double>(i) / n), std::abs(static_cast<double>(i + 1) / n - F)});
    }
    return d;
}

// Mean and standard error of f over `draws`.
struct Estimate {
    double mean = 0.0;
    double se = 0.0;
};

template <class F>
Estimate mean_se(const std::vector<double>& draws, F f)
{
    double s = 0.0, s2 = 0.0;
    for (double v : draws) {
        const double y = f(v);
        s += y;
        s2 += y * y;
    }
    const double n = static_cast<double>(draws.size());
    const double mean = s / n;
    return {mean, std::sqrt(std::max(0.0, s2 / n - mean * mean) / n)};
}

} // namespace oracle
