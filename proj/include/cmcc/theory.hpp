#pragma once

#include "cmcc/constraints.hpp"
#include "cmcc/noise.hpp"
#include "cmcc/types.hpp"

namespace cmcc {

/// Everything the steady-state predictor needs. R is the input covariance
/// E[X X^T] (symmetric positive definite).
struct TheoryInputs {
    Matrix R;
    ConstraintSet cs;
    Vector W_true;
    double eta = 0.01;
    double sigma = 1.0;
    NoiseModel noise;
};

/// Which approximation produced the limiting gains.
enum class GainPath {
    Auto,     // Gaussian closed form for Gaussian noise, Taylor expansion otherwise
    Gaussian, // closed form, Gaussian noise only
    Taylor,   // second-order expansion around the noise
};

struct OptimalWeights {
    Vector W_opt;
    Vector eps_w; // W_true - W_opt
};

struct StabilityBound {
    double eta_max = 0.0;  // 2 / (2 lambda_max + tr{Upsilon})
    double lambda_max = 0.0;
    double trace = 0.0;
    Matrix Upsilon;        // P R P
};

struct LimitingGains {
    double Eg = 1.0;  // lim E[g(e)]
    double Eg2 = 1.0; // lim E[g^2(e)]
    GainPath path = GainPath::Gaussian;
};

struct SteadyStatePrediction {
    Vector W_opt;
    Vector eps_w;
    double excess = 0.0; // eps_w^T R eps_w
    double noise_power = 0.0; // E[v^2]
    double Eg = 1.0;
    double Eg2 = 1.0;
    GainPath path = GainPath::Gaussian;
    double eta_max = 0.0;
    double eta_max_with_gains = 0.0; // 2 Eg / ((2 lambda_max + tr) Eg2)
    double spectral_radius = 0.0;    // of F
    double S = 0.0;                  // steady-state MSD (linear scale)
    Matrix Upsilon;
    Matrix F;
};

/// Throws ConfigError unless R is square, symmetric within 1e-10 and
/// positive definite.
void validate_covariance(const Matrix& R);

/// W_opt = W* + R^{-1} C (C^T R^{-1} C)^{-1} (f - C^T W*), eps_w = W* - W_opt.
OptimalWeights optimal_weights(const Matrix& R, const ConstraintSet& cs, const Vector& W_true);

StabilityBound stability_bound(const Matrix& R, const ConstraintSet& cs);

/// Throws InfiniteMomentError for infinite-variance noise on the Taylor path
/// and ConfigError when the Gaussian path is forced on non-Gaussian noise.
LimitingGains limiting_gains(const TheoryInputs& in, const Vector& eps_w, GainPath path = GainPath::Auto);

/// F = (I - eta Eg R) P (x) (I - eta Eg R) P + 2 eta^2 Eg2 (RP (x) RP)
///     + eta^2 Eg2 vec{R} vec^T{Upsilon} - eta^2 Eg^2 (RP (x) RP),
/// so that F vec{T} = vec{U} for the weighted-norm recursion.
Matrix f_matrix(const Matrix& R, const ConstraintSet& cs, double eta, double Eg, double Eg2);

/// S = eta^2 (eps_w^T R eps_w + E[v^2]) vec^T{Upsilon} (I - F)^{-1} vec{I} Eg2.
/// Throws InstabilityError when eta is outside (0, eta_max) or I - F is
/// numerically singular; InfiniteMomentError for infinite-variance noise.
SteadyStatePrediction steady_state_msd(const TheoryInputs& in, GainPath path = GainPath::Auto);

/// Kronecker product.
Matrix kron(const Matrix& a, const Matrix& b);

/// Column-stacking vec{A}.
Vector vec(const Matrix& a);

} // namespace cmcc
