#pragma once

#include "cmcc/random.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <variant>

namespace cmcc {

namespace noise {

/// No disturbance at all (v = 0).
struct Zero {};
struct Gaussian {
    double variance = 1.0;
};
/// +-1 with equal probability.
struct Binary {};
/// p(v) = exp(-|v| / b) / (2 b)
struct Laplace {
    double b = 1.0;
};
/// p(v) = s / (pi (s^2 + v^2))
struct Cauchy {
    double s = 1.0;
};
/// (1 - theta) N(lambda1, var1) + theta N(lambda2, var2)
struct MixedGaussian {
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    double var1 = 0.01;
    double var2 = 100.0;
    double theta = 0.05;
};
/// Characteristic function exp{j delta t - gamma |t|^alpha [1 + j beta sgn(t) S(t, alpha)]}
/// with S = tan(alpha pi / 2) for alpha != 1 and (2 / pi) log|t| for alpha = 1.
struct AlphaStable {
    double alpha = 1.5;
    double beta = 0.0;
    double gamma = 1.0;
    double delta = 0.0;
};

} // namespace noise

/// One of the disturbance distributions, times an output scale factor.
struct NoiseModel {
    using Distribution = std::variant<noise::Zero, noise::Gaussian, noise::Binary, noise::Laplace, noise::Cauchy,
                                      noise::MixedGaussian, noise::AlphaStable>;
    Distribution dist = noise::Gaussian{};
    double scale = 1.0;
};

/// Throws ConfigError on out-of-range parameters.
void validate(const NoiseModel& model);

/// Validated constructors.
NoiseModel make_noise(NoiseModel::Distribution dist, double scale = 1.0);

/// "none", "gaussian", "binary", "laplace", "cauchy", "mixed-gaussian", "alpha-stable".
std::string noise_type_name(const NoiseModel& model);
/// Compact one-line description with parameters, e.g. "mixed-gaussian(0,0,0.01,100,0.05)".
std::string describe(const NoiseModel& model);

/// Gaussian, or the zero-variance degenerate case.
bool is_gaussian(const NoiseModel& model) noexcept;

/// E[v^2] (about zero) when finite, nullopt for Cauchy and alpha-stable with alpha < 2.
std::optional<double> second_moment(const NoiseModel& model);

/// Returns a copy rescaled so that E[v^2] == variance. Supported for
/// Gaussian, Binary and Laplace; other families throw ConfigError.
NoiseModel with_variance(const NoiseModel& model, double variance);

/// One draw, already multiplied by the scale factor.
double sample(const NoiseModel& model, RandomStream& rng);

/// Chambers-Mallows-Stuck draw from the standard-parameterized stable law
/// S(alpha, beta, scale, location) with characteristic function
/// exp{i loc t - scale^alpha |t|^alpha (1 - i beta sgn(t) tan(pi alpha / 2))}
/// (alpha != 1), exp{i loc t - scale |t| (1 + i beta (2/pi) sgn(t) log|t|)} (alpha = 1).
double sample_stable(double alpha, double beta, double scale, double location, RandomStream& rng);

enum class Moment {
    Gain,               // E[exp(-v^2 / (2 s^2))]
    GainSquared,        // E[exp(-v^2 / s^2)]
    GainCurvature,      // E[(v^2 / s^4 - 1 / s^2) exp(-v^2 / (2 s^2))]
    GainSquaredCurvature, // E[(2 v^2 / s^4 - 1 / s^2) exp(-v^2 / s^2)]
    Variance,           // E[v^2]
};

std::string to_string(Moment kind);

struct MomentEstimate {
    double value = 0.0;
    double std_error = 0.0; // zero for closed forms, quadrature error bound otherwise
};

struct MomentOptions {
    long mc_draws = 1'000'000;
    std::uint64_t mc_seed = 0x5eed;
};

/// Closed form for Gaussian and Binary, adaptive Gauss-Kronrod quadrature for
/// Laplace, Cauchy and mixed Gaussian, Monte Carlo for alpha-stable.
/// Throws InfiniteMomentError for E[v^2] of an infinite-variance model.
MomentEstimate noise_moment(const NoiseModel& model, Moment kind, double sigma,
                            const MomentOptions& opts = {});

/// Density of the scaled model; defined for every family except Binary and
/// AlphaStable.
double density(const NoiseModel& model, double v);

} // namespace cmcc
