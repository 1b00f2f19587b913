#include "cmcc/noise.hpp"

#include "cmcc/errors.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <vector>

namespace cmcc {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr double pi = std::numbers::pi;

void require(bool ok, const std::string& msg)
{
    if (!ok)
        throw ConfigError(msg);
}

bool positive(double v) { return std::isfinite(v) && v > 0.0; }

} // namespace

void validate(const NoiseModel& m)
{
    require(positive(m.scale), "noise scale factor must be positive");
    std::visit(overloaded{
                   [](const noise::Zero&) {},
                   [](const noise::Gaussian& g) { require(positive(g.variance), "gaussian variance must be positive"); },
                   [](const noise::Binary&) {},
                   [](const noise::Laplace& l) { require(positive(l.b), "laplace scale b must be positive"); },
                   [](const noise::Cauchy& c) { require(positive(c.s), "cauchy scale must be positive"); },
                   [](const noise::MixedGaussian& g) {
                       require(positive(g.var1) && positive(g.var2), "mixed-gaussian variances must be positive");
                       require(std::isfinite(g.lambda1) && std::isfinite(g.lambda2), "mixed-gaussian means must be finite");
                       require(g.theta >= 0.0 && g.theta <= 1.0, "mixed-gaussian theta must lie in [0, 1]");
                   },
                   [](const noise::AlphaStable& a) {
                       require(a.alpha > 0.0 && a.alpha <= 2.0, "alpha-stable alpha must lie in (0, 2]");
                       require(a.beta >= -1.0 && a.beta <= 1.0, "alpha-stable beta must lie in [-1, 1]");
                       require(positive(a.gamma), "alpha-stable gamma must be positive");
                       require(std::isfinite(a.delta), "alpha-stable delta must be finite");
                   },
               },
               m.dist);
}

NoiseModel make_noise(NoiseModel::Distribution dist, double scale)
{
    NoiseModel m{std::move(dist), scale};
    validate(m);
    return m;
}

std::string noise_type_name(const NoiseModel& m)
{
    return std::visit(overloaded{
                          [](const noise::Zero&) { return std::string("none"); },
                          [](const noise::Gaussian&) { return std::string("gaussian"); },
                          [](const noise::Binary&) { return std::string("binary"); },
                          [](const noise::Laplace&) { return std::string("laplace"); },
                          [](const noise::Cauchy&) { return std::string("cauchy"); },
                          [](const noise::MixedGaussian&) { return std::string("mixed-gaussian"); },
                          [](const noise::AlphaStable&) { return std::string("alpha-stable"); },
                      },
                      m.dist);
}

std::string describe(const NoiseModel& m)
{
    std::ostringstream os;
    os.imbue(std::locale::classic());
    os << noise_type_name(m) << '(';
    std::visit(overloaded{
                   [&](const noise::Zero&) {},
                   [&](const noise::Gaussian& g) { os << g.variance; },
                   [&](const noise::Binary&) {},
                   [&](const noise::Laplace& l) { os << l.b; },
                   [&](const noise::Cauchy& c) { os << c.s; },
                   [&](const noise::MixedGaussian& g) {
                       os << g.lambda1 << ' ' << g.lambda2 << ' ' << g.var1 << ' ' << g.var2 << ' ' << g.theta;
                   },
                   [&](const noise::AlphaStable& a) { os << a.alpha << ' ' << a.beta << ' ' << a.gamma << ' ' << a.delta; },
               },
               m.dist);
    os << ')';
    if (m.scale != 1.0)
        os << '*' << m.scale;
    return os.str();
}

bool is_gaussian(const NoiseModel& m) noexcept
{
    return std::holds_alternative<noise::Gaussian>(m.dist) || std::holds_alternative<noise::Zero>(m.dist);
}

std::optional<double> second_moment(const NoiseModel& m)
{
    const double c2 = m.scale * m.scale;
    return std::visit(overloaded{
                          [&](const noise::Zero&) -> std::optional<double> { return 0.0; },
                          [&](const noise::Gaussian& g) -> std::optional<double> { return c2 * g.variance; },
                          [&](const noise::Binary&) -> std::optional<double> { return c2; },
                          [&](const noise::Laplace& l) -> std::optional<double> { return c2 * 2.0 * l.b * l.b; },
                          [&](const noise::Cauchy&) -> std::optional<double> { return std::nullopt; },
                          [&](const noise::MixedGaussian& g) -> std::optional<double> {
                              return c2 * ((1.0 - g.theta) * (g.lambda1 * g.lambda1 + g.var1) +
                                           g.theta * (g.lambda2 * g.lambda2 + g.var2));
                          },
                          [&](const noise::AlphaStable& a) -> std::optional<double> {
                              if (a.alpha < 2.0)
                                  return std::nullopt;
                              return c2 * (2.0 * a.gamma + a.delta * a.delta);
                          },
                      },
                      m.dist);
}

NoiseModel with_variance(const NoiseModel& m, double variance)
{
    require(positive(variance), "noise variance must be positive");
    NoiseModel out = m;
    const double c = m.scale;
    std::visit(overloaded{
                   [&](noise::Gaussian& g) { g.variance = variance / (c * c); },
                   [&](noise::Binary&) { out.scale = std::sqrt(variance); },
                   [&](noise::Laplace& l) { l.b = std::sqrt(variance / 2.0) / c; },
                   [&](auto&) {
                       throw ConfigError("cannot set the variance of " + noise_type_name(m) + " noise");
                   },
               },
               out.dist);
    return out;
}

double sample_stable(double alpha, double beta, double scale, double location, RandomStream& rng)
{
    double u = 0.0;
    do {
        u = rng.uniform();
    } while (u == 0.0);
    const double V = pi * (u - 0.5);
    double W = 0.0;
    do {
        W = rng.exponential();
    } while (W == 0.0);

    if (alpha == 1.0) {
        const double half_pi = 0.5 * pi;
        const double a = half_pi + beta * V;
        const double X = (2.0 / pi) * (a * std::tan(V) - beta * std::log(half_pi * W * std::cos(V) / a));
        return scale * X + (2.0 / pi) * beta * scale * std::log(scale) + location;
    }
    const double t = beta * std::tan(0.5 * pi * alpha);
    const double B = std::atan(t) / alpha;
    const double S = std::pow(1.0 + t * t, 1.0 / (2.0 * alpha));
    const double X = S * std::sin(alpha * (V + B)) / std::pow(std::cos(V), 1.0 / alpha) *
                     std::pow(std::cos(V - alpha * (V + B)) / W, (1.0 - alpha) / alpha);
    return scale * X + location;
}

double sample(const NoiseModel& m, RandomStream& rng)
{
    const double v = std::visit(
        overloaded{
            [&](const noise::Zero&) { return 0.0; },
            [&](const noise::Gaussian& g) { return std::sqrt(g.variance) * rng.normal(); },
            [&](const noise::Binary&) { return rng.uniform() < 0.5 ? -1.0 : 1.0; },
            [&](const noise::Laplace& l) { return l.b * (rng.exponential() - rng.exponential()); },
            [&](const noise::Cauchy& c) {
                double u = 0.0;
                do {
                    u = rng.uniform();
                } while (u == 0.0);
                return c.s * std::tan(pi * (u - 0.5));
            },
            [&](const noise::MixedGaussian& g) {
                const bool outlier = rng.uniform() < g.theta;
                const double z = rng.normal();
                return outlier ? g.lambda2 + std::sqrt(g.var2) * z : g.lambda1 + std::sqrt(g.var1) * z;
            },
            [&](const noise::AlphaStable& a) {
                // The sign convention on beta above is opposite to the
                // standard form for alpha != 1 and equal for alpha == 1.
                const double beta = a.alpha == 1.0 ? a.beta : -a.beta;
                return sample_stable(a.alpha, beta, std::pow(a.gamma, 1.0 / a.alpha), a.delta, rng);
            },
        },
        m.dist);
    return m.scale * v;
}

std::string to_string(Moment kind)
{
    switch (kind) {
    case Moment::Gain: return "E[exp(-v^2/(2s^2))]";
    case Moment::GainSquared: return "E[exp(-v^2/s^2)]";
    case Moment::GainCurvature: return "E[(v^2/s^4-1/s^2)exp(-v^2/(2s^2))]";
    case Moment::GainSquaredCurvature: return "E[(2v^2/s^4-1/s^2)exp(-v^2/s^2)]";
    case Moment::Variance: return "E[v^2]";
    }
    return "?";
}

double density(const NoiseModel& m, double v)
{
    const double c = m.scale;
    const double x = v / c;
    const double p = std::visit(
        overloaded{
            [&](const noise::Gaussian& g) {
                return std::exp(-x * x / (2.0 * g.variance)) / std::sqrt(2.0 * pi * g.variance);
            },
            [&](const noise::Laplace& l) { return std::exp(-std::abs(x) / l.b) / (2.0 * l.b); },
            [&](const noise::Cauchy& ca) { return ca.s / (pi * (ca.s * ca.s + x * x)); },
            [&](const noise::MixedGaussian& g) {
                auto normal = [&](double mu, double var) {
                    return std::exp(-(x - mu) * (x - mu) / (2.0 * var)) / std::sqrt(2.0 * pi * var);
                };
                return (1.0 - g.theta) * normal(g.lambda1, g.var1) + g.theta * normal(g.lambda2, g.var2);
            },
            [&](const auto&) -> double {
                throw ConfigError("no closed-form density for " + noise_type_name(m) + " noise");
            },
        },
        m.dist);
    return p / c;
}

namespace {

// h(v) for each moment kind; `s` is the kernel bandwidth.
double integrand(Moment kind, double v, double s)
{
    const double s2 = s * s;
    const double v2 = v * v;
    switch (kind) {
    case Moment::Gain: return std::exp(-v2 / (2.0 * s2));
    case Moment::GainSquared: return std::exp(-v2 / s2);
    case Moment::GainCurvature: return (v2 / (s2 * s2) - 1.0 / s2) * std::exp(-v2 / (2.0 * s2));
    case Moment::GainSquaredCurvature: return (2.0 * v2 / (s2 * s2) - 1.0 / s2) * std::exp(-v2 / s2);
    case Moment::Variance: return v2;
    }
    return 0.0;
}

// Gaussian N(0, var): closed forms from E[v^2 exp(-v^2/(2a^2))] = var a^3 / (a^2 + var)^{3/2}.
double gaussian_moment(Moment kind, double var, double s)
{
    const double s2 = s * s;
    const double g1 = s / std::sqrt(s2 + var);
    const double g2 = s / std::sqrt(s2 + 2.0 * var);
    switch (kind) {
    case Moment::Gain: return g1;
    case Moment::GainSquared: return g2;
    case Moment::GainCurvature: {
        const double v2g = var * s * s2 / std::pow(s2 + var, 1.5);
        return v2g / (s2 * s2) - g1 / s2;
    }
    case Moment::GainSquaredCurvature: {
        const double v2g = var * s * s2 / std::pow(s2 + 2.0 * var, 1.5);
        return 2.0 * v2g / (s2 * s2) - g2 / s2;
    }
    case Moment::Variance: return var;
    }
    return 0.0;
}

// Characteristic lengths of a density, used as quadrature breakpoints.
std::vector<double> breakpoints(const NoiseModel& m, double s)
{
    std::vector<double> pts{0.0, -s, s, -3.0 * s, 3.0 * s};
    auto add_component = [&](double mu, double sd) {
        for (double k : {-8.0, -3.0, -1.0, 0.0, 1.0, 3.0, 8.0})
            pts.push_back(m.scale * (mu + k * sd));
    };
    std::visit(overloaded{
                   [&](const noise::Laplace& l) { add_component(0.0, l.b); },
                   [&](const noise::Cauchy& c) { add_component(0.0, c.s); },
                   [&](const noise::Gaussian& g) { add_component(0.0, std::sqrt(g.variance)); },
                   [&](const noise::MixedGaussian& g) {
                       add_component(g.lambda1, std::sqrt(g.var1));
                       add_component(g.lambda2, std::sqrt(g.var2));
                   },
                   [](const auto&) {},
               },
               m.dist);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}

MomentEstimate quadrature_moment(const NoiseModel& m, Moment kind, double s)
{
    using boost::math::quadrature::gauss_kronrod;
    const auto f = [&](double v) { return integrand(kind, v, s) * density(m, v); };
    const auto pts = breakpoints(m, s);
    constexpr double inf = std::numeric_limits<double>::infinity();
    constexpr unsigned max_depth = 20;
    constexpr double tol = 1e-12;

    double total = 0.0;
    double err_total = 0.0;
    double err = 0.0;
    total += gauss_kronrod<double, 61>::integrate(f, -inf, pts.front(), max_depth, tol, &err);
    err_total += err;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        total += gauss_kronrod<double, 61>::integrate(f, pts[i], pts[i + 1], max_depth, tol, &err);
        err_total += err;
    }
    total += gauss_kronrod<double, 61>::integrate(f, pts.back(), inf, max_depth, tol, &err);
    err_total += err;
    return {total, err_total};
}

MomentEstimate monte_carlo_moment(const NoiseModel& m, Moment kind, double s, const MomentOptions& opts)
{
    RandomStream rng(derive_seed(opts.mc_seed, stream::moment, 0));
    double mean = 0.0;
    double m2 = 0.0;
    for (long i = 0; i < opts.mc_draws; ++i) {
        const double h = integrand(kind, sample(m, rng), s);
        const double delta = h - mean;
        mean += delta / static_cast<double>(i + 1);
        m2 += delta * (h - mean);
    }
    const double n = static_cast<double>(opts.mc_draws);
    return {mean, std::sqrt(m2 / (n - 1.0) / n)};
}

} // namespace

MomentEstimate noise_moment(const NoiseModel& m, Moment kind, double sigma, const MomentOptions& opts)
{
    if (!(sigma > 0.0))
        throw ConfigError("kernel bandwidth must be positive");
    validate(m);
    if (kind == Moment::Variance && !second_moment(m))
        throw InfiniteMomentError(describe(m) + " noise has infinite variance; the steady-state "
                                                 "prediction needs a finite E[v^2]");

    const double c = m.scale;
    return std::visit(
        overloaded{
            [&](const noise::Gaussian& g) { return MomentEstimate{gaussian_moment(kind, c * c * g.variance, sigma), 0.0}; },
            [&](const noise::Zero&) { return MomentEstimate{integrand(kind, 0.0, sigma), 0.0}; },
            [&](const noise::Binary&) { return MomentEstimate{integrand(kind, c, sigma), 0.0}; },
            [&](const noise::AlphaStable& a) {
                if (kind == Moment::Variance)
                    return MomentEstimate{*second_moment(m), 0.0};
                (void)a;
                return monte_carlo_moment(m, kind, sigma, opts);
            },
            [&](const auto&) { return quadrature_moment(m, kind, sigma); },
        },
        m.dist);
}

} // namespace cmcc
