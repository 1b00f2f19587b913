#include "cmcc/errors.hpp"
#include "cmcc/experiments.hpp"

#include <cmath>
#include <complex>
#include <numbers>

namespace cmcc {

namespace {

double to_amplitude(double db, double noise_var)
{
    // A unit-amplitude cosine carries power 1/2 per sensor.
    return std::sqrt(2.0 * std::pow(10.0, db / 10.0) * noise_var);
}

double psi_of(double theta_deg)
{
    return std::numbers::pi * std::sin(theta_deg * std::numbers::pi / 180.0);
}

} // namespace

ArrayInput make_array_input(int M, const BeamformingConfig& beam)
{
    ArrayInput in;
    in.M = M;
    // SNR and INR are relative to the sensor noise power; with zero sensor
    // noise they are taken relative to unit power.
    const double ref = beam.sensor_noise_variance > 0.0 ? beam.sensor_noise_variance : 1.0;
    in.amp.push_back(to_amplitude(beam.snr_db, ref));
    in.psi.push_back(psi_of(beam.look_deg));
    for (double th : beam.interferers_deg) {
        in.amp.push_back(to_amplitude(beam.inr_db, ref));
        in.psi.push_back(psi_of(th));
    }
    in.noise_sd = std::sqrt(beam.sensor_noise_variance);
    return in;
}

Matrix array_covariance(const ArrayInput& input)
{
    Matrix R = Matrix::Identity(input.M, input.M) * (input.noise_sd * input.noise_sd);
    for (std::size_t k = 0; k < input.amp.size(); ++k) {
        const double p = 0.5 * input.amp[k] * input.amp[k];
        for (int m = 0; m < input.M; ++m)
            for (int l = 0; l < input.M; ++l)
                R(m, l) += p * std::cos((m - l) * input.psi[k]);
    }
    return R;
}

double array_response(const Vector& W, double theta_deg)
{
    const double psi = psi_of(theta_deg);
    const double center = 0.5 * static_cast<double>(W.size() - 1);
    std::complex<double> acc{0.0, 0.0};
    for (Eigen::Index m = 0; m < W.size(); ++m)
        acc += W(m) * std::polar(1.0, (static_cast<double>(m) - center) * psi);
    return std::abs(acc);
}

BeamPattern beampattern(const Vector& W, const std::vector<double>& grid_deg, double look_deg)
{
    BeamPattern bp;
    const double ref = array_response(W, look_deg);
    bp.degenerate = !(ref > 1e-12 * W.lpNorm<1>());
    bp.angle_deg = grid_deg;
    bp.gain_db.assign(grid_deg.size(), 0.0);
    for (std::size_t i = 0; i < grid_deg.size(); ++i) {
        const double th = grid_deg[i];
        if (!(th >= -90.0 && th <= 90.0))
            throw ConfigError("beampattern angle " + std::to_string(th) + " outside [-90, 90]");
        if (!bp.degenerate)
            bp.gain_db[i] = 20.0 * std::log10(array_response(W, th) / ref);
    }
    return bp;
}

std::vector<double> angle_grid(double step_deg)
{
    if (!(step_deg > 0.0))
        throw ConfigError("angle grid step must be positive");
    const auto n = static_cast<long>(std::floor(180.0 / step_deg + 1e-9));
    std::vector<double> g;
    g.reserve(static_cast<std::size_t>(n + 1));
    for (long i = 0; i <= n; ++i)
        g.push_back(-90.0 + static_cast<double>(i) * step_deg);
    return g;
}

} // namespace cmcc
