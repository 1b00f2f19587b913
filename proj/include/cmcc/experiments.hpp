#pragma once

#include "cmcc/config.hpp"
#include "cmcc/monte_carlo.hpp"
#include "cmcc/theory.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace cmcc {

/// Random mode: R = V diag(lambda) V^T with V Haar-orthogonal (QR of a
/// Gaussian matrix with sign-fixed diagonal), lambda uniform on [lo, hi] and
/// rescaled so tr{R} = M. Explicit mode validates and returns `explicit_R`.
Matrix make_input_covariance(int M, CovarianceSource source, std::uint64_t seed, double lo = 0.2,
                             double hi = 1.0, const Matrix& explicit_R = {});

/// M x K matrix with i.i.d. standard normal entries.
Matrix random_constraint_matrix(int M, int K, std::uint64_t seed);

/// Shared per-scenario geometry: the input law, constraints and reference.
struct Geometry {
    Matrix R;
    std::shared_ptr<const ConstraintSet> cs;
    Vector W_true;
    Vector W_ref; // W_opt (sysid), LCMV optimum (beamforming)
    InputModel input;
    double eta_max = 0.0; // stability bound for CMCC on this geometry
};

/// Covariance seeded by derive_seed(master, covariance, 0) and random
/// constraints by derive_seed(master, constraints, 0).
Geometry build_geometry(const ScenarioConfig& cfg);

/// Real array snapshot model for the beamforming scenario, and its exact
/// covariance R_ml = sum_k amp_k^2 / 2 cos((m - l) psi_k) + noise_var delta_ml.
ArrayInput make_array_input(int M, const BeamformingConfig& beam);
Matrix array_covariance(const ArrayInput& input);

struct BeamPattern {
    std::string label;
    std::vector<double> angle_deg;
    std::vector<double> gain_db; // 20 log10 |A(theta)| / |A(look)|
    bool degenerate = false;     // |A(look)| = 0: gains left at 0
};

/// A(theta) = sum_m W_m exp(j (m - (M-1)/2) pi sin theta), the amplitude of the
/// array output for a unit real sinusoid arriving from theta.
double array_response(const Vector& W, double theta_deg);

/// Throws ConfigError for angles outside [-90, 90].
BeamPattern beampattern(const Vector& W, const std::vector<double>& grid_deg, double look_deg = 0.0);

/// Evenly spaced grid on [-90, 90].
std::vector<double> angle_grid(double step_deg);

struct CalibrationRecord {
    std::string label;
    double eta = 0.0;
    double target_db = 0.0;   // reference probe value
    double achieved_db = 0.0; // candidate probe value at eta
    bool matched = false;     // within 0.5 dB of the target
};

struct ExperimentResult {
    std::string name;
    ScenarioKind scenario = ScenarioKind::SysId;
    std::string noise;
    std::vector<std::pair<SweepKind, double>> point; // empty outside sweeps
    std::vector<AlgoStats> algos;
    std::vector<CalibrationRecord> calibration;
    std::optional<SteadyStatePrediction> theory;
    std::string theory_note; // reason when the overlay is unavailable
    std::vector<BeamPattern> patterns;
    double eta_max = 0.0;
    std::uint64_t seed = 0;
    std::string config_hash;
    long runs = 0;
    long iterations = 0;
    long steady_window = 0;

    const AlgoStats* find(std::string_view label) const;
};

/// Baseline step sizes for entries marked calibrate_eta: a log-grid scan then
/// bisection on log(eta), matching the reference algorithm's probe value.
/// Returns one record per calibrated entry and writes the etas into `algos`.
std::vector<CalibrationRecord> calibrate_step_sizes(const ScenarioConfig& cfg, const Problem& problem,
                                                    std::vector<AlgorithmConfig>& algos);

ExperimentResult run_sysid(const ScenarioConfig& cfg);
ExperimentResult run_beamforming(const ScenarioConfig& cfg);
/// One result per sweep point (a single point without a sweep), each with the
/// theory overlay for the first CMCC entry, or a note when it is unavailable.
std::vector<ExperimentResult> run_theory_validation(const ScenarioConfig& cfg);

/// Cartesian product of the configured axes, first axis outermost. Geometry
/// comes from the master seed and is shared; point i runs with seed
/// derive_seed(master, sweep_point, i).
std::vector<ExperimentResult> run_parameter_sweep(const ScenarioConfig& cfg);

/// Applies one sweep coordinate to a config copy.
void apply_sweep_value(ScenarioConfig& cfg, SweepKind kind, double value, std::optional<double> paired_eta);

/// Dispatches on the scenario and the presence of a sweep.
std::vector<ExperimentResult> run_experiment(const ScenarioConfig& cfg);

/// Theory inputs for the first CMCC entry of `cfg` on `geometry`.
TheoryInputs theory_inputs(const ScenarioConfig& cfg, const Geometry& geometry);

} // namespace cmcc
