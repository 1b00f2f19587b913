#pragma once

#include "cmcc/filters.hpp"
#include "cmcc/noise.hpp"
#include "cmcc/types.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cmcc {

enum class ScenarioKind { SysId, Beamforming, TheoryValidation };
enum class ConstraintSource { Explicit, RandomSeeded, LinearPhase };
enum class CovarianceSource { Explicit, RandomSpd, Identity };
enum class SweepKind { Eta, Sigma, Alpha, Gamma, NoiseVariance };
enum class Profile { Paper, Fast };

std::string_view to_string(ScenarioKind k) noexcept;
std::string_view to_string(SweepKind k) noexcept;

struct AlgorithmConfig {
    Algorithm algo = Algorithm::CMCC;
    HyperParams hp;
    bool calibrate_eta = false; // match the reference algorithm's initial convergence
    std::string label;          // defaults to the algorithm name
};

struct SweepAxis {
    SweepKind kind = SweepKind::Eta;
    std::vector<double> values;
    std::vector<double> paired_eta; // optional, same length as values (sigma sweeps)
};

/// Uniform linear array, half-wavelength spacing, real narrowband model.
struct BeamformingConfig {
    double look_deg = 0.0;
    std::vector<double> interferers_deg{-25.0, 30.0, 60.0};
    double snr_db = 0.0; // relative to unit-variance sensor noise
    double inr_db = 10.0;
    double sensor_noise_variance = 1.0;
    double grid_step_deg = 0.5;
};

/// Step-size matching of baselines against a reference algorithm: the mean
/// per-run MSD (dB) around `checkpoint` is matched by bisection on log(eta).
/// By default the pilot runs are noiseless, so only the transient is matched.
struct CalibrationConfig {
    Algorithm reference = Algorithm::CMCC;
    bool noiseless = true;
    long checkpoint = 150;
    long window = 20;
    long pilot_runs = 100;
    double eta_lo = 1e-4;
    double eta_hi = 1.0;
};

/// A run counts as diverged when a weight goes non-finite, or when its mean
/// squared deviation over the steady window exceeds
/// ratio * max(||W(0) - W_ref||^2, floor), i.e. by default when it ends no
/// closer to the reference than it started. With magnitude_check off only
/// non-finite weights count (useful when W(0) already equals W_ref).
struct DivergenceConfig {
    double ratio = 1.0;
    double floor = 1e-3;
    bool magnitude_check = true;
};

struct ScenarioConfig {
    int version = 1;
    std::string name = "experiment";
    ScenarioKind scenario = ScenarioKind::SysId;
    int M = 7;
    int K = 3;
    std::optional<Vector> W_true; // nullopt: the default 7-tap system

    ConstraintSource constraint_source = ConstraintSource::RandomSeeded;
    Matrix C;                 // explicit source only
    std::optional<Vector> f;  // explicit f; otherwise f = C^T W* + f_offset
    Vector f_offset;          // length K; empty means zero

    CovarianceSource covariance_source = CovarianceSource::RandomSpd;
    Matrix R;                 // explicit source only
    double eig_lo = 0.2;      // eigenvalue draw range before trace normalization
    double eig_hi = 1.0;

    NoiseModel noise;
    std::vector<AlgorithmConfig> algorithms;
    long runs = 500;
    long iterations = 3000;
    long steady_window = 200;
    std::uint64_t master_seed = 20170101;
    int workers = 0; // 0: OpenMP default

    std::vector<SweepAxis> sweep;
    BeamformingConfig beam;
    CalibrationConfig calibration;
    DivergenceConfig divergence;

    std::string source_text; // canonical JSON the config was parsed from
};

/// Default unknown system used by the system-identification studies.
Vector default_system();

/// Throws ConfigError with a diagnostic on schema or range violations.
ScenarioConfig parse_config(std::string_view json_text);
ScenarioConfig load_config(const std::filesystem::path& path);

/// Throws ConfigError if fields are inconsistent (dimensions, counts).
void validate(const ScenarioConfig& cfg);

/// fast: runs / 10 and iterations / 3 (never below the steady window + 1).
void apply_profile(ScenarioConfig& cfg, Profile profile);

/// Environment variable that overrides master_seed when set.
inline constexpr const char* kSeedEnvVar = "CMCC_MASTER_SEED";
/// Applies kSeedEnvVar if present; returns true when it did.
bool apply_seed_override(ScenarioConfig& cfg);

/// FNV-1a 64 of the canonical config text plus the effective counts and seed.
std::string config_hash(const ScenarioConfig& cfg);

} // namespace cmcc
