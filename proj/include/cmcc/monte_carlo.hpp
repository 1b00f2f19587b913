#pragma once

#include "cmcc/config.hpp"
#include "cmcc/constraints.hpp"
#include "cmcc/filters.hpp"
#include "cmcc/noise.hpp"
#include "cmcc/random.hpp"
#include "cmcc/types.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <variant>
#include <vector>

namespace cmcc {

/// x(n) ~ N(0, L L^T), i.i.d. over n.
struct GaussianInput {
    Matrix L; // lower Cholesky factor of R
};

/// Real narrowband snapshot of a half-wavelength uniform linear array:
/// x_m = sum_k amp_k cos((m - (M-1)/2) psi_k + phi_k) + noise_sd z_m,
/// psi_k = pi sin(theta_k), phi_k uniform on [0, 2 pi) per snapshot.
struct ArrayInput {
    int M = 0;
    std::vector<double> amp;
    std::vector<double> psi;
    double noise_sd = 1.0;
};

using InputModel = std::variant<GaussianInput, ArrayInput>;

/// Writes one input vector into `x` (which must already have length M).
void draw_input(const InputModel& model, RandomStream& rng, Vector& x);

/// Everything a Monte-Carlo run needs besides the algorithms:
/// d(n) = W_true^T x(n) + v(n), deviation measured against W_ref.
struct Problem {
    std::shared_ptr<const ConstraintSet> cs;
    InputModel input;
    Matrix R;     // E[x x^T], for output-power reporting
    Vector W_true;
    Vector W_ref;
    NoiseModel noise;
};

struct RunSpec {
    std::vector<AlgorithmConfig> algorithms;
    long runs = 1;
    long iterations = 1;
    long steady_window = 1;
    std::uint64_t seed = 0; // run r uses derive_seed(seed, stream::run, r)
    DivergenceConfig divergence;
    int workers = 0;        // 0: OpenMP default
    // Optional per-run early-convergence probe: mean squared deviation over
    // [probe_end - probe_window, probe_end), reported per run in dB.
    long probe_end = 0;
    long probe_window = 0;
};

/// Aggregate for one algorithm over all runs.
struct AlgoStats {
    std::string label;
    Algorithm algo = Algorithm::CMCC;
    HyperParams hp;
    std::vector<double> msd;   // per-iteration mean ||W(n) - W_ref||^2 over retained runs
    double steady_msd = 0.0;   // mean of the last steady_window entries of msd (linear)
    double steady_msd_db = 0.0;
    double steady_std_db = 0.0; // spread of per-run steady MSD (dB) over retained runs
    double output_power = 0.0;  // mean (W - W_ref)^T R (W - W_ref) over the steady window
    double probe_db = 0.0;      // mean over all runs of the per-run probe value in dB
    long diverged_runs = 0;
    long retained_runs = 0;
    Vector mean_final_weights;  // over retained runs
    Vector sample_final_weights; // final weights of the first retained run (or run 0)
};

struct MonteCarloResult {
    std::vector<AlgoStats> algos;
};

/// Runs are processed in fixed blocks whose members execute in parallel;
/// partial sums are reduced in run-index order, so the result does not depend
/// on the number of workers.
MonteCarloResult run_monte_carlo(const Problem& problem, const RunSpec& spec);

/// Single-threaded reference with the same arithmetic, kept for testing.
MonteCarloResult run_monte_carlo_serial(const Problem& problem, const RunSpec& spec);

} // namespace cmcc
