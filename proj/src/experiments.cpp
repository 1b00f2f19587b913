#include "cmcc/experiments.hpp"

#include "cmcc/errors.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>

namespace cmcc {

const AlgoStats* ExperimentResult::find(std::string_view label) const
{
    for (const auto& a : algos)
        if (a.label == label)
            return &a;
    return nullptr;
}

Matrix make_input_covariance(int M, CovarianceSource source, std::uint64_t seed, double lo, double hi,
                             const Matrix& explicit_R)
{
    if (M < 2)
        throw ConfigError("covariance dimension must be >= 2");
    switch (source) {
    case CovarianceSource::Identity:
        return Matrix::Identity(M, M);
    case CovarianceSource::Explicit:
        if (explicit_R.rows() != M)
            throw ConfigError("explicit covariance must be " + std::to_string(M) + " x " + std::to_string(M));
        validate_covariance(explicit_R);
        return explicit_R;
    case CovarianceSource::RandomSpd:
        break;
    }
    if (!(lo > 0.0 && hi >= lo))
        throw ConfigError("eigenvalue range must satisfy 0 < lo <= hi");
    RandomStream rng(seed);
    Matrix G(M, M);
    for (int j = 0; j < M; ++j)
        for (int i = 0; i < M; ++i)
            G(i, j) = rng.normal();
    Eigen::HouseholderQR<Matrix> qr(G);
    Matrix V = qr.householderQ() * Matrix::Identity(M, M);
    const Matrix Rq = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < M; ++j)
        if (Rq(j, j) < 0.0)
            V.col(j) = -V.col(j);
    Vector lambda(M);
    for (int i = 0; i < M; ++i)
        lambda(i) = lo + (hi - lo) * rng.uniform();
    lambda *= static_cast<double>(M) / lambda.sum();
    Matrix R = V * lambda.asDiagonal() * V.transpose();
    return 0.5 * (R + R.transpose());
}

Matrix random_constraint_matrix(int M, int K, std::uint64_t seed)
{
    RandomStream rng(seed);
    Matrix C(M, K);
    for (int j = 0; j < K; ++j)
        for (int i = 0; i < M; ++i)
            C(i, j) = rng.normal();
    return C;
}

Geometry build_geometry(const ScenarioConfig& cfg)
{
    validate(cfg);
    Geometry g;
    const auto M = cfg.M;

    if (cfg.scenario == ScenarioKind::Beamforming) {
        const auto arr = make_array_input(M, cfg.beam);
        g.R = array_covariance(arr);
        g.input = arr;
        g.W_true = cfg.W_true ? *cfg.W_true : Vector::Zero(M);
    } else {
        g.R = make_input_covariance(M, cfg.covariance_source, derive_seed(cfg.master_seed, stream::covariance, 0),
                                    cfg.eig_lo, cfg.eig_hi, cfg.R);
        Eigen::LLT<Matrix> llt(g.R);
        if (llt.info() != Eigen::Success)
            throw ConfigError("input covariance is not positive definite");
        g.input = GaussianInput{llt.matrixL()};
        g.W_true = cfg.W_true ? *cfg.W_true : default_system();
    }

    Matrix C;
    switch (cfg.constraint_source) {
    case ConstraintSource::Explicit: C = cfg.C; break;
    case ConstraintSource::RandomSeeded:
        C = random_constraint_matrix(M, cfg.K, derive_seed(cfg.master_seed, stream::constraints, 0));
        break;
    case ConstraintSource::LinearPhase: C = linear_phase_constraint_matrix(M); break;
    }
    const Vector offset = cfg.f_offset.size() ? cfg.f_offset : Vector::Zero(C.cols());
    Vector f;
    if (cfg.f)
        f = *cfg.f;
    else if (cfg.scenario == ScenarioKind::Beamforming)
        f = offset;
    else
        f = C.transpose() * g.W_true + offset;
    g.cs = std::make_shared<const ConstraintSet>(build_constraints(C, f));

    if (g.cs->f().isZero(0.0) && g.W_true.isZero(0.0)) {
        // The LCMV optimum with f = 0 is the zero vector, whatever R is.
        g.W_ref = Vector::Zero(M);
    } else {
        g.W_ref = optimal_weights(g.R, *g.cs, g.W_true).W_opt;
    }
    const auto bound = stability_bound(g.R, *g.cs);
    g.eta_max = bound.eta_max;
    return g;
}

namespace {

Problem make_problem(const ScenarioConfig& cfg, const Geometry& g)
{
    return Problem{g.cs, g.input, g.R, g.W_true, g.W_ref, cfg.noise};
}

RunSpec make_spec(const ScenarioConfig& cfg, std::uint64_t seed)
{
    RunSpec s;
    s.algorithms = cfg.algorithms;
    s.runs = cfg.runs;
    s.iterations = cfg.iterations;
    s.steady_window = cfg.steady_window;
    s.seed = seed;
    s.divergence = cfg.divergence;
    s.workers = cfg.workers;
    return s;
}

double probe(const ScenarioConfig& cfg, const Problem& pb, const AlgorithmConfig& algo)
{
    const auto& c = cfg.calibration;
    RunSpec s;
    s.algorithms = {algo};
    s.runs = c.pilot_runs;
    s.iterations = c.checkpoint;
    s.steady_window = std::min(c.window, c.checkpoint - 1);
    s.seed = derive_seed(cfg.master_seed, stream::calibration, 0);
    s.divergence = cfg.divergence;
    s.workers = cfg.workers;
    s.probe_end = c.checkpoint;
    s.probe_window = c.window;
    double v = 0.0;
    if (c.noiseless) {
        auto quiet = pb;
        quiet.noise = make_noise(noise::Zero{});
        v = run_monte_carlo(quiet, s).algos.front().probe_db;
    } else {
        v = run_monte_carlo(pb, s).algos.front().probe_db;
    }
    return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
}

const AlgorithmConfig* first_cmcc(const ScenarioConfig& cfg)
{
    for (const auto& a : cfg.algorithms)
        if (a.algo == Algorithm::CMCC)
            return &a;
    return nullptr;
}

ExperimentResult make_result(const ScenarioConfig& cfg, const Geometry& g, std::uint64_t seed)
{
    ExperimentResult r;
    r.name = cfg.name;
    r.scenario = cfg.scenario;
    r.noise = describe(cfg.noise);
    r.eta_max = g.eta_max;
    r.seed = seed;
    r.config_hash = config_hash(cfg);
    r.runs = cfg.runs;
    r.iterations = cfg.iterations;
    r.steady_window = cfg.steady_window;
    return r;
}

ExperimentResult simulate(const ScenarioConfig& cfg, const Geometry& g, std::uint64_t seed)
{
    auto res = make_result(cfg, g, seed);
    const auto pb = make_problem(cfg, g);
    auto spec = make_spec(cfg, seed);
    res.calibration = calibrate_step_sizes(cfg, pb, spec.algorithms);
    res.algos = run_monte_carlo(pb, spec).algos;

    if (cfg.scenario == ScenarioKind::Beamforming) {
        const auto grid = angle_grid(cfg.beam.grid_step_deg);
        for (const auto& a : res.algos) {
            auto bp = beampattern(a.sample_final_weights, grid, cfg.beam.look_deg);
            bp.label = a.label;
            res.patterns.push_back(std::move(bp));
        }
    }
    if (cfg.scenario == ScenarioKind::TheoryValidation) {
        try {
            res.theory = steady_state_msd(theory_inputs(cfg, g));
        } catch (const Error& e) {
            res.theory_note = std::string(e.code()) + ": " + e.what();
        }
    }
    return res;
}

} // namespace

TheoryInputs theory_inputs(const ScenarioConfig& cfg, const Geometry& g)
{
    const auto* a = first_cmcc(cfg);
    if (!a)
        throw ConfigError("no CMCC entry to predict");
    return TheoryInputs{g.R, *g.cs, g.W_true, a->hp.eta, a->hp.sigma, cfg.noise};
}

std::vector<CalibrationRecord> calibrate_step_sizes(const ScenarioConfig& cfg, const Problem& problem,
                                                    std::vector<AlgorithmConfig>& algos)
{
    std::vector<CalibrationRecord> out;
    if (std::none_of(algos.begin(), algos.end(), [](const auto& a) { return a.calibrate_eta; }))
        return out;
    const auto& c = cfg.calibration;
    const auto ref = std::find_if(algos.begin(), algos.end(),
                                  [&](const auto& a) { return a.algo == c.reference && !a.calibrate_eta; });
    if (ref == algos.end())
        throw ConfigError("calibration reference algorithm is not configured with a fixed step size");
    const double target = probe(cfg, problem, *ref);

    constexpr int kGrid = 25;
    constexpr int kBisect = 30;
    const double llo = std::log(c.eta_lo);
    const double lhi = std::log(c.eta_hi);
    for (auto& a : algos) {
        if (!a.calibrate_eta)
            continue;
        auto trial = a;
        auto at = [&](double log_eta) {
            trial.hp.eta = std::exp(log_eta);
            return probe(cfg, problem, trial);
        };
        // Walk the log grid up from eta_lo to the first crossing of the
        // target, then bisect inside that cell. The probe falls with eta
        // during a transient and rises once noise dominates, so the first
        // crossing is the one that matches the reference's behaviour.
        double prev = llo;
        const double v0 = at(llo);
        const bool above = v0 > target;
        double chosen = llo;
        double closest = std::abs(v0 - target);
        bool crossed = false;
        for (int i = 1; i < kGrid && !crossed; ++i) {
            const double le = llo + (lhi - llo) * i / (kGrid - 1);
            const double v = at(le);
            if (std::abs(v - target) < closest) {
                closest = std::abs(v - target);
                chosen = le;
            }
            if ((v > target) != above) {
                double lo = prev, hi = le;
                for (int k = 0; k < kBisect; ++k) {
                    const double mid = 0.5 * (lo + hi);
                    ((at(mid) > target) == above ? lo : hi) = mid;
                }
                chosen = hi;
                crossed = true;
            }
            prev = le;
        }
        a.hp.eta = std::exp(chosen);
        a.calibrate_eta = false;
        const double achieved = at(chosen);
        out.push_back({a.label, a.hp.eta, target, achieved, std::abs(achieved - target) <= 0.5});
    }
    return out;
}

ExperimentResult run_sysid(const ScenarioConfig& cfg)
{
    if (cfg.scenario != ScenarioKind::SysId)
        throw ConfigError("run_sysid needs a sysid scenario");
    const auto g = build_geometry(cfg);
    return simulate(cfg, g, cfg.master_seed);
}

ExperimentResult run_beamforming(const ScenarioConfig& cfg)
{
    if (cfg.scenario != ScenarioKind::Beamforming)
        throw ConfigError("run_beamforming needs a beamforming scenario");
    const auto g = build_geometry(cfg);
    return simulate(cfg, g, cfg.master_seed);
}

std::vector<ExperimentResult> run_theory_validation(const ScenarioConfig& cfg)
{
    if (cfg.scenario != ScenarioKind::TheoryValidation)
        throw ConfigError("run_theory_validation needs a theory-validation scenario");
    if (!cfg.sweep.empty())
        return run_parameter_sweep(cfg);
    const auto g = build_geometry(cfg);
    return {simulate(cfg, g, cfg.master_seed)};
}

void apply_sweep_value(ScenarioConfig& cfg, SweepKind kind, double value, std::optional<double> paired_eta)
{
    auto for_cmcc = [&](auto&& fn) {
        bool any = false;
        for (auto& a : cfg.algorithms)
            if (a.algo == Algorithm::CMCC) {
                fn(a.hp);
                any = true;
            }
        if (!any)
            throw ConfigError(std::string(to_string(kind)) + " sweep needs a CMCC entry");
    };
    switch (kind) {
    case SweepKind::Eta:
        for_cmcc([&](HyperParams& hp) { hp.eta = value; });
        break;
    case SweepKind::Sigma:
        for_cmcc([&](HyperParams& hp) {
            hp.sigma = value;
            if (paired_eta)
                hp.eta = *paired_eta;
        });
        break;
    case SweepKind::Alpha:
    case SweepKind::Gamma: {
        auto* a = std::get_if<noise::AlphaStable>(&cfg.noise.dist);
        if (!a)
            throw ConfigError(std::string(to_string(kind)) + " sweep needs alpha-stable noise");
        (kind == SweepKind::Alpha ? a->alpha : a->gamma) = value;
        validate(cfg.noise);
        break;
    }
    case SweepKind::NoiseVariance:
        cfg.noise = with_variance(cfg.noise, value);
        break;
    }
    for (const auto& a : cfg.algorithms)
        validate(a.algo, a.hp);
}

std::vector<ExperimentResult> run_parameter_sweep(const ScenarioConfig& cfg)
{
    if (cfg.sweep.empty())
        throw ConfigError("no sweep axis configured");
    const auto g = build_geometry(cfg);

    std::size_t total = 1;
    for (const auto& ax : cfg.sweep)
        total *= ax.values.size();

    std::vector<ExperimentResult> out;
    out.reserve(total);
    std::vector<std::size_t> idx(cfg.sweep.size(), 0);
    for (std::size_t p = 0; p < total; ++p) {
        auto point_cfg = cfg;
        std::vector<std::pair<SweepKind, double>> coords;
        for (std::size_t k = 0; k < cfg.sweep.size(); ++k) {
            const auto& ax = cfg.sweep[k];
            const double v = ax.values[idx[k]];
            std::optional<double> eta;
            if (!ax.paired_eta.empty())
                eta = ax.paired_eta[idx[k]];
            apply_sweep_value(point_cfg, ax.kind, v, eta);
            coords.emplace_back(ax.kind, v);
        }
        auto res = simulate(point_cfg, g, derive_seed(cfg.master_seed, stream::sweep_point, p));
        res.point = std::move(coords);
        out.push_back(std::move(res));

        for (std::size_t k = cfg.sweep.size(); k-- > 0;) {
            if (++idx[k] < cfg.sweep[k].values.size())
                break;
            idx[k] = 0;
        }
    }
    return out;
}

std::vector<ExperimentResult> run_experiment(const ScenarioConfig& cfg)
{
    if (!cfg.sweep.empty())
        return run_parameter_sweep(cfg);
    switch (cfg.scenario) {
    case ScenarioKind::SysId: return {run_sysid(cfg)};
    case ScenarioKind::Beamforming: return {run_beamforming(cfg)};
    case ScenarioKind::TheoryValidation: return run_theory_validation(cfg);
    }
    return {};
}

} // namespace cmcc
