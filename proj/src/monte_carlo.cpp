#include "cmcc/monte_carlo.hpp"

#include "cmcc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numbers>

#include <omp.h>

namespace cmcc {

void draw_input(const InputModel& model, RandomStream& rng, Vector& x)
{
    if (const auto* g = std::get_if<GaussianInput>(&model)) {
        const auto M = g->L.rows();
        Vector z(M);
        for (Eigen::Index i = 0; i < M; ++i)
            z(i) = rng.normal();
        x.noalias() = g->L.triangularView<Eigen::Lower>() * z;
        return;
    }
    const auto& a = std::get<ArrayInput>(model);
    const double center = 0.5 * (a.M - 1);
    for (int m = 0; m < a.M; ++m)
        x(m) = 0.0;
    for (std::size_t k = 0; k < a.amp.size(); ++k) {
        const double phase = 2.0 * std::numbers::pi * rng.uniform();
        for (int m = 0; m < a.M; ++m)
            x(m) += a.amp[k] * std::cos((m - center) * a.psi[k] + phase);
    }
    for (int m = 0; m < a.M; ++m)
        x(m) += a.noise_sd * rng.normal();
}

namespace {

constexpr long kBlock = 64;

struct RunOutput {
    std::vector<std::vector<double>> trace; // [algo][n]
    std::vector<double> steady;             // linear, last steady_window mean
    std::vector<double> power;
    std::vector<double> probe_db;
    std::vector<char> diverged;
    std::vector<Vector> final_w;
};

void simulate(const Problem& pb, const RunSpec& spec, long r, RunOutput& out)
{
    const auto nalg = spec.algorithms.size();
    const auto M = pb.cs->M();
    RandomStream rng(derive_seed(spec.seed, stream::run, static_cast<std::uint64_t>(r)));

    std::vector<FilterState> states;
    states.reserve(nalg);
    for (const auto& a : spec.algorithms)
        states.push_back(init_filter(pb.cs, a.algo, a.hp));

    out.trace.assign(nalg, std::vector<double>(static_cast<std::size_t>(spec.iterations)));
    out.steady.assign(nalg, 0.0);
    out.power.assign(nalg, 0.0);
    out.probe_db.assign(nalg, 0.0);
    out.diverged.assign(nalg, 0);
    out.final_w.assign(nalg, Vector());

    std::vector<double> initial(nalg);
    for (std::size_t a = 0; a < nalg; ++a)
        initial[a] = (states[a].weights() - pb.W_ref).squaredNorm();

    Vector x(M), dev(M);
    const long tail_start = spec.iterations - spec.steady_window;
    for (long n = 0; n < spec.iterations; ++n) {
        draw_input(pb.input, rng, x);
        const double d = pb.W_true.dot(x) + sample(pb.noise, rng);
        for (std::size_t a = 0; a < nalg; ++a) {
            step(states[a], x, d);
            dev.noalias() = states[a].weights() - pb.W_ref;
            const double msd = dev.squaredNorm();
            out.trace[a][static_cast<std::size_t>(n)] = msd;
            if (n >= tail_start) {
                out.steady[a] += msd;
                out.power[a] += dev.dot(pb.R * dev);
            }
        }
    }

    for (std::size_t a = 0; a < nalg; ++a) {
        out.steady[a] /= static_cast<double>(spec.steady_window);
        out.power[a] /= static_cast<double>(spec.steady_window);
        const double limit = spec.divergence.ratio * std::max(initial[a], spec.divergence.floor);
        out.diverged[a] = states[a].diverged() || (spec.divergence.magnitude_check && !(out.steady[a] <= limit));
        out.final_w[a] = states[a].weights();
        if (spec.probe_window > 0) {
            double s = 0.0;
            for (long n = spec.probe_end - spec.probe_window; n < spec.probe_end; ++n)
                s += out.trace[a][static_cast<std::size_t>(n)];
            out.probe_db[a] = 10.0 * std::log10(s / static_cast<double>(spec.probe_window));
        }
    }
}

class Accumulator {
public:
    Accumulator(const Problem& pb, const RunSpec& spec) : spec_(spec)
    {
        const auto nalg = spec.algorithms.size();
        const auto len = static_cast<std::size_t>(spec.iterations);
        kept_.assign(nalg, std::vector<double>(len, 0.0));
        all_.assign(nalg, std::vector<double>(len, 0.0));
        power_.assign(nalg, 0.0);
        power_all_.assign(nalg, 0.0);
        db_sum_.assign(nalg, 0.0);
        db_sq_.assign(nalg, 0.0);
        probe_.assign(nalg, 0.0);
        diverged_.assign(nalg, 0);
        kept_count_.assign(nalg, 0);
        w_sum_.assign(nalg, Vector::Zero(pb.cs->M()));
        sample_w_.assign(nalg, Vector());
        first_w_.assign(nalg, Vector());
    }

    void add(const RunOutput& o)
    {
        for (std::size_t a = 0; a < kept_.size(); ++a) {
            auto& all = all_[a];
            const auto& tr = o.trace[a];
            for (std::size_t n = 0; n < tr.size(); ++n)
                all[n] += tr[n];
            power_all_[a] += o.power[a];
            probe_[a] += o.probe_db[a];
            if (first_w_[a].size() == 0)
                first_w_[a] = o.final_w[a];
            if (o.diverged[a]) {
                ++diverged_[a];
                continue;
            }
            auto& kept = kept_[a];
            for (std::size_t n = 0; n < tr.size(); ++n)
                kept[n] += tr[n];
            power_[a] += o.power[a];
            const double db = 10.0 * std::log10(o.steady[a]);
            db_sum_[a] += db;
            db_sq_[a] += db * db;
            w_sum_[a] += o.final_w[a];
            if (sample_w_[a].size() == 0)
                sample_w_[a] = o.final_w[a];
            ++kept_count_[a];
        }
    }

    MonteCarloResult finish() const
    {
        MonteCarloResult res;
        const double inf = std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < kept_.size(); ++a) {
            AlgoStats s;
            s.label = spec_.algorithms[a].label;
            s.algo = spec_.algorithms[a].algo;
            s.hp = spec_.algorithms[a].hp;
            s.diverged_runs = diverged_[a];
            s.retained_runs = kept_count_[a];
            s.probe_db = probe_[a] / static_cast<double>(spec_.runs);
            const bool any = kept_count_[a] > 0;
            const double count = static_cast<double>(any ? kept_count_[a] : spec_.runs);
            const auto& src = any ? kept_[a] : all_[a];
            s.msd.resize(src.size());
            for (std::size_t n = 0; n < src.size(); ++n)
                s.msd[n] = src[n] / count;
            if (any) {
                double tail = 0.0;
                for (std::size_t n = src.size() - static_cast<std::size_t>(spec_.steady_window); n < src.size(); ++n)
                    tail += s.msd[n];
                s.steady_msd = tail / static_cast<double>(spec_.steady_window);
                s.steady_msd_db = 10.0 * std::log10(s.steady_msd);
                const double mean_db = db_sum_[a] / count;
                s.steady_std_db = std::sqrt(std::max(0.0, db_sq_[a] / count - mean_db * mean_db));
                s.output_power = power_[a] / count;
                s.mean_final_weights = w_sum_[a] / count;
                s.sample_final_weights = sample_w_[a];
            } else {
                s.steady_msd = inf;
                s.steady_msd_db = inf;
                s.steady_std_db = 0.0;
                s.output_power = power_all_[a] / count;
                s.mean_final_weights = first_w_[a];
                s.sample_final_weights = first_w_[a];
            }
            res.algos.push_back(std::move(s));
        }
        return res;
    }

private:
    const RunSpec& spec_;
    std::vector<std::vector<double>> kept_, all_;
    std::vector<double> power_, power_all_, db_sum_, db_sq_, probe_;
    std::vector<long> diverged_, kept_count_;
    std::vector<Vector> w_sum_, sample_w_, first_w_;
};

void check_spec(const Problem& pb, const RunSpec& spec)
{
    if (!pb.cs)
        throw ConfigError("problem has no constraint set");
    const auto M = pb.cs->M();
    if (pb.W_true.size() != M || pb.W_ref.size() != M || pb.R.rows() != M || pb.R.cols() != M)
        throw DimensionError("problem vectors do not match the constraint dimension");
    if (spec.algorithms.empty())
        throw ConfigError("no algorithms to run");
    if (spec.runs < 1 || spec.steady_window < 1 || spec.iterations <= spec.steady_window)
        throw ConfigError("need runs >= 1 and iterations > steady_window >= 1");
    if (spec.probe_window > 0 && (spec.probe_end < spec.probe_window || spec.probe_end > spec.iterations))
        throw ConfigError("probe window outside the run");
    for (const auto& a : spec.algorithms)
        validate(a.algo, a.hp);
}

} // namespace

MonteCarloResult run_monte_carlo(const Problem& problem, const RunSpec& spec)
{
    check_spec(problem, spec);
    Accumulator acc(problem, spec);
    const int threads = spec.workers > 0 ? spec.workers : omp_get_max_threads();
    std::vector<RunOutput> block(static_cast<std::size_t>(std::min(kBlock, spec.runs)));

    for (long start = 0; start < spec.runs; start += kBlock) {
        const long count = std::min(kBlock, spec.runs - start);
        std::exception_ptr error;
#pragma omp parallel for num_threads(threads) schedule(dynamic, 1)
        for (long i = 0; i < count; ++i) {
            try {
                simulate(problem, spec, start + i, block[static_cast<std::size_t>(i)]);
            } catch (...) {
#pragma omp critical(cmcc_mc_error)
                if (!error)
                    error = std::current_exception();
            }
        }
        if (error)
            std::rethrow_exception(error);
        for (long i = 0; i < count; ++i)
            acc.add(block[static_cast<std::size_t>(i)]);
    }
    return acc.finish();
}

MonteCarloResult run_monte_carlo_serial(const Problem& problem, const RunSpec& spec)
{
    check_spec(problem, spec);
    Accumulator acc(problem, spec);
    RunOutput out;
    for (long r = 0; r < spec.runs; ++r) {
        simulate(problem, spec, r, out);
        acc.add(out);
    }
    return acc.finish();
}

} // namespace cmcc
