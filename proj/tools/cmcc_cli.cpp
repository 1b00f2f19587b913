// cmcc: run constrained adaptive filtering experiments and theory predictions.
#include "cmcc/config.hpp"
#include "cmcc/errors.hpp"
#include "cmcc/experiments.hpp"
#include "cmcc/report.hpp"
#include "cmcc/theory.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <iostream>
#include <string>

namespace fs = std::filesystem;
using namespace cmcc;

namespace {

enum Exit { kOk = 0, kFailure = 1, kConfig = 2, kTheory = 3 };

struct Options {
    std::string config;
    std::string out = "out";
    bool plot = false;
    std::string profile = "paper";
    int workers = -1;
    std::string csv;
    std::string svg;
    std::string title;
};

void report_error(const std::string& code, const std::string& message)
{
    std::string m = message;
    for (auto& c : m)
        if (c == '"' || c == '\n')
            c = '\'';
    std::cerr << "error code=" << code << " message=\"" << m << "\"\n";
}

ScenarioConfig load(const Options& o)
{
    auto cfg = load_config(o.config);
    apply_profile(cfg, o.profile == "fast" ? Profile::Fast : Profile::Paper);
    apply_seed_override(cfg);
    if (o.workers >= 0)
        cfg.workers = o.workers;
    return cfg;
}

void emit(const fs::path& dir, const std::string& stem, const CsvTable& table, bool plot, const std::string& title)
{
    write_text(dir / (stem + ".csv"), to_csv(table));
    if (plot && !table.rows.empty())
        write_text(dir / (stem + ".svg"), render_svg(table, title));
}

void write_metadata(const fs::path& dir, const ScenarioConfig& cfg, const std::vector<ExperimentResult>& results)
{
    nlohmann::ordered_json j;
    j["name"] = cfg.name;
    j["scenario"] = std::string(to_string(cfg.scenario));
    j["master_seed"] = cfg.master_seed;
    j["config_hash"] = config_hash(cfg);
    j["runs"] = cfg.runs;
    j["iterations"] = cfg.iterations;
    j["steady_window"] = cfg.steady_window;
    j["noise"] = describe(cfg.noise);
    j["msd_db"] = "10 log10 of the run-averaged squared deviation";
    if (!results.empty())
        j["eta_max"] = results.front().eta_max;
    if (cfg.scenario == ScenarioKind::Beamforming) {
        j["snr_inr_reference"] = "per-sensor source power relative to the sensor noise variance";
        j["reference_weights"] = "LCMV optimum";
    }
    write_text(dir / (cfg.name + "_meta.json"), j.dump(2) + "\n");
}

void print_summary(const std::vector<ExperimentResult>& results)
{
    for (const auto& r : results) {
        std::string where;
        for (const auto& [k, v] : r.point)
            where += std::string(to_string(k)) + "=" + format_number(v) + " ";
        for (const auto& a : r.algos)
            std::cout << where << a.label << " steady_msd_db=" << format_number(a.steady_msd_db)
                      << " diverged_runs=" << a.diverged_runs << "\n";
        if (r.theory)
            std::cout << where << "theory S_db=" << format_number(10.0 * std::log10(r.theory->S)) << "\n";
        else if (!r.theory_note.empty())
            std::cout << where << "theory unavailable (" << r.theory_note << ")\n";
    }
}

int cmd_run(const Options& o, bool require_sweep)
{
    const auto cfg = load(o);
    if (require_sweep && cfg.sweep.empty())
        throw ConfigError("config '" + o.config + "' has no sweep section");
    const auto results = run_experiment(cfg);
    const fs::path dir = o.out;
    const auto& name = cfg.name;
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto stem = results.size() == 1 ? name + "_msd" : name + "_msd_p" + std::to_string(i);
        emit(dir, stem, msd_table(results[i]), o.plot, name + " MSD");
    }
    emit(dir, name + "_summary", summary_table(results), o.plot, name + " steady state");
    const auto cal = calibration_table(results);
    if (!cal.rows.empty())
        write_text(dir / (name + "_calibration.csv"), to_csv(cal));
    if (cfg.scenario == ScenarioKind::Beamforming && results.size() == 1)
        emit(dir, name + "_beampattern", beampattern_table(results.front().patterns), o.plot, name + " beampattern");
    write_metadata(dir, cfg, results);
    print_summary(results);
    return kOk;
}

int cmd_beampattern(const Options& o)
{
    const auto cfg = load(o);
    if (cfg.scenario != ScenarioKind::Beamforming)
        throw ConfigError("beampattern needs a beamforming scenario");
    auto single = cfg;
    single.sweep.clear();
    const auto res = run_beamforming(single);
    const fs::path dir = o.out;
    emit(dir, cfg.name + "_beampattern", beampattern_table(res.patterns), o.plot, cfg.name + " beampattern");
    emit(dir, cfg.name + "_msd", msd_table(res), o.plot, cfg.name + " MSD");
    write_metadata(dir, cfg, {res});
    print_summary({res});
    return kOk;
}

int cmd_predict(const Options& o)
{
    const auto cfg = load(o);
    const auto g = build_geometry(cfg);
    std::vector<ScenarioConfig> points;
    if (cfg.sweep.size() > 1)
        throw ConfigError("predict supports at most one sweep axis");
    if (cfg.sweep.empty()) {
        points.push_back(cfg);
    } else {
        const auto& ax = cfg.sweep.front();
        for (std::size_t i = 0; i < ax.values.size(); ++i) {
            auto p = cfg;
            std::optional<double> eta;
            if (!ax.paired_eta.empty())
                eta = ax.paired_eta[i];
            apply_sweep_value(p, ax.kind, ax.values[i], eta);
            points.push_back(std::move(p));
        }
    }
    std::vector<PredictionRow> rows;
    for (const auto& p : points) {
        const auto in = theory_inputs(p, g);
        rows.push_back({in.eta, in.sigma, describe(p.noise), steady_state_msd(in)});
    }
    const auto table = prediction_table(rows);
    emit(fs::path(o.out), cfg.name + "_prediction", table, o.plot && rows.size() > 1, cfg.name + " prediction");
    for (const auto& r : rows)
        std::cout << "eta=" << format_number(r.eta) << " sigma=" << format_number(r.sigma)
                  << " S_db=" << format_number(10.0 * std::log10(r.prediction.S))
                  << " Eg=" << format_number(r.prediction.Eg) << " Eg2=" << format_number(r.prediction.Eg2)
                  << " eta_max=" << format_number(r.prediction.eta_max) << "\n";
    return kOk;
}

int cmd_validate(const Options& o)
{
    const auto cfg = load(o);
    const auto g = build_geometry(cfg);
    for (const auto& a : cfg.algorithms) {
        if (a.algo != Algorithm::CMCC)
            continue;
        if (!(a.hp.eta < g.eta_max)) {
            throw InstabilityError("eta=" + format_number(a.hp.eta) +
                                       " for '" + a.label + "' is not below the mean-square stability bound "
                                       "eta_max = 2 / (2 lambda_max(PRP) + tr(PRP)) = " + format_number(g.eta_max),
                                   g.eta_max);
        }
    }
    std::cout << "ok name=" << cfg.name << " scenario=" << to_string(cfg.scenario) << " M=" << cfg.M
              << " K=" << cfg.K << " eta_max=" << format_number(g.eta_max)
              << " constraint_residual=" << format_number(g.cs->residual(g.cs->Q())) << "\n";
    return kOk;
}

int cmd_plot(const Options& o)
{
    const auto table = parse_csv(read_text(o.csv));
    const auto title = o.title.empty() ? fs::path(o.csv).stem().string() : o.title;
    write_text(o.svg, render_svg(table, title));
    return kOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Constrained maximum correntropy adaptive filtering experiments"};
    app.require_subcommand(1);
    Options o;

    auto add_common = [&](CLI::App* sub, bool with_out) {
        sub->add_option("-c,--config", o.config, "scenario JSON")->required()->check(CLI::ExistingFile);
        sub->add_option("--profile", o.profile, "paper or fast")->check(CLI::IsMember({"paper", "fast"}));
        sub->add_option("--workers", o.workers, "worker threads (0: all)")->check(CLI::NonNegativeNumber);
        if (with_out) {
            sub->add_option("-o,--out", o.out, "output directory");
            sub->add_flag("--plot", o.plot, "also write SVG figures");
        }
    };

    auto* run = app.add_subcommand("run", "run the configured experiment");
    add_common(run, true);
    auto* sweep = app.add_subcommand("sweep", "run a parameter sweep");
    add_common(sweep, true);
    auto* predict = app.add_subcommand("predict", "steady-state MSD prediction for the CMCC entry");
    add_common(predict, true);
    auto* beam = app.add_subcommand("beampattern", "beamforming run plus final beampatterns");
    add_common(beam, true);
    auto* val = app.add_subcommand("validate", "check a config and the CMCC step size against the stability bound");
    add_common(val, false);
    auto* plot = app.add_subcommand("plot", "render an SVG from a CSV written by this tool");
    plot->add_option("--csv", o.csv, "input CSV")->required()->check(CLI::ExistingFile);
    plot->add_option("--svg", o.svg, "output SVG")->required();
    plot->add_option("--title", o.title, "figure title");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    try {
        if (*run) return cmd_run(o, false);
        if (*sweep) return cmd_run(o, true);
        if (*predict) return cmd_predict(o);
        if (*beam) return cmd_beampattern(o);
        if (*val) return cmd_validate(o);
        if (*plot) return cmd_plot(o);
    } catch (const InfiniteMomentError& e) {
        report_error(e.code(), e.what());
        return kTheory;
    } catch (const InstabilityError& e) {
        report_error(e.code(), e.what());
        return kTheory;
    } catch (const ConfigError& e) {
        report_error(e.code(), e.what());
        return kConfig;
    } catch (const Error& e) {
        report_error(e.code(), e.what());
        return kFailure;
    } catch (const std::exception& e) {
        report_error("internal", e.what());
        return kFailure;
    }
    return kFailure;
}
