#include "cmcc/config.hpp"

#include "cmcc/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace cmcc {

using nlohmann::json;

std::string_view to_string(ScenarioKind k) noexcept
{
    switch (k) {
    case ScenarioKind::SysId: return "sysid";
    case ScenarioKind::Beamforming: return "beamforming";
    case ScenarioKind::TheoryValidation: return "theory-validation";
    }
    return "?";
}

std::string_view to_string(SweepKind k) noexcept
{
    switch (k) {
    case SweepKind::Eta: return "eta";
    case SweepKind::Sigma: return "sigma";
    case SweepKind::Alpha: return "alpha";
    case SweepKind::Gamma: return "gamma";
    case SweepKind::NoiseVariance: return "noise_variance";
    }
    return "?";
}

Vector default_system()
{
    Vector w(7);
    w << 0.332, -0.040, -0.094, 0.717, -0.652, -0.072, 0.580;
    return w;
}

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& msg)
{
    throw ConfigError(where + ": " + msg);
}

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed)
{
    if (!obj.is_object())
        fail(where, "expected an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, _] : obj.items())
        if (!ok.contains(key))
            fail(where, "unknown key '" + key + "'");
}

double number(const json& obj, const char* key, const std::string& where)
{
    if (!obj.contains(key))
        fail(where, std::string("missing '") + key + "'");
    const auto& v = obj.at(key);
    if (!v.is_number())
        fail(where, std::string("'") + key + "' must be a number");
    return v.get<double>();
}

double number_or(const json& obj, const char* key, double fallback, const std::string& where)
{
    return obj.contains(key) ? number(obj, key, where) : fallback;
}

long integer_or(const json& obj, const char* key, long fallback, const std::string& where)
{
    if (!obj.contains(key))
        return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number_integer())
        fail(where, std::string("'") + key + "' must be an integer");
    return v.get<long>();
}

Vector vector_from(const json& arr, const std::string& where)
{
    if (!arr.is_array())
        fail(where, "expected an array of numbers");
    Vector v(static_cast<Eigen::Index>(arr.size()));
    for (std::size_t i = 0; i < arr.size(); ++i) {
        if (!arr[i].is_number())
            fail(where, "entry " + std::to_string(i) + " is not a number");
        v(static_cast<Eigen::Index>(i)) = arr[i].get<double>();
    }
    return v;
}

// Row-major nested arrays.
Matrix matrix_from(const json& rows, const std::string& where)
{
    if (!rows.is_array() || rows.empty())
        fail(where, "expected a non-empty array of rows");
    const std::size_t ncols = rows[0].is_array() ? rows[0].size() : 0;
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(ncols));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto row = vector_from(rows[i], where + "[" + std::to_string(i) + "]");
        if (static_cast<std::size_t>(row.size()) != ncols)
            fail(where, "ragged matrix rows");
        m.row(static_cast<Eigen::Index>(i)) = row.transpose();
    }
    return m;
}

std::vector<double> values_from(const json& arr, const std::string& where)
{
    const auto v = vector_from(arr, where);
    return {v.data(), v.data() + v.size()};
}

NoiseModel parse_noise(const json& j)
{
    const std::string where = "noise";
    if (!j.is_object() || !j.contains("type") || !j.at("type").is_string())
        fail(where, "expected an object with a string 'type'");
    const auto type = j.at("type").get<std::string>();
    const double scale = number_or(j, "scale", 1.0, where);

    if (type == "none") {
        check_keys(j, where, {"type", "scale"});
        return make_noise(noise::Zero{}, scale);
    }
    if (type == "gaussian") {
        check_keys(j, where, {"type", "scale", "variance"});
        return make_noise(noise::Gaussian{number(j, "variance", where)}, scale);
    }
    if (type == "binary") {
        check_keys(j, where, {"type", "scale"});
        return make_noise(noise::Binary{}, scale);
    }
    if (type == "laplace") {
        check_keys(j, where, {"type", "scale", "b", "std"});
        if (j.contains("b") == j.contains("std"))
            fail(where, "laplace needs exactly one of 'b' or 'std'");
        const double b = j.contains("b") ? number(j, "b", where) : number(j, "std", where) / std::sqrt(2.0);
        return make_noise(noise::Laplace{b}, scale);
    }
    if (type == "cauchy") {
        check_keys(j, where, {"type", "scale", "s"});
        return make_noise(noise::Cauchy{number_or(j, "s", 1.0, where)}, scale);
    }
    if (type == "mixed-gaussian") {
        check_keys(j, where, {"type", "scale", "V_mix", "lambda1", "lambda2", "var1", "var2", "theta"});
        noise::MixedGaussian g;
        if (j.contains("V_mix")) {
            const auto v = vector_from(j.at("V_mix"), where + ".V_mix");
            if (v.size() != 5)
                fail(where, "V_mix needs 5 entries (lambda1, lambda2, var1, var2, theta)");
            g = {v(0), v(1), v(2), v(3), v(4)};
        } else {
            g = {number(j, "lambda1", where), number(j, "lambda2", where), number(j, "var1", where),
                 number(j, "var2", where), number(j, "theta", where)};
        }
        return make_noise(g, scale);
    }
    if (type == "alpha-stable") {
        check_keys(j, where, {"type", "scale", "V_alpha", "alpha", "beta", "gamma", "delta"});
        noise::AlphaStable a;
        if (j.contains("V_alpha")) {
            const auto v = vector_from(j.at("V_alpha"), where + ".V_alpha");
            if (v.size() != 4)
                fail(where, "V_alpha needs 4 entries (alpha, beta, gamma, delta)");
            a = {v(0), v(1), v(2), v(3)};
        } else {
            a = {number(j, "alpha", where), number_or(j, "beta", 0.0, where), number(j, "gamma", where),
                 number_or(j, "delta", 0.0, where)};
        }
        return make_noise(a, scale);
    }
    fail(where, "unknown noise type '" + type + "'");
}

AlgorithmConfig parse_algorithm_entry(const json& j, std::size_t index)
{
    const std::string where = "algorithms[" + std::to_string(index) + "]";
    check_keys(j, where, {"algo", "label", "eta", "sigma", "L", "epsilon", "lambda", "delta"});
    if (!j.contains("algo") || !j.at("algo").is_string())
        fail(where, "missing string 'algo'");
    AlgorithmConfig a;
    a.algo = parse_algorithm(j.at("algo").get<std::string>());
    a.label = j.contains("label") ? j.at("label").get<std::string>() : std::string(to_string(a.algo));
    if (j.contains("eta")) {
        const auto& eta = j.at("eta");
        if (eta.is_string()) {
            if (eta.get<std::string>() != "calibrate")
                fail(where, "'eta' must be a number or \"calibrate\"");
            a.calibrate_eta = true;
        } else {
            a.hp.eta = number(j, "eta", where);
        }
    }
    a.hp.sigma = number_or(j, "sigma", a.hp.sigma, where);
    a.hp.window = static_cast<int>(integer_or(j, "L", a.hp.window, where));
    a.hp.ap_regularization = number_or(j, "epsilon", a.hp.ap_regularization, where);
    a.hp.forgetting = number_or(j, "lambda", a.hp.forgetting, where);
    a.hp.crls_delta = number_or(j, "delta", a.hp.crls_delta, where);
    if (a.calibrate_eta && a.algo == Algorithm::CRLS)
        fail(where, "CRLS has no step size to calibrate");
    validate(a.algo, a.hp);
    return a;
}

SweepAxis parse_axis(const json& j, std::size_t index)
{
    const std::string where = "sweep[" + std::to_string(index) + "]";
    check_keys(j, where, {"axis", "values", "paired_eta"});
    if (!j.contains("axis") || !j.at("axis").is_string())
        fail(where, "missing string 'axis'");
    const auto name = j.at("axis").get<std::string>();
    SweepAxis ax;
    if (name == "eta") ax.kind = SweepKind::Eta;
    else if (name == "sigma") ax.kind = SweepKind::Sigma;
    else if (name == "alpha") ax.kind = SweepKind::Alpha;
    else if (name == "gamma") ax.kind = SweepKind::Gamma;
    else if (name == "noise_variance") ax.kind = SweepKind::NoiseVariance;
    else fail(where, "unknown axis '" + name + "'");
    if (!j.contains("values"))
        fail(where, "missing 'values'");
    ax.values = values_from(j.at("values"), where + ".values");
    if (ax.values.empty())
        fail(where, "'values' must be non-empty");
    if (j.contains("paired_eta")) {
        ax.paired_eta = values_from(j.at("paired_eta"), where + ".paired_eta");
        if (ax.paired_eta.size() != ax.values.size())
            fail(where, "'paired_eta' must match 'values' in length");
    }
    return ax;
}

} // namespace

ScenarioConfig parse_config(std::string_view text)
{
    json j;
    try {
        j = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("JSON parse error: ") + e.what());
    }

    try {
        check_keys(j, "config",
                   {"version", "name", "scenario", "M", "K", "W_true", "constraints", "input_covariance", "noise",
                    "algorithms", "runs", "iterations", "steady_window", "master_seed", "workers", "sweep",
                    "beamforming", "calibration", "divergence", "description"});

        ScenarioConfig cfg;
        cfg.source_text = j.dump();
        cfg.version = static_cast<int>(integer_or(j, "version", 1, "config"));
        if (cfg.version != 1)
            fail("config", "unsupported schema version " + std::to_string(cfg.version));
        if (j.contains("name"))
            cfg.name = j.at("name").get<std::string>();

        const auto scenario = j.value("scenario", std::string("sysid"));
        if (scenario == "sysid") cfg.scenario = ScenarioKind::SysId;
        else if (scenario == "beamforming") cfg.scenario = ScenarioKind::Beamforming;
        else if (scenario == "theory-validation") cfg.scenario = ScenarioKind::TheoryValidation;
        else fail("config", "unknown scenario '" + scenario + "'");

        cfg.M = static_cast<int>(integer_or(j, "M", 7, "config"));
        const bool beam = cfg.scenario == ScenarioKind::Beamforming;
        cfg.K = static_cast<int>(integer_or(j, "K", beam ? (cfg.M - 1) / 2 : 3, "config"));

        if (j.contains("W_true")) {
            const auto& w = j.at("W_true");
            if (w.is_string()) {
                if (w.get<std::string>() != "paper-default")
                    fail("W_true", "expected an array or \"paper-default\"");
            } else {
                cfg.W_true = vector_from(w, "W_true");
            }
        }

        cfg.constraint_source = beam ? ConstraintSource::LinearPhase : ConstraintSource::RandomSeeded;
        cfg.f_offset = Vector::Zero(cfg.K);
        if (j.contains("constraints")) {
            const auto& c = j.at("constraints");
            check_keys(c, "constraints", {"source", "C", "f", "f_offset"});
            const auto src = c.value("source", std::string(beam ? "beamforming-linear-phase" : "random-seeded"));
            if (src == "explicit") {
                cfg.constraint_source = ConstraintSource::Explicit;
                if (!c.contains("C"))
                    fail("constraints", "explicit source needs 'C'");
                cfg.C = matrix_from(c.at("C"), "constraints.C");
            } else if (src == "random-seeded") {
                cfg.constraint_source = ConstraintSource::RandomSeeded;
            } else if (src == "beamforming-linear-phase") {
                cfg.constraint_source = ConstraintSource::LinearPhase;
            } else {
                fail("constraints", "unknown source '" + src + "'");
            }
            if (c.contains("f"))
                cfg.f = vector_from(c.at("f"), "constraints.f");
            if (c.contains("f_offset")) {
                const auto& off = c.at("f_offset");
                cfg.f_offset = off.is_number() ? Vector::Constant(cfg.K, off.get<double>())
                                               : vector_from(off, "constraints.f_offset");
            }
        }

        cfg.covariance_source = beam ? CovarianceSource::Explicit : CovarianceSource::RandomSpd;
        if (j.contains("input_covariance")) {
            const auto& r = j.at("input_covariance");
            check_keys(r, "input_covariance", {"source", "R", "eigenvalue_range"});
            const auto src = r.value("source", std::string("random-spd-trace-m"));
            if (src == "random-spd-trace-m") cfg.covariance_source = CovarianceSource::RandomSpd;
            else if (src == "identity") cfg.covariance_source = CovarianceSource::Identity;
            else if (src == "explicit") {
                cfg.covariance_source = CovarianceSource::Explicit;
                if (!r.contains("R"))
                    fail("input_covariance", "explicit source needs 'R'");
                cfg.R = matrix_from(r.at("R"), "input_covariance.R");
            } else fail("input_covariance", "unknown source '" + src + "'");
            if (r.contains("eigenvalue_range")) {
                const auto range = vector_from(r.at("eigenvalue_range"), "input_covariance.eigenvalue_range");
                if (range.size() != 2 || !(range(0) > 0.0) || !(range(1) >= range(0)))
                    fail("input_covariance", "eigenvalue_range must be [lo, hi] with 0 < lo <= hi");
                cfg.eig_lo = range(0);
                cfg.eig_hi = range(1);
            }
        }

        if (!j.contains("noise"))
            fail("config", "missing 'noise'");
        cfg.noise = parse_noise(j.at("noise"));

        if (!j.contains("algorithms") || !j.at("algorithms").is_array() || j.at("algorithms").empty())
            fail("config", "'algorithms' must be a non-empty array");
        for (std::size_t i = 0; i < j.at("algorithms").size(); ++i)
            cfg.algorithms.push_back(parse_algorithm_entry(j.at("algorithms")[i], i));

        const bool validation = cfg.scenario == ScenarioKind::TheoryValidation;
        cfg.runs = integer_or(j, "runs", beam ? 1000 : 500, "config");
        cfg.iterations = integer_or(j, "iterations", validation ? 5000 : 3000, "config");
        cfg.steady_window = integer_or(j, "steady_window", 200, "config");
        if (j.contains("master_seed")) {
            if (!j.at("master_seed").is_number_unsigned())
                fail("config", "'master_seed' must be a non-negative integer");
            cfg.master_seed = j.at("master_seed").get<std::uint64_t>();
        }
        cfg.workers = static_cast<int>(integer_or(j, "workers", 0, "config"));

        if (j.contains("sweep")) {
            const auto& s = j.at("sweep");
            if (s.is_object())
                cfg.sweep.push_back(parse_axis(s, 0));
            else if (s.is_array())
                for (std::size_t i = 0; i < s.size(); ++i)
                    cfg.sweep.push_back(parse_axis(s[i], i));
            else
                fail("sweep", "expected an object or an array of axes");
        }

        if (j.contains("beamforming")) {
            const auto& b = j.at("beamforming");
            check_keys(b, "beamforming",
                       {"look_deg", "interferers_deg", "snr_db", "inr_db", "sensor_noise_variance", "grid_step_deg"});
            cfg.beam.look_deg = number_or(b, "look_deg", cfg.beam.look_deg, "beamforming");
            if (b.contains("interferers_deg"))
                cfg.beam.interferers_deg = values_from(b.at("interferers_deg"), "beamforming.interferers_deg");
            cfg.beam.snr_db = number_or(b, "snr_db", cfg.beam.snr_db, "beamforming");
            cfg.beam.inr_db = number_or(b, "inr_db", cfg.beam.inr_db, "beamforming");
            cfg.beam.sensor_noise_variance =
                number_or(b, "sensor_noise_variance", cfg.beam.sensor_noise_variance, "beamforming");
            cfg.beam.grid_step_deg = number_or(b, "grid_step_deg", cfg.beam.grid_step_deg, "beamforming");
        }

        if (j.contains("calibration")) {
            const auto& c = j.at("calibration");
            check_keys(c, "calibration", {"reference", "noise", "checkpoint", "window", "pilot_runs", "eta_range"});
            if (c.contains("reference"))
                cfg.calibration.reference = parse_algorithm(c.at("reference").get<std::string>());
            if (c.contains("noise")) {
                const auto mode = c.at("noise").get<std::string>();
                if (mode != "none" && mode != "scenario")
                    fail("calibration", "'noise' must be \"none\" or \"scenario\"");
                cfg.calibration.noiseless = mode == "none";
            }
            cfg.calibration.checkpoint = integer_or(c, "checkpoint", cfg.calibration.checkpoint, "calibration");
            cfg.calibration.window = integer_or(c, "window", cfg.calibration.window, "calibration");
            cfg.calibration.pilot_runs = integer_or(c, "pilot_runs", cfg.calibration.pilot_runs, "calibration");
            if (c.contains("eta_range")) {
                const auto r = vector_from(c.at("eta_range"), "calibration.eta_range");
                if (r.size() != 2)
                    fail("calibration", "eta_range must be [lo, hi]");
                cfg.calibration.eta_lo = r(0);
                cfg.calibration.eta_hi = r(1);
            }
        }

        if (j.contains("divergence")) {
            const auto& d = j.at("divergence");
            check_keys(d, "divergence", {"ratio", "floor", "magnitude_check"});
            if (d.contains("magnitude_check")) {
                if (!d.at("magnitude_check").is_boolean())
                    fail("divergence", "'magnitude_check' must be true or false");
                cfg.divergence.magnitude_check = d.at("magnitude_check").get<bool>();
            }
            cfg.divergence.ratio = number_or(d, "ratio", cfg.divergence.ratio, "divergence");
            cfg.divergence.floor = number_or(d, "floor", cfg.divergence.floor, "divergence");
        }

        validate(cfg);
        return cfg;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

void validate(const ScenarioConfig& cfg)
{
    if (cfg.M < 2)
        fail("config", "M must be >= 2");
    if (cfg.K < 1 || cfg.K >= cfg.M)
        fail("config", "K must satisfy 1 <= K < M");
    if (cfg.runs < 1)
        fail("config", "runs must be >= 1");
    if (cfg.steady_window < 1 || cfg.iterations <= cfg.steady_window)
        fail("config", "need iterations > steady_window >= 1");
    if (cfg.W_true && cfg.W_true->size() != cfg.M)
        fail("W_true", "length " + std::to_string(cfg.W_true->size()) + " does not match M=" + std::to_string(cfg.M));
    if (!cfg.W_true && cfg.M != 7 && cfg.scenario != ScenarioKind::Beamforming)
        fail("W_true", "the default system has 7 taps; give W_true explicitly for M=" + std::to_string(cfg.M));
    if (cfg.constraint_source == ConstraintSource::Explicit &&
        (cfg.C.rows() != cfg.M || cfg.C.cols() != cfg.K))
        fail("constraints", "C must be M x K");
    if (cfg.constraint_source == ConstraintSource::LinearPhase) {
        if (cfg.M % 2 == 0)
            fail("constraints", "linear-phase constraints need an odd M (a center element)");
        if (cfg.K != (cfg.M - 1) / 2)
            fail("constraints", "linear-phase constraints fix K = (M - 1) / 2");
    }
    if (cfg.f && cfg.f->size() != cfg.K)
        fail("constraints", "f must have K entries");
    if (cfg.f_offset.size() != 0 && cfg.f_offset.size() != cfg.K)
        fail("constraints", "f_offset must have K entries");
    if (cfg.covariance_source == CovarianceSource::Explicit && cfg.scenario != ScenarioKind::Beamforming &&
        (cfg.R.rows() != cfg.M || cfg.R.cols() != cfg.M))
        fail("input_covariance", "R must be M x M");
    if (cfg.scenario == ScenarioKind::Beamforming) {
        if (cfg.M % 2 == 0)
            fail("config", "beamforming needs an odd array length M");
        if (!(cfg.beam.grid_step_deg > 0.0))
            fail("beamforming", "grid_step_deg must be positive");
        if (!(cfg.beam.sensor_noise_variance >= 0.0))
            fail("beamforming", "sensor_noise_variance must be non-negative");
    }
    if (cfg.scenario == ScenarioKind::TheoryValidation &&
        std::none_of(cfg.algorithms.begin(), cfg.algorithms.end(),
                     [](const AlgorithmConfig& a) { return a.algo == Algorithm::CMCC; }))
        fail("algorithms", "theory validation needs a CMCC entry");
    const bool any_calibrated = std::any_of(cfg.algorithms.begin(), cfg.algorithms.end(),
                                            [](const AlgorithmConfig& a) { return a.calibrate_eta; });
    for (const auto& a : cfg.algorithms)
        if (a.calibrate_eta && a.algo == Algorithm::CRLS)
            fail("algorithms", "CRLS has no step size to calibrate");
    if (any_calibrated) {
        const auto& c = cfg.calibration;
        if (std::none_of(cfg.algorithms.begin(), cfg.algorithms.end(), [&](const AlgorithmConfig& a) {
                return a.algo == c.reference && !a.calibrate_eta;
            }))
            fail("calibration", "reference algorithm must be configured with a fixed step size");
        if (c.pilot_runs < 1 || c.window < 1 || c.checkpoint < c.window || c.checkpoint >= cfg.iterations)
            fail("calibration", "need pilot_runs >= 1 and window <= checkpoint < iterations");
        if (!(c.eta_lo > 0.0 && c.eta_hi > c.eta_lo))
            fail("calibration", "eta_range must satisfy 0 < lo < hi");
    }
    if (!(cfg.divergence.ratio > 0.0) || !(cfg.divergence.floor >= 0.0))
        fail("divergence", "ratio must be positive and floor non-negative");
}

ScenarioConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot open config file '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

void apply_profile(ScenarioConfig& cfg, Profile profile)
{
    if (profile == Profile::Paper)
        return;
    cfg.runs = std::max(1L, cfg.runs / 10);
    cfg.iterations = std::max(cfg.steady_window + 1, cfg.iterations / 3);
    cfg.calibration.pilot_runs = std::max(1L, cfg.calibration.pilot_runs / 10);
    if (cfg.calibration.checkpoint >= cfg.iterations)
        cfg.calibration.checkpoint = cfg.iterations - 1;
}

bool apply_seed_override(ScenarioConfig& cfg)
{
    const char* env = std::getenv(kSeedEnvVar);
    if (!env || !*env)
        return false;
    char* end = nullptr;
    const auto v = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0')
        throw ConfigError(std::string(kSeedEnvVar) + " must be a non-negative integer");
    cfg.master_seed = v;
    return true;
}

std::string config_hash(const ScenarioConfig& cfg)
{
    std::ostringstream os;
    os << cfg.source_text << '|' << cfg.runs << '|' << cfg.iterations << '|' << cfg.master_seed;
    const auto text = os.str();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream hex;
    hex << std::hex << h;
    return hex.str();
}

} // namespace cmcc
