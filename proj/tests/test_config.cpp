#include "cmcc/config.hpp"
#include "cmcc/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <string>

using namespace cmcc;

namespace {

const std::string algos = R"("algorithms": [{"algo": "CMCC", "eta": 0.01, "sigma": 2}])";

ScenarioConfig with_noise(const std::string& noise)
{
    return parse_config(R"({"noise": )" + noise + ", " + algos + "}");
}

} // namespace

TEST_CASE("minimal config takes the defaults")
{
    const auto cfg = with_noise(R"({"type": "gaussian", "variance": 0.81})");
    CHECK(cfg.scenario == ScenarioKind::SysId);
    CHECK(cfg.M == 7);
    CHECK(cfg.K == 3);
    CHECK(cfg.runs == 500);
    CHECK(cfg.iterations == 3000);
    CHECK(cfg.steady_window == 200);
    CHECK(cfg.master_seed == 20170101u);
    CHECK(cfg.constraint_source == ConstraintSource::RandomSeeded);
    CHECK(cfg.covariance_source == CovarianceSource::RandomSpd);
    CHECK_FALSE(cfg.W_true.has_value());
    REQUIRE(cfg.algorithms.size() == 1);
    CHECK(cfg.algorithms[0].label == "CMCC");
    CHECK(cfg.algorithms[0].hp.sigma == 2.0);

    const auto tv = parse_config(R"({"scenario": "theory-validation", "noise": {"type": "binary"}, )" + algos + "}");
    CHECK(tv.iterations == 5000);
    const auto bf = parse_config(R"({"scenario": "beamforming", "noise": {"type": "binary"}, )" + algos + "}");
    CHECK(bf.runs == 1000);
    CHECK(bf.K == 3);
    CHECK(bf.constraint_source == ConstraintSource::LinearPhase);
}

TEST_CASE("noise variants")
{
    CHECK(noise_type_name(with_noise(R"({"type": "none"})").noise) == "none");
    CHECK(std::get<noise::Laplace>(with_noise(R"({"type": "laplace", "std": 2})").noise.dist).b ==
          doctest::Approx(std::sqrt(2.0)));
    CHECK(std::get<noise::Laplace>(with_noise(R"({"type": "laplace", "b": 3})").noise.dist).b == 3.0);
    const auto c = with_noise(R"({"type": "cauchy", "s": 1, "scale": 0.1})").noise;
    CHECK(c.scale == 0.1);
    const auto m = std::get<noise::MixedGaussian>(with_noise(R"({"type": "mixed-gaussian", "V_mix": [0, 0, 0.01, 100, 0.05]})").noise.dist);
    CHECK(m.var2 == 100.0);
    CHECK(m.theta == 0.05);
    const auto m2 = std::get<noise::MixedGaussian>(
        with_noise(R"({"type": "mixed-gaussian", "lambda1": 0, "lambda2": 1, "var1": 0.1, "var2": 9, "theta": 0.2})")
            .noise.dist);
    CHECK(m2.lambda2 == 1.0);
    const auto a = std::get<noise::AlphaStable>(with_noise(R"({"type": "alpha-stable", "V_alpha": [1.2, 0, 1.6, 0]})").noise.dist);
    CHECK(a.alpha == 1.2);
    CHECK(a.gamma == 1.6);
    const auto a2 = std::get<noise::AlphaStable>(with_noise(R"({"type": "alpha-stable", "alpha": 1.5, "gamma": 0.4})").noise.dist);
    CHECK(a2.beta == 0.0);
}

TEST_CASE("schema violations are ConfigErrors")
{
    const char* bad[] = {
        "not json",
        R"({"noise": {"type": "gaussian", "variance": 1}})",                                  // no algorithms
        R"({"algorithms": [{"algo": "CMCC"}]})",                                              // no noise
        R"({"noise": {"type": "gaussian", "variance": 1}, "algorithms": [], "M": 7})",
        R"({"noise": {"type": "gaussian", "variance": 1, "mean": 2}, "algorithms": [{"algo": "CMCC"}]})",
        R"({"noise": {"type": "pink"}, "algorithms": [{"algo": "CMCC"}]})",
        R"({"noise": {"type": "laplace", "b": 1, "std": 1}, "algorithms": [{"algo": "CMCC"}]})",
        R"({"noise": {"type": "gaussian", "variance": -1}, "algorithms": [{"algo": "CMCC"}]})",
        R"({"noise": {"type": "alpha-stable", "V_alpha": [1.2, 0, 1.6]}, "algorithms": [{"algo": "CMCC"}]})",
        R"({"noise": {"type": "binary"}, "algorithms": [{"algo": "NLMS"}]})",
        R"({"noise": {"type": "binary"}, "algorithms": [{"algo": "CMCC", "eta": "auto"}]})",
        R"({"noise": {"type": "binary"}, "algorithms": [{"algo": "CMCC", "sigma": 0}]})",
        R"({"noise": {"type": "binary"}, "algorithms": [{"algo": "CMCC", "mu": 0.1}]})",
        R"({"noise": {"type": "binary"}, "algorithms": [{"algo": "CRLS", "eta": "calibrate"}]})",
        R"({"noise": {"type": "binary"}, "algorithms": [{"algo": "CAP", "L": 2.5}]})",
        R"({"noise": {"type": "binary"}, "algorithms": [{"algo": "CMCC"}], "runs": 0})",
        R"({"noise": {"type": "binary"}, "algorithms": [{"algo": "CMCC"}], "iterations": 100, "steady_window": 200})",
        R"({"noise": {"type": "binary"}, "algorithms": [{"algo": "CMCC"}], "M": 5})",
        R"({"noise": {"type": "binary"}, "algorithms": [{"algo": "CMCC"}], "K": 7})",
        R"({"noise": {"type": "binary"}, "algorithms": [{"algo": "CMCC"}], "W_true": [1, 2]})",
        R"({"noise": {"type": "binary"}, "algorithms": [{"algo": "CMCC"}], "master_seed": -3})",
        R"({"noise": {"type": "binary"}, "algorithms": [{"algo": "CMCC"}], "version": 2})",
        R"({"noise": {"type": "binary"}, "algorithms": [{"algo": "CMCC"}], "scenario": "radar"})",
        R"({"noise": {"type": "binary"}, "algorithms": [{"algo": "CMCC"}], "colour": "red"})",
        R"({"noise": {"type": "binary"}, "algorithms": [{"algo": "CMCC"}], "constraints": {"source": "explicit"}})",
        R"({"noise": {"type": "binary"}, "algorithms": [{"algo": "CMCC"}], "constraints": {"f_offset": [1, 2]}})",
        R"({"noise": {"type": "binary"}, "algorithms": [{"algo": "CMCC"}], "sweep": {"axis": "lambda", "values": [1]}})",
        R"({"noise": {"type": "binary"}, "algorithms": [{"algo": "CMCC"}], "sweep": {"axis": "eta", "values": []}})",
        R"({"noise": {"type": "binary"}, "algorithms": [{"algo": "CMCC"}], "sweep": {"axis": "sigma", "values": [1, 2], "paired_eta": [0.1]}})",
        R"({"noise": {"type": "binary"}, "algorithms": [{"algo": "CLMS", "eta": "calibrate"}]})",
        R"({"noise": {"type": "binary"}, "algorithms": [{"algo": "CLMS", "eta": "calibrate"}, {"algo": "CMCC"}], "calibration": {"eta_range": [1, 0.1]}})",
        R"({"noise": {"type": "binary"}, "algorithms": [{"algo": "CMCC"}], "divergence": {"magnitude_check": 1}})",
        R"({"noise": {"type": "binary"}, "algorithms": [{"algo": "CMCC"}], "scenario": "theory-validation", "algorithms": [{"algo": "CLMS"}]})",
        R"({"noise": {"type": "binary"}, "algorithms": [{"algo": "CMCC"}], "scenario": "beamforming", "M": 8})",
    };
    for (const char* text : bad) {
        CHECK_THROWS_AS_MESSAGE(parse_config(text), ConfigError, text);
    }
    try {
        parse_config(R"({"noise": {"type": "binary"}, "algorithms": [{"algo": "CMCC"}], "colour": "red"})");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("colour") != std::string::npos);
        CHECK(std::string(e.code()) == "config");
    }
}

TEST_CASE("explicit geometry")
{
    const auto cfg = parse_config(R"({"M": 3, "K": 1, "W_true": [1, 2, 3], "noise": {"type": "binary"},
        "constraints": {"source": "explicit", "C": [[1], [0], [0]], "f": [1]},
        "input_covariance": {"source": "explicit", "R": [[1, 0, 0], [0, 2, 0], [0, 0, 3]]},
        "algorithms": [{"algo": "CMCC"}]})");
    CHECK(cfg.C.rows() == 3);
    CHECK(cfg.C.cols() == 1);
    CHECK(cfg.R(2, 2) == 3.0);
    CHECK((*cfg.f)(0) == 1.0);
    CHECK((*cfg.W_true)(2) == 3.0);

    const auto off = parse_config(R"({"noise": {"type": "binary"}, "constraints": {"f_offset": 0.5}, )" + algos + "}");
    CHECK(off.f_offset.size() == 3);
    CHECK(off.f_offset(2) == 0.5);
}

TEST_CASE("sweep axes")
{
    const auto cfg = parse_config(R"({"noise": {"type": "alpha-stable", "V_alpha": [1.2, 0, 1.6, 0]}, )" + algos +
                                  R"(, "sweep": [{"axis": "alpha", "values": [0.6, 0.8]}, {"axis": "gamma", "values": [1.2]}]})");
    REQUIRE(cfg.sweep.size() == 2);
    CHECK(cfg.sweep[0].kind == SweepKind::Alpha);
    CHECK(cfg.sweep[1].values == std::vector<double>{1.2});
    CHECK(to_string(SweepKind::NoiseVariance) == "noise_variance");
    CHECK(to_string(ScenarioKind::TheoryValidation) == "theory-validation");
}

TEST_CASE("config hash")
{
    const auto a = with_noise(R"({"type": "binary"})");
    const auto b = with_noise(R"({"type":   "binary"})"); // whitespace is canonicalized
    CHECK(config_hash(a) == config_hash(b));
    CHECK(config_hash(a).size() <= 16);
    const auto c = with_noise(R"({"type": "gaussian", "variance": 1})");
    CHECK(config_hash(a) != config_hash(c));
}

TEST_CASE("shipped configs parse")
{
    int n = 0;
    for (const auto& entry : std::filesystem::directory_iterator(CMCC_CONFIG_DIR)) {
        if (entry.path().extension() != ".json")
            continue;
        CHECK_NOTHROW_MESSAGE(load_config(entry.path()), entry.path().string());
        ++n;
    }
    CHECK(n >= 15);
    CHECK_THROWS_AS(load_config("/nonexistent/cfg.json"), ConfigError);
}
