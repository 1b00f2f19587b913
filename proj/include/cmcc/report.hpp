#pragma once

#include "cmcc/experiments.hpp"
#include "cmcc/theory.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace cmcc {

/// Header plus rows of string cells. Numbers are written with the shortest
/// round-trip representation, independent of locale.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Column index by name; throws InputError when absent.
    std::size_t column(std::string_view name) const;
};

std::string format_number(double v);

/// RFC 4180 style: cells containing ',', '"' or newlines are quoted.
std::string to_csv(const CsvTable& table);
/// Throws InputError on ragged rows or an unterminated quote.
CsvTable parse_csv(std::string_view text);

/// iteration, msd_db_<label>...  (iterations are 1-based)
CsvTable msd_table(const ExperimentResult& result);

/// point, sweep, x, algorithm, eta, sigma, steady_msd, steady_msd_db,
/// steady_std_db, output_power, diverged_runs, retained_runs, theory_msd,
/// theory_msd_db, deviation_db, theory_status
CsvTable summary_table(const std::vector<ExperimentResult>& results);

/// point, sweep, algorithm, eta, target_db, achieved_db, matched
CsvTable calibration_table(const std::vector<ExperimentResult>& results);

/// angle_deg, gain_db_<label>...
CsvTable beampattern_table(const std::vector<BeamPattern>& patterns);

struct PredictionRow {
    double eta = 0.0;
    double sigma = 0.0;
    std::string noise;
    SteadyStatePrediction prediction;
};

/// eta, sigma, noise, noise_power, excess, eta_max, eta_max_with_gains, Eg,
/// Eg2, gain_path, spectral_radius, S, S_db
CsvTable prediction_table(const std::vector<PredictionRow>& rows);

/// Line chart of a table produced by one of the writers above, chosen by its
/// first column. A pure function of the table: the CSV is embedded in a
/// comment and every coordinate is printed with fixed precision.
std::string render_svg(const CsvTable& table, std::string_view title);

/// Writes `content` to `path`, creating parent directories. Throws InputError.
void write_text(const std::filesystem::path& path, std::string_view content);
std::string read_text(const std::filesystem::path& path);

} // namespace cmcc
