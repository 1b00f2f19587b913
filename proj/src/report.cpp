#include "cmcc/report.hpp"

#include "cmcc/errors.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace cmcc {

std::size_t CsvTable::column(std::string_view name) const
{
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name)
            return i;
    throw InputError("CSV has no column '" + std::string(name) + "'");
}

std::string format_number(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return {buf.data(), res.ptr};
}

namespace {

std::string fixed(double v, int precision)
{
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::fixed, precision);
    return {buf.data(), res.ptr};
}

std::string short_number(double v)
{
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, 4);
    return {buf.data(), res.ptr};
}

std::string quote(const std::string& cell)
{
    if (cell.find_first_of(",\"\n\r") == std::string::npos)
        return cell;
    std::string out = "\"";
    for (char c : cell) {
        if (c == '"')
            out += '"';
        out += c;
    }
    return out + "\"";
}

double db(double v) { return 10.0 * std::log10(v); }

std::string sweep_label(const ExperimentResult& r)
{
    std::string s;
    for (const auto& [kind, value] : r.point) {
        if (!s.empty())
            s += ' ';
        s += std::string(to_string(kind)) + "=" + format_number(value);
    }
    return s;
}

} // namespace

std::string to_csv(const CsvTable& table)
{
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i)
                out += ',';
            out += quote(cells[i]);
        }
        out += '\n';
    };
    line(table.header);
    for (const auto& r : table.rows)
        line(r);
    return out;
}

CsvTable parse_csv(std::string_view text)
{
    std::vector<std::vector<std::string>> lines;
    std::vector<std::string> row;
    std::string cell;
    bool quoted = false;
    bool any = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    cell += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cell += c;
            }
            continue;
        }
        if (c == '"') {
            quoted = true;
            any = true;
        } else if (c == ',') {
            row.push_back(std::move(cell));
            cell.clear();
            any = true;
        } else if (c == '\n') {
            row.push_back(std::move(cell));
            cell.clear();
            lines.push_back(std::move(row));
            row.clear();
            any = false;
        } else if (c != '\r') {
            cell += c;
            any = true;
        }
    }
    if (quoted)
        throw InputError("CSV ends inside a quoted cell");
    if (any) {
        row.push_back(std::move(cell));
        lines.push_back(std::move(row));
    }
    if (lines.empty())
        throw InputError("CSV is empty");
    CsvTable t;
    t.header = std::move(lines.front());
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].size() != t.header.size())
            throw InputError("CSV row " + std::to_string(i) + " has " + std::to_string(lines[i].size()) +
                             " cells, header has " + std::to_string(t.header.size()));
        t.rows.push_back(std::move(lines[i]));
    }
    return t;
}

CsvTable msd_table(const ExperimentResult& result)
{
    CsvTable t;
    t.header.push_back("iteration");
    for (const auto& a : result.algos)
        t.header.push_back("msd_db_" + a.label);
    const std::size_t n = result.algos.empty() ? 0 : result.algos.front().msd.size();
    t.rows.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::string> row;
        row.reserve(t.header.size());
        row.push_back(std::to_string(i + 1));
        for (const auto& a : result.algos)
            row.push_back(format_number(db(a.msd[i])));
        t.rows.push_back(std::move(row));
    }
    return t;
}

CsvTable summary_table(const std::vector<ExperimentResult>& results)
{
    CsvTable t;
    t.header = {"point",         "sweep",         "x",          "algorithm",    "eta",
                "sigma",         "steady_msd",    "steady_msd_db", "steady_std_db", "output_power",
                "diverged_runs", "retained_runs", "theory_msd", "theory_msd_db", "deviation_db",
                "theory_status"};
    for (std::size_t p = 0; p < results.size(); ++p) {
        const auto& r = results[p];
        const std::string x = r.point.empty() ? "" : format_number(r.point.back().second);
        bool theory_row = r.scenario == ScenarioKind::TheoryValidation;
        for (const auto& a : r.algos) {
            std::vector<std::string> row{std::to_string(p),
                                         sweep_label(r),
                                         x,
                                         a.label,
                                         a.algo == Algorithm::CRLS ? "" : format_number(a.hp.eta),
                                         a.algo == Algorithm::CMCC ? format_number(a.hp.sigma) : "",
                                         format_number(a.steady_msd),
                                         format_number(a.steady_msd_db),
                                         format_number(a.steady_std_db),
                                         format_number(a.output_power),
                                         std::to_string(a.diverged_runs),
                                         std::to_string(a.retained_runs)};
            if (theory_row && a.algo == Algorithm::CMCC) {
                theory_row = false;
                if (r.theory) {
                    const double sdb = db(r.theory->S);
                    row.insert(row.end(), {format_number(r.theory->S), format_number(sdb),
                                           format_number(a.steady_msd_db - sdb), "ok"});
                } else {
                    const auto colon = r.theory_note.find(':');
                    row.insert(row.end(), {"", "", "", r.theory_note.substr(0, colon)});
                }
            } else {
                row.insert(row.end(), {"", "", "", ""});
            }
            t.rows.push_back(std::move(row));
        }
    }
    return t;
}

CsvTable calibration_table(const std::vector<ExperimentResult>& results)
{
    CsvTable t;
    t.header = {"point", "sweep", "algorithm", "eta", "target_db", "achieved_db", "matched"};
    for (std::size_t p = 0; p < results.size(); ++p)
        for (const auto& c : results[p].calibration)
            t.rows.push_back({std::to_string(p), sweep_label(results[p]), c.label, format_number(c.eta),
                              format_number(c.target_db), format_number(c.achieved_db), c.matched ? "1" : "0"});
    return t;
}

CsvTable beampattern_table(const std::vector<BeamPattern>& patterns)
{
    CsvTable t;
    t.header.push_back("angle_deg");
    for (const auto& p : patterns)
        t.header.push_back("gain_db_" + p.label);
    if (patterns.empty())
        return t;
    const auto& grid = patterns.front().angle_deg;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        std::vector<std::string> row{format_number(grid[i])};
        for (const auto& p : patterns)
            row.push_back(p.degenerate ? "nan" : format_number(p.gain_db[i]));
        t.rows.push_back(std::move(row));
    }
    return t;
}

CsvTable prediction_table(const std::vector<PredictionRow>& rows)
{
    CsvTable t;
    t.header = {"eta", "sigma", "noise", "noise_power", "excess", "eta_max", "eta_max_with_gains",
                "Eg",  "Eg2",   "gain_path", "spectral_radius", "S", "S_db"};
    for (const auto& r : rows) {
        const auto& p = r.prediction;
        t.rows.push_back({format_number(r.eta), format_number(r.sigma), r.noise, format_number(p.noise_power),
                          format_number(p.excess), format_number(p.eta_max), format_number(p.eta_max_with_gains),
                          format_number(p.Eg), format_number(p.Eg2),
                          p.path == GainPath::Taylor ? "taylor" : "gaussian", format_number(p.spectral_radius),
                          format_number(p.S), format_number(db(p.S))});
    }
    return t;
}

namespace {

struct Series {
    std::string name;
    std::vector<std::pair<double, double>> pts;
};

double cell_value(const std::string& s)
{
    if (s.empty())
        return std::numeric_limits<double>::quiet_NaN();
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        if (s == "inf")
            return std::numeric_limits<double>::infinity();
        if (s == "-inf")
            return -std::numeric_limits<double>::infinity();
        return std::numeric_limits<double>::quiet_NaN();
    }
    return v;
}

struct PlotLayout {
    std::string x_label;
    std::string y_label;
    bool log_x = false;
    std::vector<Series> series;
};

PlotLayout layout_for(const CsvTable& t)
{
    if (t.header.empty())
        throw InputError("cannot plot an empty table");
    PlotLayout L;
    const auto& first = t.header.front();
    auto columns_from = [&](std::size_t xcol, std::string_view prefix) {
        for (std::size_t c = 0; c < t.header.size(); ++c) {
            if (c == xcol || t.header[c].rfind(prefix, 0) != 0)
                continue;
            Series s{t.header[c].substr(prefix.size()), {}};
            for (const auto& row : t.rows)
                s.pts.emplace_back(cell_value(row[xcol]), cell_value(row[c]));
            L.series.push_back(std::move(s));
        }
    };
    if (first == "iteration") {
        L.x_label = "iteration";
        L.y_label = "MSD (dB)";
        columns_from(0, "msd_db_");
    } else if (first == "angle_deg") {
        L.x_label = "angle (deg)";
        L.y_label = "gain (dB)";
        columns_from(0, "gain_db_");
    } else if (first == "eta" && t.header.size() > 12) {
        L.x_label = "eta";
        L.y_label = "predicted MSD (dB)";
        Series s{"theory", {}};
        const auto yc = t.column("S_db");
        for (const auto& row : t.rows)
            s.pts.emplace_back(cell_value(row[0]), cell_value(row[yc]));
        L.series.push_back(std::move(s));
    } else if (first == "point") {
        const auto xc = t.column("x");
        const auto ac = t.column("algorithm");
        const auto yc = t.column("steady_msd_db");
        const auto tc = t.column("theory_msd_db");
        L.x_label = "sweep value";
        L.y_label = "steady-state MSD (dB)";
        Series theory{"theory", {}};
        for (const auto& row : t.rows) {
            const double x = row[xc].empty() ? cell_value(row[0]) : cell_value(row[xc]);
            auto it = std::find_if(L.series.begin(), L.series.end(), [&](const Series& s) { return s.name == row[ac]; });
            if (it == L.series.end()) {
                L.series.push_back({row[ac], {}});
                it = std::prev(L.series.end());
            }
            it->pts.emplace_back(x, cell_value(row[yc]));
            if (!row[tc].empty())
                theory.pts.emplace_back(x, cell_value(row[tc]));
        }
        if (!theory.pts.empty())
            L.series.push_back(std::move(theory));
    } else {
        throw InputError("no plot layout for a table starting with column '" + first + "'");
    }
    return L;
}

std::string escape_xml(std::string_view s)
{
    std::string out;
    for (char c : s) {
        switch (c) {
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '&': out += "&amp;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

std::string comment_safe(std::string s)
{
    std::string::size_type pos = 0;
    while ((pos = s.find("--", pos)) != std::string::npos)
        s.replace(pos, 2, "- -");
    return s;
}

} // namespace

std::string render_svg(const CsvTable& table, std::string_view title)
{
    const auto L = layout_for(table);
    constexpr double W = 720, H = 440, left = 70, right = 150, top = 40, bottom = 50;
    constexpr std::array<const char*, 8> palette{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                                 "#9467bd", "#8c564b", "#e377c2", "#17becf"};

    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    for (const auto& s : L.series)
        for (const auto& [x, y] : s.pts) {
            if (!std::isfinite(x) || !std::isfinite(y))
                continue;
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    if (!std::isfinite(xmin)) {
        xmin = 0;
        xmax = 1;
        ymin = 0;
        ymax = 1;
    }
    if (xmax == xmin) {
        xmin -= 0.5;
        xmax += 0.5;
    }
    if (ymax == ymin) {
        ymin -= 1;
        ymax += 1;
    }
    const double pad = 0.05 * (ymax - ymin);
    ymin -= pad;
    ymax += pad;

    const double pw = W - left - right, ph = H - top - bottom;
    auto X = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
    auto Y = [&](double y) { return top + (ymax - y) / (ymax - ymin) * ph; };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fixed(W, 0) << "\" height=\"" << fixed(H, 0)
       << "\" viewBox=\"0 0 " << fixed(W, 0) << ' ' << fixed(H, 0) << "\">\n";
    os << "<!-- cmcc-plot style 1\n" << comment_safe(to_csv(table)) << "-->\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << fixed(left + pw / 2, 2) << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
       << "font-size=\"15\">" << escape_xml(title) << "</text>\n";
    os << "<rect x=\"" << fixed(left, 2) << "\" y=\"" << fixed(top, 2) << "\" width=\"" << fixed(pw, 2)
       << "\" height=\"" << fixed(ph, 2) << "\" fill=\"none\" stroke=\"black\"/>\n";

    constexpr int ticks = 5;
    for (int i = 0; i <= ticks; ++i) {
        const double xv = xmin + (xmax - xmin) * i / ticks;
        const double yv = ymin + (ymax - ymin) * i / ticks;
        os << "<line x1=\"" << fixed(X(xv), 2) << "\" y1=\"" << fixed(top + ph, 2) << "\" x2=\"" << fixed(X(xv), 2)
           << "\" y2=\"" << fixed(top + ph + 5, 2) << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << fixed(X(xv), 2) << "\" y=\"" << fixed(top + ph + 18, 2)
           << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << short_number(xv)
           << "</text>\n";
        os << "<line x1=\"" << fixed(left - 5, 2) << "\" y1=\"" << fixed(Y(yv), 2) << "\" x2=\"" << fixed(left, 2)
           << "\" y2=\"" << fixed(Y(yv), 2) << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << fixed(left - 8, 2) << "\" y=\"" << fixed(Y(yv) + 4, 2)
           << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << short_number(yv)
           << "</text>\n";
    }
    os << "<text x=\"" << fixed(left + pw / 2, 2) << "\" y=\"" << fixed(H - 10, 2)
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << escape_xml(L.x_label)
       << "</text>\n";
    os << "<text x=\"16\" y=\"" << fixed(top + ph / 2, 2) << "\" transform=\"rotate(-90 16 "
       << fixed(top + ph / 2, 2) << ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
       << escape_xml(L.y_label) << "</text>\n";

    for (std::size_t k = 0; k < L.series.size(); ++k) {
        const auto& s = L.series[k];
        const char* color = palette[k % palette.size()];
        const bool markers = s.pts.size() <= 60;
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\""
           << (s.name == "theory" ? " stroke-dasharray=\"6 3\"" : "") << " points=\"";
        bool first = true;
        for (const auto& [x, y] : s.pts) {
            if (!std::isfinite(x) || !std::isfinite(y))
                continue;
            os << (first ? "" : " ") << fixed(X(x), 2) << ',' << fixed(Y(y), 2);
            first = false;
        }
        os << "\"/>\n";
        if (markers)
            for (const auto& [x, y] : s.pts)
                if (std::isfinite(x) && std::isfinite(y))
                    os << "<circle cx=\"" << fixed(X(x), 2) << "\" cy=\"" << fixed(Y(y), 2) << "\" r=\"2.5\" fill=\""
                       << color << "\"/>\n";
        const double ly = top + 14 + 18.0 * static_cast<double>(k);
        os << "<line x1=\"" << fixed(W - right + 12, 2) << "\" y1=\"" << fixed(ly, 2) << "\" x2=\""
           << fixed(W - right + 36, 2) << "\" y2=\"" << fixed(ly, 2) << "\" stroke=\"" << color
           << "\" stroke-width=\"2\"/>\n";
        os << "<text x=\"" << fixed(W - right + 42, 2) << "\" y=\"" << fixed(ly + 4, 2)
           << "\" font-family=\"sans-serif\" font-size=\"11\">" << escape_xml(s.name) << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

void write_text(const std::filesystem::path& path, std::string_view content)
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw InputError("cannot write '" + path.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out)
        throw InputError("write failed for '" + path.string() + "'");
}

std::string read_text(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw InputError("cannot read '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace cmcc
