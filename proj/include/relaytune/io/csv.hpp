#pragma once

#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "relaytune/dnn/mlp.hpp"
#include "relaytune/servo/scenario.hpp"

namespace relaytune {

/// Numeric CSV with one header line. Empty cells read as NaN, "inf"/"-inf" as infinities.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    [[nodiscard]] std::size_t column(const std::string& name) const
    {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name)
                return i;
        throw Error("csv: no column '" + name + "'");
    }
    [[nodiscard]] bool has(const std::string& name) const
    {
        return std::find(header.begin(), header.end(), name) != header.end();
    }
    [[nodiscard]] std::vector<double> values(const std::string& name) const
    {
        const std::size_t c = column(name);
        std::vector<double> v;
        v.reserve(rows.size());
        for (const auto& r : rows)
            v.push_back(r[c]);
        return v;
    }
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ','))
        cells.push_back(cell);
    if (!line.empty() && line.back() == ',')
        cells.emplace_back();
    return cells;
}

inline std::string trim(std::string s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline void write_cell(std::ostream& out, double v)
{
    if (std::isnan(v))
        return;
    if (std::isinf(v)) {
        out << (v > 0 ? "inf" : "-inf");
        return;
    }
    out << v;
}

} // namespace detail

inline CsvTable parse_csv(std::istream& in, const std::string& what = "csv")
{
    CsvTable t;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = detail::trim(line);
        if (line.empty())
            continue;
        auto cells = detail::split_csv_line(line);
        if (t.header.empty()) {
            for (auto& c : cells)
                t.header.push_back(detail::trim(c));
            continue;
        }
        require(cells.size() == t.header.size(), what + ":" + std::to_string(lineno) + ": expected " +
                                                     std::to_string(t.header.size()) + " cells, got " +
                                                     std::to_string(cells.size()));
        std::vector<double> row;
        row.reserve(cells.size());
        for (std::size_t i = 0; i < cells.size(); ++i) {
            const std::string c = detail::trim(cells[i]);
            if (c.empty()) {
                row.push_back(std::numeric_limits<double>::quiet_NaN());
            } else if (c == "inf") {
                row.push_back(kInf);
            } else if (c == "-inf") {
                row.push_back(-kInf);
            } else {
                double v = 0.0;
                const auto [p, ec] = std::from_chars(c.data(), c.data() + c.size(), v);
                require(ec == std::errc{} && p == c.data() + c.size(),
                        what + ":" + std::to_string(lineno) + ": column '" + t.header[i] + "': not a number: '" + c + "'");
                row.push_back(v);
            }
        }
        t.rows.push_back(std::move(row));
    }
    require(!t.header.empty(), what + ": empty file");
    return t;
}

inline CsvTable read_csv(const std::string& path)
{
    std::ifstream in(path);
    require(static_cast<bool>(in), "cannot open " + path);
    return parse_csv(in, path);
}

inline void write_csv(std::ostream& out, const CsvTable& t)
{
    out << std::setprecision(10);
    for (std::size_t i = 0; i < t.header.size(); ++i)
        out << (i ? "," : "") << t.header[i];
    out << '\n';
    for (const auto& r : t.rows) {
        require(r.size() == t.header.size(), "csv: row width does not match the header");
        for (std::size_t i = 0; i < r.size(); ++i) {
            if (i)
                out << ',';
            detail::write_cell(out, r[i]);
        }
        out << '\n';
    }
}

inline void write_csv(const std::string& path, const CsvTable& t)
{
    std::ofstream out(path);
    require(static_cast<bool>(out), "cannot write " + path);
    write_csv(out, t);
    require(static_cast<bool>(out), "write failed: " + path);
}

/// Columns t, reference, output, error, control.
inline CsvTable traces_table(const RunTraces& tr)
{
    CsvTable t{{"t", "reference", "output", "error", "control"}, {}};
    for (std::size_t i = 0; i < tr.size(); ++i)
        t.rows.push_back({tr.t[i], tr.reference[i], tr.output[i], tr.error[i], tr.control[i]});
    return t;
}

/// Columns t, e, u, b_1, b_2, inhibited.
inline CsvTable relay_table(const RelayTrace& tr)
{
    CsvTable t{{"t", "e", "u", "b_1", "b_2", "inhibited"}, {}};
    for (std::size_t i = 0; i < tr.size(); ++i)
        t.rows.push_back({tr.t[i], tr.error[i], tr.control[i], tr.b1[i], tr.b2[i], tr.inhibited[i] ? 1.0 : 0.0});
    return t;
}

inline CsvTable servo_table(const ServoTraces& tr)
{
    CsvTable t{{"t", "target", "reference", "truth", "measurement", "kf_position", "kf_velocity", "kf_bias",
                "kf_sigma", "error", "control", "force", "schedule"},
               {}};
    for (std::size_t i = 0; i < tr.size(); ++i)
        t.rows.push_back({tr.t[i], tr.target[i], tr.reference[i], tr.truth[i], tr.measurement[i], tr.kf_position[i],
                          tr.kf_velocity[i], tr.kf_bias[i], tr.kf_sigma[i], tr.error[i], tr.control[i], tr.force[i],
                          static_cast<double>(tr.schedule[i])});
    return t;
}

/// One row per example: f0..f(n-1), label.
inline CsvTable dataset_table(const Dataset& d)
{
    CsvTable t;
    for (std::size_t i = 0; i < d.feature_size; ++i)
        t.header.push_back("f" + std::to_string(i));
    t.header.emplace_back("label");
    for (const auto& e : d.examples) {
        require(e.features.size() == d.feature_size, "dataset: example width does not match the feature size");
        auto row = e.features;
        row.push_back(static_cast<double>(e.label));
        t.rows.push_back(std::move(row));
    }
    return t;
}

inline Dataset dataset_from_table(const CsvTable& t)
{
    require(t.header.size() >= 2 && t.header.back() == "label", "dataset: last column must be 'label'");
    Dataset d;
    d.feature_size = t.header.size() - 1;
    for (const auto& r : t.rows) {
        const double l = r.back();
        require(std::isfinite(l) && l >= 0.0 && l == std::floor(l), "dataset: labels must be non-negative integers");
        d.examples.push_back({std::vector<double>(r.begin(), r.end() - 1), static_cast<std::size_t>(l)});
    }
    return d;
}

inline CsvTable train_log_table(const std::vector<TrainLogRow>& log)
{
    CsvTable t{{"epoch", "loss", "accuracy", "mean_j_cost"}, {}};
    for (const auto& r : log)
        t.rows.push_back({static_cast<double>(r.epoch), r.loss, r.accuracy, r.mean_j_cost});
    return t;
}

/// J matrix in percent with class indices as header.
inline CsvTable j_table(const ProcessGrid& g)
{
    CsvTable t;
    t.header.emplace_back("class");
    for (std::size_t i = 0; i < g.size(); ++i)
        t.header.push_back(std::to_string(i));
    for (std::size_t i = 0; i < g.size(); ++i) {
        std::vector<double> row{static_cast<double>(i)};
        row.insert(row.end(), g.j[i].begin(), g.j[i].end());
        t.rows.push_back(std::move(row));
    }
    return t;
}

} // namespace relaytune
