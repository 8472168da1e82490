#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "fqr/errors.hpp"
#include "fqr/funcdata.hpp"

namespace fqr {
namespace csv {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string> split_row(const std::string& line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(',', start);
        if (pos == std::string::npos) {
            cells.emplace_back(trim(std::string_view(line).substr(start)));
            break;
        }
        cells.emplace_back(trim(std::string_view(line).substr(start, pos - start)));
        start = pos + 1;
    }
    return cells;
}

inline double parse_number(const std::string& cell, std::size_t row, std::size_t col,
                           const std::string& what) {
    double value = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    const auto res = std::from_chars(first, last, value);
    if (res.ec != std::errc{} || res.ptr != last)
        throw data_error(what + ": non-numeric cell '" + cell + "' at row " + std::to_string(row) +
                         ", column " + std::to_string(col));
    return value;
}

/// Fixed "%.17g" formatting so identical inputs produce byte-identical files.
inline std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct CurvesFile {
    std::vector<double> grid;
    std::vector<std::string> ids;
    std::vector<std::vector<double>> rows;
};

/// Curves CSV: header "t, t_1, ..., t_M" carrying the grid, then one curve per
/// row as "id, v_1, ..., v_M".
inline CurvesFile read_curves(std::istream& in) {
    CurvesFile file;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const std::vector<std::string> cells = split_row(line);
        if (row == 1) {
            if (cells.size() < 3 || cells[0] != "t")
                throw data_error("curves file: header must be 't, t_1, ..., t_M' (row 1)");
            for (std::size_t c = 1; c < cells.size(); ++c) {
                const double g = parse_number(cells[c], row, c + 1, "curves file");
                if (!(g >= 0.0 && g <= 1.0))
                    throw data_error("curves file: grid value " + cells[c] +
                                     " outside [0,1] at row 1, column " + std::to_string(c + 1));
                if (!file.grid.empty() && !(g > file.grid.back()))
                    throw data_error("curves file: grid not strictly increasing at row 1, column " +
                                     std::to_string(c + 1));
                file.grid.push_back(g);
            }
            continue;
        }
        if (cells.size() != file.grid.size() + 1)
            throw data_error("curves file: row " + std::to_string(row) + " has " +
                             std::to_string(cells.size() - 1) + " values, expected " +
                             std::to_string(file.grid.size()));
        if (cells[0].empty())
            throw data_error("curves file: empty id at row " + std::to_string(row) + ", column 1");
        file.ids.push_back(cells[0]);
        std::vector<double> vals(file.grid.size());
        for (std::size_t c = 1; c < cells.size(); ++c)
            vals[c - 1] = parse_number(cells[c], row, c + 1, "curves file");
        file.rows.push_back(std::move(vals));
    }
    if (file.grid.empty()) throw data_error("curves file: missing header row");
    if (file.rows.empty()) throw data_error("curves file: no curve rows");
    return file;
}

struct ResponsesFile {
    std::vector<std::string> ids;
    std::vector<double> values;
};

/// Responses CSV: rows "id, y"; an optional "id, y" header is tolerated.
inline ResponsesFile read_responses(std::istream& in) {
    ResponsesFile file;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const std::vector<std::string> cells = split_row(line);
        if (cells.size() != 2)
            throw data_error("responses file: row " + std::to_string(row) + " has " +
                             std::to_string(cells.size()) + " cells, expected 2 (id, y)");
        if (row == 1 && cells[0] == "id") continue;
        file.ids.push_back(cells[0]);
        file.values.push_back(parse_number(cells[1], row, 2, "responses file"));
    }
    if (file.ids.empty()) throw data_error("responses file: no rows");
    return file;
}

} // namespace csv

/// Assemble an uncentered dataset from curve and response streams. Response
/// rows are aligned to curve rows by id; ids must match one-to-one.
inline FunctionalDataset load_dataset(std::istream& curves_in, std::istream& responses_in) {
    const csv::CurvesFile curves = csv::read_curves(curves_in);
    const csv::ResponsesFile responses = csv::read_responses(responses_in);
    if (curves.ids.size() != responses.ids.size())
        throw data_error("dimension mismatch: " + std::to_string(curves.ids.size()) + " curves vs " +
                         std::to_string(responses.ids.size()) + " responses");
    std::map<std::string, double> by_id;
    for (std::size_t i = 0; i < responses.ids.size(); ++i) {
        if (!by_id.emplace(responses.ids[i], responses.values[i]).second)
            throw data_error("responses file: duplicate id '" + responses.ids[i] + "'");
    }
    Eigen::MatrixXd X(static_cast<Eigen::Index>(curves.rows.size()),
                      static_cast<Eigen::Index>(curves.grid.size()));
    Eigen::VectorXd y(static_cast<Eigen::Index>(curves.rows.size()));
    for (std::size_t i = 0; i < curves.rows.size(); ++i) {
        const auto it = by_id.find(curves.ids[i]);
        if (it == by_id.end()) throw data_error("no response for curve id '" + curves.ids[i] + "'");
        y[static_cast<Eigen::Index>(i)] = it->second;
        for (std::size_t j = 0; j < curves.grid.size(); ++j)
            X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = curves.rows[i][j];
    }
    return FunctionalDataset(curves.grid, std::move(X), std::move(y), curves.ids);
}

inline FunctionalDataset load_dataset_files(const std::string& curves_path,
                                            const std::string& responses_path) {
    std::ifstream curves(curves_path);
    if (!curves) throw data_error("cannot open curves file '" + curves_path + "'");
    std::ifstream responses(responses_path);
    if (!responses) throw data_error("cannot open responses file '" + responses_path + "'");
    return load_dataset(curves, responses);
}

inline void write_curves(std::ostream& out, const FunctionalDataset& ds) {
    out << "t";
    for (const double g : ds.grid()) out << "," << csv::format_number(g);
    out << "\n";
    for (Eigen::Index i = 0; i < ds.n(); ++i) {
        out << ds.ids()[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < ds.grid_size(); ++j) out << "," << csv::format_number(ds.curves()(i, j));
        out << "\n";
    }
}

inline void write_responses(std::ostream& out, const FunctionalDataset& ds) {
    out << "id,y\n";
    for (Eigen::Index i = 0; i < ds.n(); ++i)
        out << ds.ids()[static_cast<std::size_t>(i)] << "," << csv::format_number(ds.responses()[i]) << "\n";
}

} // namespace fqr
