#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "otbe/errors.hpp"
#include "otbe/matstats.hpp"

namespace otbe {

// Dialect: comma-separated, mandatory header row, UTF-8, '.' decimal point,
// no quoting. Empty cells are an error; the method has no missing-data story.

// Round-trip-exact decimal formatting for doubles.
inline std::string format_double(double v) {
    char buf[32];
    const int len = std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf, static_cast<std::size_t>(len));
}

inline double parse_double(std::string_view s, std::string_view where) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw SchemaError("cannot parse '" + std::string(s) + "' as a number in " +
                          std::string(where));
    return v;
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    Index column(std::string_view name) const {
        for (std::size_t j = 0; j < header.size(); ++j)
            if (header[j] == name) return static_cast<Index>(j);
        throw SchemaError("missing column '" + std::string(name) + "'");
    }

    Index n_rows() const { return static_cast<Index>(rows.size()); }
    Index n_cols() const { return static_cast<Index>(header.size()); }
};

namespace detail {

inline std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return out;
}

} // namespace detail

inline CsvTable read_csv(std::istream& in) {
    CsvTable table;
    std::string line;
    if (!std::getline(in, line)) throw SchemaError("CSV input is empty, header row required");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    table.header = detail::split_line(line);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells = detail::split_line(line);
        if (cells.size() != table.header.size())
            throw SchemaError("line " + std::to_string(line_no) + " has " +
                              std::to_string(cells.size()) + " cells, expected " +
                              std::to_string(table.header.size()));
        for (std::size_t j = 0; j < cells.size(); ++j)
            if (cells[j].empty())
                throw SchemaError("missing value at line " + std::to_string(line_no) +
                                  ", column '" + table.header[j] + "'");
        table.rows.push_back(std::move(cells));
    }
    return table;
}

inline CsvTable read_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open '" + path + "'");
    return read_csv(in);
}

inline void write_csv(std::ostream& out, const CsvTable& table) {
    for (std::size_t j = 0; j < table.header.size(); ++j)
        out << (j ? "," : "") << table.header[j];
    out << "\n";
    for (const auto& row : table.rows) {
        for (std::size_t j = 0; j < row.size(); ++j) out << (j ? "," : "") << row[j];
        out << "\n";
    }
}

inline void write_csv_file(const std::string& path, const CsvTable& table) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw SchemaError("cannot write '" + path + "'");
    write_csv(out, table);
}

// Extracts the named columns as a numeric matrix, row order preserved.
inline Matrix numeric_columns(const CsvTable& table, const std::vector<Index>& cols) {
    Matrix m(table.n_rows(), static_cast<Index>(cols.size()));
    for (Index i = 0; i < table.n_rows(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j)
            m(i, static_cast<Index>(j)) = parse_double(
                table.rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(cols[j])],
                "column '" + table.header[static_cast<std::size_t>(cols[j])] + "'");
    return m;
}

inline CsvTable matrix_to_table(const std::vector<std::string>& header, const Matrix& values) {
    CsvTable t;
    t.header = header;
    t.rows.reserve(static_cast<std::size_t>(values.rows()));
    for (Index i = 0; i < values.rows(); ++i) {
        std::vector<std::string> row;
        row.reserve(static_cast<std::size_t>(values.cols()));
        for (Index j = 0; j < values.cols(); ++j) row.push_back(format_double(values(i, j)));
        t.rows.push_back(std::move(row));
    }
    return t;
}

} // namespace otbe
