#include "mechanic/csv.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "mechanic/errors.hpp"

namespace mechanic {

std::string format_double(double v) {
    char buf[40];
    const int len = std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf, static_cast<std::size_t>(len));
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
    for (const auto& row : rows)
        if (row.size() != header.size())
            throw std::invalid_argument("write_csv: row width does not match header");

    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("write_csv: cannot open " + path);

    std::string line;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) line += ',';
        line += header[i];
    }
    line += '\n';
    out << line;

    for (const auto& row : rows) {
        line.clear();
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) line += ',';
            line += format_double(row[i]);
        }
        line += '\n';
        out << line;
    }
    if (!out)
        throw std::runtime_error("write_csv: write failed for " + path);
}

namespace {

std::vector<std::string> split_cells(const std::string& line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            cells.push_back(line.substr(start));
            return cells;
        }
        cells.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

} // namespace

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("read_csv: cannot open " + path);

    CsvTable table;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        if (table.header.empty()) {
            table.header = split_cells(line);
            continue;
        }
        const auto cells = split_cells(line);
        if (cells.size() != table.header.size())
            throw ParseError("read_csv: expected " + std::to_string(table.header.size()) +
                                 " cells, got " + std::to_string(cells.size()),
                             line_no);
        std::vector<double> row(cells.size());
        for (std::size_t i = 0; i < cells.size(); ++i) {
            const char* first = cells[i].data();
            const char* last = first + cells[i].size();
            const auto res = std::from_chars(first, last, row[i]);
            if (res.ec != std::errc{} || res.ptr != last)
                throw ParseError("read_csv: bad number '" + cells[i] + "'", line_no);
        }
        table.rows.push_back(std::move(row));
    }
    if (table.header.empty())
        throw ParseError("read_csv: empty file", 1);
    return table;
}

std::size_t column_index(const CsvTable& table, const std::string& name) {
    for (std::size_t i = 0; i < table.header.size(); ++i)
        if (table.header[i] == name)
            return i;
    throw std::invalid_argument("column_index: no column named '" + name + "'");
}

} // namespace mechanic
