#pragma once

#include <string>
#include <vector>

namespace mechanic {

// Text form that round-trips a double exactly (17 significant digits);
// shared by CSV emission and the config echo so golden files are stable
// byte for byte.
std::string format_double(double v);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

// Writes header + numeric rows; every cell goes through format_double.
// Throws std::runtime_error when the file cannot be opened and
// std::invalid_argument on ragged rows.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

// Reads a numeric CSV produced by write_csv (or hand-written equivalents).
// Throws ParseError with a line number on malformed cells or ragged rows.
CsvTable read_csv(const std::string& path);

// Index of a named column; throws std::invalid_argument when absent.
std::size_t column_index(const CsvTable& table, const std::string& name);

} // namespace mechanic
