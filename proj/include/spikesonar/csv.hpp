#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace spikesonar::csv {

// Minimal reader for the numeric CSV files this project writes: a header
// line followed by comma-separated rows. No quoting.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Index of a named column; throws std::runtime_error if missing.
    std::size_t column(std::string_view name) const;
};

Table read(std::istream& in);
Table read_file(const std::string& path);

std::vector<std::string> split(std::string_view line, char sep = ',');

double to_double(const std::string& field);

} // namespace spikesonar::csv
