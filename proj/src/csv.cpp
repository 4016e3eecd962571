#include "spikesonar/csv.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <stdexcept>

namespace spikesonar::csv {

std::size_t Table::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    throw std::runtime_error("csv: missing column '" + std::string(name) + "'");
}

std::vector<std::string> split(std::string_view line, char sep) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(sep, start);
        auto field = line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
        while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.remove_suffix(1);
        while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
        fields.emplace_back(field);
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return fields;
}

Table read(std::istream& in) {
    Table table;
    std::string line;
    bool have_header = false;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        auto fields = split(line);
        if (!have_header) {
            table.header = std::move(fields);
            have_header = true;
            continue;
        }
        if (fields.size() != table.header.size()) {
            throw std::runtime_error("csv: row has " + std::to_string(fields.size()) + " fields, header has " +
                                     std::to_string(table.header.size()));
        }
        table.rows.push_back(std::move(fields));
    }
    if (!have_header) throw std::runtime_error("csv: empty input");
    return table;
}

Table read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("csv: cannot open " + path);
    return read(in);
}

double to_double(const std::string& field) {
    // from_chars for double is available in libstdc++ 11
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc{} || ptr != field.data() + field.size()) {
        throw std::runtime_error("csv: not a number: '" + field + "'");
    }
    return value;
}

} // namespace spikesonar::csv
