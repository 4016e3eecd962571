#include "spikesonar/filter.hpp"

#include "spikesonar/csv.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace spikesonar {

void FilterConfig::validate() const {
    if (max_hits < 1) throw std::invalid_argument("FilterConfig: max_hits must be >= 1");
    if (!(max_error_us >= 0.0)) throw std::invalid_argument("FilterConfig: max_error must be >= 0");
}

IngestResult ingest(const FilterState& state, const FilterConfig& cfg, double raw_us) {
    if (!(raw_us >= 0.0)) throw std::invalid_argument("raw measurement must be >= 0");

    FilterState next = state;
    if (next.hits == 0) {
        next.first_measurement = raw_us;
        next.hits = 1;
    } else if (std::abs(raw_us - *next.first_measurement) <= cfg.max_error_us) {
        ++next.hits;
    } else {
        next.first_measurement = raw_us;
        next.hits = 1;
    }

    IngestResult result{next, std::nullopt};
    if (result.state.hits >= cfg.max_hits) {
        result.emitted = result.state.first_measurement;
        result.state.hits = 0;
    }
    return result;
}

MeasurementFilter::MeasurementFilter(FilterConfig cfg) : cfg_(cfg) { cfg_.validate(); }

std::optional<double> MeasurementFilter::push(double raw_us) {
    auto [next, emitted] = ingest(state_, cfg_, raw_us);
    state_ = next;
    return emitted;
}

std::vector<TimedReading> filter_series(std::span<const TimedReading> raw, const FilterConfig& cfg) {
    MeasurementFilter filter(cfg);
    std::vector<TimedReading> out;
    for (const auto& r : raw) {
        if (auto v = filter.push(r.value_us)) out.push_back({r.t_ms, *v});
    }
    return out;
}

std::vector<TimedReading> read_readings_csv(std::istream& in) {
    const auto table = csv::read(in);
    const auto t = table.column("t_ms");
    const auto tof = table.column("tof_us");
    std::vector<TimedReading> readings;
    readings.reserve(table.rows.size());
    for (const auto& row : table.rows) readings.push_back({csv::to_double(row[t]), csv::to_double(row[tof])});
    return readings;
}

void write_readings_csv(std::ostream& out, std::span<const TimedReading> readings) {
    out << "t_ms,tof_us\n";
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (const auto& r : readings) out << r.t_ms << ',' << r.value_us << '\n';
}

} // namespace spikesonar
