#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace spikesonar {

/// Redundancy filter settings: a reading is forwarded only after max_hits
/// consecutive readings agree with it within max_error_us.
struct FilterConfig {
    unsigned max_hits = 4;
    double max_error_us = 120.0;

    void validate() const;
};

struct FilterState {
    unsigned hits = 0;
    // Stale whenever hits == 0.
    std::optional<double> first_measurement;

    friend bool operator==(const FilterState&, const FilterState&) = default;
};

struct IngestResult {
    FilterState state;
    std::optional<double> emitted;
};

/// Consumes one raw reading. The reading that completes max_hits emits the
/// reference and resets hits to 0 in the same transition.
IngestResult ingest(const FilterState& state, const FilterConfig& cfg, double raw_us);

class MeasurementFilter {
public:
    explicit MeasurementFilter(FilterConfig cfg = {});

    std::optional<double> push(double raw_us);

    const FilterState& state() const { return state_; }
    const FilterConfig& config() const { return cfg_; }

private:
    FilterConfig cfg_;
    FilterState state_;
};

struct TimedReading {
    double t_ms = 0.0;
    double value_us = 0.0;
};

/// Runs a whole timed stream through a fresh filter; emitted readings carry
/// the time of the reading that completed them.
std::vector<TimedReading> filter_series(std::span<const TimedReading> raw, const FilterConfig& cfg);

/// `t_ms,tof_us` in and out.
std::vector<TimedReading> read_readings_csv(std::istream& in);
void write_readings_csv(std::ostream& out, std::span<const TimedReading> readings);

} // namespace spikesonar
