#include "spikesonar/encoder.hpp"

#include "spikesonar/csv.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace spikesonar {

namespace {

// isi_s * 1000 is not exact in binary; boundaries such as 60 ms must stay
// inclusive.
constexpr double kTickEpsilonMs = 1e-9;

} // namespace

double isi_from_tof(double tof_us) {
    if (!(tof_us >= 0.0)) throw std::invalid_argument("tof must be >= 0");
    const double ratio = std::min(tof_us, kMaxTofUs) / kMaxTofUs;
    return ratio * ratio + kMinIsiS;
}

double tof_from_distance(double d_cm) {
    if (!(d_cm >= 0.0)) throw std::invalid_argument("distance must be >= 0");
    return d_cm * kUsPerCm;
}

double distance_from_tof(double tof_us) {
    if (!(tof_us >= 0.0)) throw std::invalid_argument("tof must be >= 0");
    return tof_us / kUsPerCm;
}

double tof_from_isi(double isi_s) {
    if (!(isi_s >= kMinIsiS && isi_s <= kMaxIsiS + 1e-12)) {
        throw std::invalid_argument("isi outside [0.001, 1.001] s");
    }
    return kMaxTofUs * std::sqrt(std::max(0.0, isi_s - kMinIsiS));
}

std::optional<SpikeEvent> tick(EncoderState& state, double now_ms) {
    if (now_ms - state.last_fire_ms + kTickEpsilonMs >= state.current_isi_ms()) {
        state.last_fire_ms = now_ms;
        return SpikeEvent{kInjectorSource, now_ms};
    }
    return std::nullopt;
}

EncoderState update_tof(EncoderState state, const TofMeasurement& m) {
    state.current_isi_s = isi_from_tof(m.tof_us);
    return state;
}

SpikeTrain encode_tof_series(std::span<const TofMeasurement> series, double horizon_ms) {
    EncoderState state;
    SpikeTrain train;
    std::size_t next = 0;
    const auto ticks = static_cast<std::int64_t>(std::floor(horizon_ms));
    for (std::int64_t t = 0; t < ticks; ++t) {
        const double now = static_cast<double>(t);
        while (next < series.size() && series[next].t_recv_ms <= now) {
            state = update_tof(state, series[next]);
            ++next;
        }
        if (auto spike = tick(state, now)) train.push_back(*spike);
    }
    return train;
}

std::vector<TofMeasurement> read_tof_csv(std::istream& in) {
    const auto table = csv::read(in);
    const auto t = table.column("t_ms");
    const auto tof = table.column("tof_us");
    std::vector<TofMeasurement> series;
    double previous = -std::numeric_limits<double>::infinity();
    for (const auto& row : table.rows) {
        TofMeasurement m{csv::to_double(row[tof]), csv::to_double(row[t])};
        if (m.tof_us < 0.0) throw std::invalid_argument("tof csv: negative tof");
        if (m.t_recv_ms < previous) throw std::invalid_argument("tof csv: rows not sorted by t_ms");
        previous = m.t_recv_ms;
        series.push_back(m);
    }
    return series;
}

void write_spike_times_csv(std::ostream& out, std::span<const SpikeEvent> train) {
    out << "t_ms\n";
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (const auto& s : train) out << s.t_ms << '\n';
}

SpikeTrain read_spike_times_csv(std::istream& in, std::uint32_t source) {
    const auto table = csv::read(in);
    const auto t = table.column("t_ms");
    SpikeTrain train;
    for (const auto& row : table.rows) train.push_back({source, csv::to_double(row[t])});
    return train;
}

} // namespace spikesonar
