#pragma once

#include "spikesonar/lif.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace spikesonar {

/// ToF clamp: an echo from roughly 100 cm.
inline constexpr double kMaxTofUs = 5883.0;
inline constexpr double kUsPerCm = 58.83;
inline constexpr double kMinIsiS = 0.001;
inline constexpr double kMaxIsiS = 1.001;

/// ISI in seconds for a time of flight in microseconds:
/// (min(tof, 5883) / 5883)^2 + 0.001. Throws on negative input.
double isi_from_tof(double tof_us);

double tof_from_distance(double d_cm);
double distance_from_tof(double tof_us);

/// Inverse of isi_from_tof on [0.001, 1.001] s.
double tof_from_isi(double isi_s);

struct TofMeasurement {
    double tof_us = kMaxTofUs;
    double t_recv_ms = 0.0;
};

struct EncoderState {
    double current_isi_s = kMaxIsiS;
    double last_fire_ms = 0.0;
    double default_tof_us = kMaxTofUs;

    double current_isi_ms() const { return current_isi_s * 1000.0; }
};

/// Injector source id used in emitted SpikeEvents.
inline constexpr std::uint32_t kInjectorSource = 0;

/// Emits a spike (and re-arms last_fire) when now - last_fire >= current ISI.
std::optional<SpikeEvent> tick(EncoderState& state, double now_ms);

/// Replaces the ISI from a new measurement. last_fire is left alone.
EncoderState update_tof(EncoderState state, const TofMeasurement& m);

/// Replays measurements through the encoder at 1 ms ticks over [0, horizon).
/// Each measurement takes effect on the first tick at or after t_recv_ms.
SpikeTrain encode_tof_series(std::span<const TofMeasurement> series, double horizon_ms);

std::vector<TofMeasurement> read_tof_csv(std::istream& in);
void write_spike_times_csv(std::ostream& out, std::span<const SpikeEvent> train);
SpikeTrain read_spike_times_csv(std::istream& in, std::uint32_t source = kInjectorSource);

} // namespace spikesonar
