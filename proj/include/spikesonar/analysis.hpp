#pragma once

#include "spikesonar/lif.hpp"

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace spikesonar {

/// Thrown when no initial potential below threshold lets one input spike
/// trigger an output spike.
class NeverFiresError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Lowest initial membrane potential (quiescent currents) from which a single
/// input spike makes the neuron fire. Bisection to better than 1e-4 mV.
double min_firing_potential(const NeuronParams& params);

/// Whether one input spike delivered to (v0, 0, 0) fires before the voltage
/// peak passes.
bool single_spike_fires(const NeuronParams& params, double v0);

enum class WindowKind { SpikeToPeak, PeakToMinFire };

// Why a window ended.
enum class WindowClose { Natural, NextInput, OutputSpike, Horizon };

struct FiringWindow {
    double t_start_ms = 0.0;
    double t_end_ms = 0.0;
    WindowKind kind = WindowKind::SpikeToPeak;
    WindowClose closed_by = WindowClose::Natural;
    // Index of the input spike that opened the window.
    std::size_t input_index = 0;

    double length_ms() const { return t_end_ms - t_start_ms; }
};

const char* to_string(WindowKind kind);
const char* to_string(WindowClose close);

/// Firing windows of each input arrival. The natural windows come from the
/// free (input-free, threshold-free) response starting at the arrival step's
/// trace state; a window opens only when that response peaks at or above
/// the minimum firing potential, and it is truncated at the next input
/// arrival or output spike.
///
/// The trace must come from run() over input_train with the same params;
/// a train extending past the trace horizon is rejected.
std::vector<FiringWindow> firing_windows(std::span<const TraceRecord> trace, const NeuronParams& params,
                                         std::span<const SpikeEvent> input_train);
std::vector<FiringWindow> firing_windows(std::span<const TraceRecord> trace, const NeuronParams& params,
                                         std::span<const SpikeEvent> input_train, double min_fire_mV);

/// Per input arrival: whether it landed inside a window opened by the
/// previous arrival, and whether an output spike followed before the next
/// arrival.
struct ArrivalOutcome {
    double arrival_ms = 0.0;
    bool inside_open_window = false;
    bool output_fired = false;
};

std::vector<ArrivalOutcome> arrival_outcomes(std::span<const TraceRecord> trace, const NeuronParams& params,
                                             std::span<const SpikeEvent> input_train,
                                             std::span<const FiringWindow> windows);

struct IsiPoint {
    double t_ms = 0.0;
    double isi_ms = 0.0;

    friend bool operator==(const IsiPoint&, const IsiPoint&) = default;
};

using IsiSeries = std::vector<IsiPoint>;

/// Consecutive differences, each tagged with the later spike time.
IsiSeries isi_series(std::span<const SpikeEvent> train);

/// Input train with the encoder's tick rule at a constant rate: a spike
/// whenever 1000/rate ms have elapsed since the previous one, starting from
/// t = 0 without a spike.
SpikeTrain constant_rate_train(double rate_hz, double horizon_ms);

inline constexpr double kSustainedRunMs = 30000.0;

/// At least one output spike in the final third of a 30 s constant-rate run.
bool sustained_output(const NeuronParams& params, double rate_hz);

/// Smallest constant input rate (within 0.01 Hz) producing sustained output.
double cutoff_rate(const NeuronParams& params);

void write_windows_csv(std::ostream& out, std::span<const FiringWindow> windows);
void write_isi_csv(std::ostream& out, const IsiSeries& series);

} // namespace spikesonar
