#pragma once

#include "spikesonar/analysis.hpp"
#include "spikesonar/encoder.hpp"
#include "spikesonar/filter.hpp"
#include "spikesonar/lif.hpp"
#include "spikesonar/pipeline.hpp"

#include <filesystem>
#include <iosfwd>
#include <limits>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace spikesonar {

inline constexpr double kNoObstacle = std::numeric_limits<double>::infinity();

struct ConstantProfile {
    double distance_cm = 0.0;
};

// Linear from from_cm at the segment start to to_cm at its end.
struct RampProfile {
    double from_cm = 0.0;
    double to_cm = 0.0;
};

// before_cm until at_ms into the segment, after_cm from then on.
struct StepProfile {
    double before_cm = 0.0;
    double after_cm = 0.0;
    double at_ms = 0.0;
};

// Object at distance_cm for on_ms, then background for off_ms, repeating.
struct AppearProfile {
    double distance_cm = 0.0;
    double background_cm = kNoObstacle;
    double on_ms = 1000.0;
    double off_ms = 1000.0;
};

using DistanceProfile = std::variant<ConstantProfile, RampProfile, StepProfile, AppearProfile>;

struct ScriptSegment {
    double duration_ms = 0.0;
    DistanceProfile profile;
};

struct ScenarioScript {
    std::vector<ScriptSegment> segments;

    /// Throws std::invalid_argument on an empty script, a non-positive
    /// duration or a negative distance.
    void validate() const;
    double duration_ms() const;
    /// True distance at t; past the end the final value holds.
    double distance_at(double t_ms) const;

    static ScenarioScript constant(double distance_cm, double duration_ms);
    static ScenarioScript ramp(double from_cm, double to_cm, double duration_ms);
};

ScenarioScript parse_script(std::string_view json_text);
ScenarioScript load_script(const std::filesystem::path& path);

/// Partial documents override the defaults field by field.
NeuronParams parse_params(std::string_view json_text);
NeuronParams load_params(const std::filesystem::path& path);

struct ReportRow {
    double t_ms = 0.0;
    double dist_cm = 0.0;
    double tof_us = kMaxTofUs;
    double isi_ms = kMaxIsiS * 1000.0;
    bool in_spike = false;
    bool out_spike = false;
    Mode mode = Mode::Forward;
};

struct RunReport {
    std::vector<ReportRow> rows;
    SpikeTrain input_spikes;
    SpikeTrain output_spikes;
};

/// Sensor, filter, encoder, neuron and avoidance controller stepped together
/// on one simulated clock.
class OfflineSystem {
public:
    OfflineSystem(const NeuronParams& params, const FilterConfig& filter, const SensorConfig& sensor);

    ReportRow tick(double t_ms, double distance_cm);

    const EncoderState& encoder() const { return encoder_; }
    const LifEngine& engine() const { return engine_; }

private:
    SensorModel sensor_;
    MeasurementFilter filter_;
    EncoderState encoder_;
    LifEngine engine_;
    AvoidanceController avoidance_;
    double tof_us_ = kMaxTofUs;
};

RunReport run_scenario(const ScenarioScript& script, const NeuronParams& params, const FilterConfig& cfg = {},
                       const SensorConfig& sensor = {});

struct ThresholdOptions {
    double duration_ms = kSustainedRunMs;
    double resolution_cm = 0.1;
    FilterConfig filter;
    SensorConfig sensor;
};

/// Output in the final third of a constant-distance scenario.
bool distance_detected(double distance_cm, const NeuronParams& params, const ThresholdOptions& opts = {});

/// Bisection over constant-distance scenarios; returns the largest detected
/// distance of the final bracket. Throws std::invalid_argument unless lo is
/// detected and hi is not.
double threshold_search(const NeuronParams& params, double lo_cm, double hi_cm, const ThresholdOptions& opts = {});

struct RateSegment {
    double duration_ms = 0.0;
    double rate_hz = 0.0;
};

/// 1 Hz for 2 s, 2 Hz for 2 s, 10 Hz for 1 s.
std::vector<RateSegment> rate_gate_demo_segments();

/// Strictly periodic spikes from each segment start.
SpikeTrain rate_segments_train(std::span<const RateSegment> segments);

struct RateSegmentsRun {
    SpikeTrain input;
    RunResult neuron;
    std::vector<FiringWindow> windows;
    double min_fire_mV = 0.0;
    RunReport report;
};

/// Drives the neuron directly with a segment train (no sensor path). The
/// report's distance and ToF columns hold the values encoding each segment's
/// ISI.
RateSegmentsRun run_rate_segments(std::span<const RateSegment> segments, const NeuronParams& params);

/// Writes run.csv (`t_ms,dist_cm,tof_us,isi_ms,in_spike,out_spike,mode`) and
/// spikes.csv (`t_ms,train`). Throws std::runtime_error if unwritable.
void emit_report(const RunReport& report, const std::filesystem::path& dir);
void write_run_csv(std::ostream& out, const RunReport& report);

/// Output spikes with t in [from_ms, to_ms).
std::size_t count_spikes(const SpikeTrain& train, double from_ms, double to_ms);

} // namespace spikesonar
