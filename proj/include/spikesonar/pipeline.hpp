#pragma once

#include "spikesonar/encoder.hpp"
#include "spikesonar/filter.hpp"
#include "spikesonar/lif.hpp"
#include "spikesonar/transport.hpp"

#include <array>
#include <cstdint>
#include <deque>
#include <functional>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

namespace spikesonar {

// Turning continues until no spike has been received for this long.
inline constexpr double kAvoidanceHoldMs = 500.0;

enum class Mode { Forward, Turning };

const char* to_string(Mode mode);

class AvoidanceController {
public:
    void on_spike(double t_ms);
    Mode update(double now_ms);

    Mode mode() const { return mode_; }
    std::optional<double> last_spike_at() const { return last_spike_; }

private:
    Mode mode_ = Mode::Forward;
    std::optional<double> last_spike_;
};

struct SensorConfig {
    double sample_period_ms = 20.0;
    // Uniform +-noise_cm on the true distance when enabled.
    bool noise = false;
    double noise_cm = 0.3;
    std::uint64_t seed = 1;
};

/// Emulated ultrasonic ranger: integer microsecond readings, 5883 us when the
/// echo never returns (non-finite distance).
class SensorModel {
public:
    explicit SensorModel(SensorConfig cfg = {});

    bool due(double now_ms) const;
    std::uint32_t read(double distance_cm);

    const SensorConfig& config() const { return cfg_; }

private:
    SensorConfig cfg_;
    std::mt19937_64 rng_;
};

struct LogEntry {
    double t_ms = 0.0;
    Node endpoint = Node::Robot;
    std::string event;
    std::string detail;
};

using RunLog = std::vector<LogEntry>;

/// `t_ms,endpoint,event,detail`
void write_run_log_csv(std::ostream& out, const RunLog& log);

struct ReceivedSpike {
    std::uint64_t stamp_ms = 0;
    double received_ms = 0.0;

    friend bool operator==(const ReceivedSpike&, const ReceivedSpike&) = default;
};

/// Robot side: samples the ranger, filters, sends TOF frames, and turns right
/// while SPIKE frames keep arriving.
class RobotEndpoint {
public:
    using DistanceFn = std::function<double(double now_ms)>;
    using MotionFn = std::function<void(double now_ms, Mode mode)>;

    RobotEndpoint(Transport& link, DistanceFn distance, FilterConfig filter = {}, SensorConfig sensor = {},
                  MotionFn motion = {});

    void tick(double now_ms);

    Mode mode() const { return avoidance_.mode(); }
    const std::vector<ReceivedSpike>& received() const { return received_; }
    std::size_t malformed() const { return malformed_; }
    std::size_t tof_sent() const { return tof_sent_; }
    const RunLog& log() const { return log_; }

private:
    Transport& link_;
    DistanceFn distance_;
    MotionFn motion_;
    MeasurementFilter filter_;
    SensorModel sensor_;
    AvoidanceController avoidance_;
    Mode last_mode_ = Mode::Forward;
    std::vector<ReceivedSpike> received_;
    std::size_t malformed_ = 0;
    std::size_t tof_sent_ = 0;
    RunLog log_;
};

/// Bounded per-peer queue of frames waiting for an unreachable peer.
class Outbox {
public:
    static constexpr std::size_t kCapacity = 1024;

    void push(wire::Bytes frame);
    /// Sends queued frames in order until one fails.
    void flush(Transport& link, Node to);

    std::size_t size() const { return queue_.size(); }
    std::size_t dropped() const { return dropped_; }

private:
    std::deque<wire::Bytes> queue_;
    std::size_t dropped_ = 0;
};

/// Computer side: hosts the rate encoder as the live injector and relays
/// output spikes back to the robot.
class BridgeEndpoint {
public:
    explicit BridgeEndpoint(Transport& link, EncoderState encoder = {});

    void tick(double now_ms);

    const EncoderState& encoder() const { return encoder_; }
    const SpikeTrain& injected() const { return injected_; }
    std::size_t forwarded() const { return forwarded_; }
    std::size_t malformed() const { return malformed_; }
    const Outbox& outbox(Node to) const { return outboxes_[static_cast<std::size_t>(to)]; }
    const RunLog& log() const { return log_; }

private:
    Transport& link_;
    EncoderState encoder_;
    std::array<Outbox, kNodeCount> outboxes_;
    SpikeTrain injected_;
    std::size_t forwarded_ = 0;
    std::size_t malformed_ = 0;
    RunLog log_;
};

/// Neuromorphic side: one LIF output neuron fed by the injector through a
/// single excitatory synapse.
class EngineEndpoint {
public:
    EngineEndpoint(Transport& link, NeuronParams params = {});

    /// Runs every step up to and including now_ms.
    void tick(double now_ms);

    const SpikeTrain& output() const { return output_; }
    std::size_t malformed() const { return malformed_; }
    const LifEngine& engine() const { return engine_; }
    const RunLog& log() const { return log_; }

private:
    Transport& link_;
    LifEngine engine_;
    SpikeTrain output_;
    std::size_t malformed_ = 0;
    RunLog log_;
};

struct PipelineConfig {
    NeuronParams params;
    FilterConfig filter;
    SensorConfig sensor;
};

struct PipelineRun {
    RunLog log;
    std::vector<ReceivedSpike> robot_spikes;
    SpikeTrain injector;
    SpikeTrain engine_output;
    std::vector<Mode> robot_modes; // per tick, sim-clock runs only
    std::size_t malformed = 0;
    std::size_t tof_sent = 0;
};

/// All three endpoints on one thread over an in-memory hub; each tick runs
/// robot, bridge, then engine.
PipelineRun run_loopback(const RobotEndpoint::DistanceFn& distance, double horizon_ms, const PipelineConfig& cfg,
                         LoopbackHub* hub = nullptr);

/// Three threads exchanging UDP datagrams on 127.0.0.1 in wall-clock time.
/// Ports are robot, bridge, engine.
PipelineRun run_udp(const RobotEndpoint::DistanceFn& distance, double horizon_ms, const PipelineConfig& cfg,
                    std::array<std::uint16_t, kNodeCount> ports);

} // namespace spikesonar
