#include "spikesonar/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>
#include <thread>

namespace spikesonar {

const char* to_string(Mode mode) { return mode == Mode::Forward ? "forward" : "turning"; }

void AvoidanceController::on_spike(double t_ms) {
    last_spike_ = t_ms;
    mode_ = Mode::Turning;
}

Mode AvoidanceController::update(double now_ms) {
    if (mode_ == Mode::Turning && last_spike_ && now_ms - *last_spike_ >= kAvoidanceHoldMs) {
        mode_ = Mode::Forward;
    }
    return mode_;
}

SensorModel::SensorModel(SensorConfig cfg) : cfg_(cfg), rng_(cfg.seed) {
    if (!(cfg_.sample_period_ms > 0.0)) throw std::invalid_argument("sensor sample period must be > 0");
}

bool SensorModel::due(double now_ms) const {
    const double phase = std::fmod(now_ms, cfg_.sample_period_ms);
    return phase < 1e-9 || cfg_.sample_period_ms - phase < 1e-9;
}

std::uint32_t SensorModel::read(double distance_cm) {
    if (!std::isfinite(distance_cm)) return static_cast<std::uint32_t>(kMaxTofUs);
    double d = distance_cm;
    if (cfg_.noise) {
        std::uniform_real_distribution<double> jitter(-cfg_.noise_cm, cfg_.noise_cm);
        d += jitter(rng_);
    }
    d = std::max(d, 0.0);
    const double tof = std::round(tof_from_distance(d));
    return static_cast<std::uint32_t>(std::min(tof, 4.0e9));
}

void write_run_log_csv(std::ostream& out, const RunLog& log) {
    out << "t_ms,endpoint,event,detail\n";
    for (const auto& e : log) out << e.t_ms << ',' << to_string(e.endpoint) << ',' << e.event << ',' << e.detail << '\n';
}

RobotEndpoint::RobotEndpoint(Transport& link, DistanceFn distance, FilterConfig filter, SensorConfig sensor,
                             MotionFn motion)
    : link_(link), distance_(std::move(distance)), motion_(std::move(motion)), filter_(filter), sensor_(sensor) {}

void RobotEndpoint::tick(double now_ms) {
    while (auto bytes = link_.receive()) {
        const auto frame = wire::decode(*bytes);
        const auto* spike = frame ? std::get_if<wire::SpikeFrame>(&*frame) : nullptr;
        if (!spike) {
            ++malformed_;
            log_.push_back({now_ms, Node::Robot, "malformed", std::to_string(bytes->size()) + " bytes"});
            continue;
        }
        received_.push_back({spike->t_ms, now_ms});
        avoidance_.on_spike(now_ms);
        log_.push_back({now_ms, Node::Robot, "spike_rx", std::to_string(spike->t_ms)});
    }

    const Mode mode = avoidance_.update(now_ms);
    if (mode != last_mode_) {
        log_.push_back({now_ms, Node::Robot, "mode", to_string(mode)});
        last_mode_ = mode;
    }

    if (sensor_.due(now_ms)) {
        const auto raw = sensor_.read(distance_(now_ms));
        if (auto validated = filter_.push(static_cast<double>(raw))) {
            const auto frame = wire::encode(wire::TofFrame{static_cast<std::uint32_t>(*validated)});
            if (link_.send(Node::Bridge, frame)) ++tof_sent_;
            log_.push_back({now_ms, Node::Robot, "tof_tx", std::to_string(static_cast<std::uint32_t>(*validated))});
        }
    }

    if (motion_) motion_(now_ms, mode);
}

void Outbox::push(wire::Bytes frame) {
    if (queue_.size() >= kCapacity) {
        queue_.pop_front();
        ++dropped_;
    }
    queue_.push_back(std::move(frame));
}

void Outbox::flush(Transport& link, Node to) {
    while (!queue_.empty()) {
        if (!link.send(to, queue_.front())) return;
        queue_.pop_front();
    }
}

BridgeEndpoint::BridgeEndpoint(Transport& link, EncoderState encoder) : link_(link), encoder_(encoder) {}

void BridgeEndpoint::tick(double now_ms) {
    auto& to_robot = outboxes_[static_cast<std::size_t>(Node::Robot)];
    auto& to_engine = outboxes_[static_cast<std::size_t>(Node::Engine)];

    while (auto bytes = link_.receive()) {
        const auto frame = wire::decode(*bytes);
        if (!frame) {
            ++malformed_;
            log_.push_back({now_ms, Node::Bridge, "malformed", std::to_string(bytes->size()) + " bytes"});
            continue;
        }
        if (const auto* tof = std::get_if<wire::TofFrame>(&*frame)) {
            encoder_ = update_tof(encoder_, TofMeasurement{static_cast<double>(tof->tof_us), now_ms});
            log_.push_back({now_ms, Node::Bridge, "tof_rx", std::to_string(tof->tof_us)});
        } else {
            const auto& spike = std::get<wire::SpikeFrame>(*frame);
            to_robot.push(wire::encode(spike));
            ++forwarded_;
            log_.push_back({now_ms, Node::Bridge, "spike_fwd", std::to_string(spike.t_ms)});
        }
    }

    if (auto spike = spikesonar::tick(encoder_, now_ms)) {
        injected_.push_back(*spike);
        to_engine.push(wire::encode(wire::SpikeFrame{static_cast<std::uint64_t>(std::llround(spike->t_ms))}));
        log_.push_back({now_ms, Node::Bridge, "inject", std::to_string(encoder_.current_isi_ms())});
    }

    to_engine.flush(link_, Node::Engine);
    to_robot.flush(link_, Node::Robot);
}

EngineEndpoint::EngineEndpoint(Transport& link, NeuronParams params) : link_(link), engine_(params) {}

void EngineEndpoint::tick(double now_ms) {
    while (auto bytes = link_.receive()) {
        const auto frame = wire::decode(*bytes);
        const auto* spike = frame ? std::get_if<wire::SpikeFrame>(&*frame) : nullptr;
        if (!spike) {
            ++malformed_;
            log_.push_back({now_ms, Node::Engine, "malformed", std::to_string(bytes->size()) + " bytes"});
            continue;
        }
        engine_.deliver(static_cast<double>(spike->t_ms));
    }

    while (engine_.now_ms() <= now_ms) {
        const auto record = engine_.advance();
        if (!record.fired) continue;
        output_.push_back({LifEngine::kOutputSource, record.t_ms});
        const auto stamp = static_cast<std::uint64_t>(std::llround(record.t_ms));
        link_.send(Node::Bridge, wire::encode(wire::SpikeFrame{stamp}));
        log_.push_back({record.t_ms, Node::Engine, "fire", std::to_string(stamp)});
    }
}

namespace {

PipelineRun collect(const RobotEndpoint& robot, const BridgeEndpoint& bridge, const EngineEndpoint& engine) {
    PipelineRun run;
    run.robot_spikes = robot.received();
    run.injector = bridge.injected();
    run.engine_output = engine.output();
    run.malformed = robot.malformed() + bridge.malformed() + engine.malformed();
    run.tof_sent = robot.tof_sent();
    for (const auto* log : {&robot.log(), &bridge.log(), &engine.log()}) {
        run.log.insert(run.log.end(), log->begin(), log->end());
    }
    std::stable_sort(run.log.begin(), run.log.end(),
                     [](const LogEntry& a, const LogEntry& b) { return a.t_ms < b.t_ms; });
    return run;
}

} // namespace

PipelineRun run_loopback(const RobotEndpoint::DistanceFn& distance, double horizon_ms, const PipelineConfig& cfg,
                         LoopbackHub* hub) {
    LoopbackHub local;
    LoopbackHub& switchboard = hub ? *hub : local;
    auto robot_link = switchboard.attach(Node::Robot);
    auto bridge_link = switchboard.attach(Node::Bridge);
    auto engine_link = switchboard.attach(Node::Engine);

    RobotEndpoint robot(*robot_link, distance, cfg.filter, cfg.sensor);
    BridgeEndpoint bridge(*bridge_link);
    EngineEndpoint engine(*engine_link, cfg.params);

    std::vector<Mode> modes;
    const auto ticks = static_cast<std::int64_t>(std::floor(horizon_ms));
    modes.reserve(static_cast<std::size_t>(std::max<std::int64_t>(ticks, 0)));
    for (std::int64_t t = 0; t < ticks; ++t) {
        const double now = static_cast<double>(t);
        robot.tick(now);
        bridge.tick(now);
        engine.tick(now);
        modes.push_back(robot.mode());
    }
    auto run = collect(robot, bridge, engine);
    run.robot_modes = std::move(modes);
    return run;
}

PipelineRun run_udp(const RobotEndpoint::DistanceFn& distance, double horizon_ms, const PipelineConfig& cfg,
                    std::array<std::uint16_t, kNodeCount> ports) {
    UdpTransport robot_link(Node::Robot, ports[0]);
    UdpTransport bridge_link(Node::Bridge, ports[1]);
    UdpTransport engine_link(Node::Engine, ports[2]);
    const std::array<std::uint16_t, kNodeCount> bound{robot_link.bound_port(), bridge_link.bound_port(),
                                                      engine_link.bound_port()};
    for (auto* link : {&robot_link, &bridge_link, &engine_link}) {
        for (std::size_t n = 0; n < kNodeCount; ++n) link->set_peer_port(static_cast<Node>(n), bound[n]);
    }

    RobotEndpoint robot(robot_link, distance, cfg.filter, cfg.sensor);
    BridgeEndpoint bridge(bridge_link);
    EngineEndpoint engine(engine_link, cfg.params);

    using clock = std::chrono::steady_clock;
    const auto start = clock::now() + std::chrono::milliseconds(20);
    const auto ticks = static_cast<std::int64_t>(std::floor(horizon_ms));

    auto loop = [&](auto& endpoint) {
        for (std::int64_t t = 0; t < ticks; ++t) {
            std::this_thread::sleep_until(start + std::chrono::milliseconds(t));
            endpoint.tick(static_cast<double>(t));
        }
    };

    {
        std::jthread robot_thread([&] { loop(robot); });
        std::jthread bridge_thread([&] { loop(bridge); });
        std::jthread engine_thread([&] { loop(engine); });
    }
    return collect(robot, bridge, engine);
}

} // namespace spikesonar
