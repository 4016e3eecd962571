#include "spikesonar/pipeline.hpp"
#include "spikesonar/scenario.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

using namespace spikesonar;

namespace {

std::string log_text(const RunLog& log) {
    std::ostringstream out;
    write_run_log_csv(out, log);
    return out.str();
}

std::vector<std::uint32_t> tof_payloads(const RunLog& log) {
    std::vector<std::uint32_t> out;
    for (const auto& e : log) {
        if (e.endpoint == Node::Robot && e.event == "tof_tx") out.push_back(static_cast<std::uint32_t>(std::stoul(e.detail)));
    }
    return out;
}

RobotEndpoint::DistanceFn constant(double d) {
    return [d](double) { return d; };
}

} // namespace

TEST(Avoidance, HoldsForFiveHundredMs) {
    AvoidanceController c;
    EXPECT_EQ(c.update(0.0), Mode::Forward);
    c.on_spike(100.0);
    EXPECT_EQ(c.mode(), Mode::Turning);
    EXPECT_EQ(c.update(599.0), Mode::Turning);
    EXPECT_EQ(c.update(600.0), Mode::Forward);
    EXPECT_EQ(c.last_spike_at(), 100.0);
}

TEST(Avoidance, RenewedSpikeExtendsTurn) {
    AvoidanceController c;
    c.on_spike(0.0);
    c.on_spike(400.0);
    EXPECT_EQ(c.update(600.0), Mode::Turning);
    EXPECT_EQ(c.update(900.0), Mode::Forward);
}

TEST(Sensor, CadenceAndConversion) {
    SensorModel s;
    EXPECT_TRUE(s.due(0.0));
    EXPECT_FALSE(s.due(10.0));
    EXPECT_TRUE(s.due(40.0));
    EXPECT_EQ(s.read(10.0), 588u);
    EXPECT_EQ(s.read(kNoObstacle), 5883u);
    EXPECT_EQ(s.read(100.0), 5883u);
    EXPECT_EQ(s.read(0.0), 0u);
    EXPECT_THROW(SensorModel(SensorConfig{0.0}), std::invalid_argument);
}

TEST(Sensor, NoiseIsBoundedAndSeeded) {
    SensorConfig cfg;
    cfg.noise = true;
    cfg.seed = 42;
    SensorModel a(cfg);
    SensorModel b(cfg);
    for (int i = 0; i < 1000; ++i) {
        const auto ra = a.read(30.0);
        ASSERT_EQ(ra, b.read(30.0));
        ASSERT_LE(std::abs(static_cast<double>(ra) - 30.0 * kUsPerCm), 0.3 * kUsPerCm + 0.5);
    }
}

TEST(Loopback, TenCentimetreObstacleTurns) {
    const auto run = run_loopback(constant(10.0), 2000.0, {});
    const auto tofs = tof_payloads(run.log);
    ASSERT_FALSE(tofs.empty());
    for (auto t : tofs) EXPECT_EQ(t, 588u);
    EXPECT_FALSE(run.robot_spikes.empty());
    EXPECT_NE(std::find(run.robot_modes.begin(), run.robot_modes.end(), Mode::Turning), run.robot_modes.end());
}

TEST(Loopback, NoisyTenCentimetres) {
    PipelineConfig cfg;
    cfg.sensor.noise = true;
    cfg.sensor.seed = 7;
    const auto run = run_loopback(constant(10.0), 2000.0, cfg);
    for (auto t : tof_payloads(run.log)) EXPECT_LE(std::abs(static_cast<double>(t) - 588.3), 0.3 * kUsPerCm + 0.5);
    EXPECT_EQ(run.robot_modes.back(), Mode::Turning);
}

TEST(Loopback, NoObstacleStaysForward) {
    const auto run = run_loopback(constant(kNoObstacle), 5000.0, {});
    const auto tofs = tof_payloads(run.log);
    ASSERT_FALSE(tofs.empty());
    for (auto t : tofs) EXPECT_EQ(t, 5883u);
    EXPECT_TRUE(run.engine_output.empty());
    EXPECT_TRUE(run.robot_spikes.empty());
    for (auto m : run.robot_modes) ASSERT_EQ(m, Mode::Forward);
}

TEST(Bridge, TofUpdatesInjectorIsi) {
    LoopbackHub hub;
    auto robot = hub.attach(Node::Robot);
    auto bridge_link = hub.attach(Node::Bridge);
    auto engine = hub.attach(Node::Engine);
    BridgeEndpoint bridge(*bridge_link);
    robot->send(Node::Bridge, wire::encode(wire::TofFrame{2294}));
    for (int t = 0; t < 2000; ++t) bridge.tick(t);
    EXPECT_NEAR(bridge.encoder().current_isi_ms(), 153.0, 0.5);
    const auto& train = bridge.injected();
    ASSERT_GE(train.size(), 3u);
    for (std::size_t i = 1; i < train.size(); ++i) EXPECT_NEAR(train[i].t_ms - train[i - 1].t_ms, 153.0, 1.0);
    EXPECT_EQ(hub.pending(Node::Engine), train.size());
}

TEST(Bridge, DefaultIsiWithoutTof) {
    PipelineConfig cfg;
    cfg.sensor.sample_period_ms = 1e9; // only the t = 0 reading, never validated
    const auto run = run_loopback(constant(10.0), 5000.0, cfg);
    EXPECT_EQ(run.tof_sent, 0u);
    ASSERT_EQ(run.injector.size(), 4u);
    for (std::size_t i = 0; i < run.injector.size(); ++i) EXPECT_EQ(run.injector[i].t_ms, 1001.0 * (i + 1));
    EXPECT_TRUE(run.engine_output.empty());
}

TEST(Bridge, SpikeStampPassesThrough) {
    LoopbackHub hub;
    auto robot = hub.attach(Node::Robot);
    auto bridge_link = hub.attach(Node::Bridge);
    auto engine = hub.attach(Node::Engine);
    BridgeEndpoint bridge(*bridge_link);
    engine->send(Node::Bridge, wire::encode(wire::SpikeFrame{123456789012ull}));
    bridge.tick(0.0);
    const auto got = robot->receive();
    ASSERT_TRUE(got);
    EXPECT_EQ(wire::decode(*got), wire::Datagram{wire::SpikeFrame{123456789012ull}});
    EXPECT_EQ(bridge.forwarded(), 1u);
}

TEST(Loopback, RobotSeesEngineStampsExactly) {
    const auto run = run_loopback(constant(20.0), 5000.0, {});
    ASSERT_FALSE(run.robot_spikes.empty());
    ASSERT_EQ(run.robot_spikes.size(), run.engine_output.size());
    for (std::size_t i = 0; i < run.robot_spikes.size(); ++i) {
        EXPECT_EQ(static_cast<double>(run.robot_spikes[i].stamp_ms), run.engine_output[i].t_ms);
    }
}

TEST(Malformed, CountedAndDropped) {
    LoopbackHub hub;
    auto robot_link = hub.attach(Node::Robot);
    auto bridge_link = hub.attach(Node::Bridge);
    auto engine_link = hub.attach(Node::Engine);
    RobotEndpoint robot(*robot_link, constant(kNoObstacle));
    BridgeEndpoint bridge(*bridge_link);
    EngineEndpoint engine(*engine_link);

    // Frames of the wrong kind or shape, sent straight through the links.
    ASSERT_TRUE(robot_link->send(Node::Bridge, wire::Bytes{0x07, 0x07}));
    ASSERT_TRUE(robot_link->send(Node::Engine, wire::encode(wire::TofFrame{100})));
    ASSERT_TRUE(bridge_link->send(Node::Robot, wire::encode(wire::TofFrame{100})));
    ASSERT_TRUE(bridge_link->send(Node::Robot, wire::Bytes{0x01, 0x02, 0x00}));

    robot.tick(0);
    bridge.tick(0);
    engine.tick(0);
    EXPECT_EQ(robot.malformed(), 2u);
    EXPECT_EQ(bridge.malformed(), 1u);
    EXPECT_EQ(engine.malformed(), 1u);
    EXPECT_TRUE(robot.received().empty());
    EXPECT_EQ(robot.mode(), Mode::Forward);

    for (int t = 1; t < 100; ++t) {
        robot.tick(t);
        bridge.tick(t);
        engine.tick(t);
    }
    EXPECT_GT(robot.tof_sent(), 0u);
}

TEST(Outbox, BuffersThenDropsOldest) {
    LoopbackHub hub;
    auto robot = hub.attach(Node::Robot);
    auto bridge_link = hub.attach(Node::Bridge);
    auto engine = hub.attach(Node::Engine);
    BridgeEndpoint bridge(*bridge_link);

    hub.set_reachable(Node::Engine, false);
    robot->send(Node::Bridge, wire::encode(wire::TofFrame{0})); // 1 ms ISI
    for (int t = 0; t < 1200; ++t) bridge.tick(t);
    const auto injected = bridge.injected().size();
    ASSERT_GT(injected, Outbox::kCapacity);
    EXPECT_EQ(bridge.outbox(Node::Engine).size(), Outbox::kCapacity);
    EXPECT_EQ(bridge.outbox(Node::Engine).dropped(), injected - Outbox::kCapacity);
    EXPECT_EQ(hub.pending(Node::Engine), 0u);

    hub.set_reachable(Node::Engine, true);
    bridge.tick(1200);
    EXPECT_EQ(bridge.outbox(Node::Engine).size(), 0u);
    const auto first = engine->receive();
    ASSERT_TRUE(first);
    // The reconnecting tick queued one more frame, evicting one more.
    const auto& all = bridge.injected();
    const auto oldest_kept = all[all.size() - Outbox::kCapacity].t_ms;
    EXPECT_EQ(wire::decode(*first), wire::Datagram{wire::SpikeFrame{static_cast<std::uint64_t>(oldest_kept)}});
}

TEST(Loss, DroppedTofStillDetects) {
    LoopbackHub hub;
    int count = 0;
    hub.set_drop_rule([&](Node from, Node, std::span<const std::uint8_t>) { return from == Node::Robot && ++count % 3 == 0; });
    const auto run = run_loopback(constant(10.0), 2000.0, {}, &hub);
    EXPECT_GT(count, 0);
    EXPECT_FALSE(run.robot_spikes.empty());
    EXPECT_EQ(run.robot_modes.back(), Mode::Turning);
}

TEST(Loss, AllSpikesLostKeepsForward) {
    LoopbackHub hub;
    hub.set_drop_rule([](Node, Node to, std::span<const std::uint8_t>) { return to == Node::Robot; });
    const auto run = run_loopback(constant(10.0), 2000.0, {}, &hub);
    EXPECT_FALSE(run.engine_output.empty());
    EXPECT_TRUE(run.robot_spikes.empty());
    for (auto m : run.robot_modes) ASSERT_EQ(m, Mode::Forward);
}

TEST(Loopback, Deterministic) {
    PipelineConfig cfg;
    cfg.sensor.noise = true;
    const auto script = ScenarioScript::ramp(10.0, 60.0, 10000.0);
    auto distance = [&](double t) { return script.distance_at(t); };
    const auto a = run_loopback(distance, 10000.0, cfg);
    const auto b = run_loopback(distance, 10000.0, cfg);
    EXPECT_EQ(a.robot_spikes, b.robot_spikes);
    EXPECT_EQ(log_text(a.log), log_text(b.log));
}

TEST(Loopback, MatchesOfflineUpToConstantShift) {
    for (const auto& script : {ScenarioScript::ramp(10.0, 60.0, 20000.0), ScenarioScript::constant(25.0, 10000.0)}) {
        const auto offline = run_scenario(script, NeuronParams{});
        const auto online = run_loopback([&](double t) { return script.distance_at(t); }, script.duration_ms(), {});
        ASSERT_FALSE(offline.output_spikes.empty());
        // Spikes too close to the end may not have reached the robot yet.
        std::vector<double> expected;
        for (const auto& s : offline.output_spikes) {
            if (s.t_ms + 5.0 < script.duration_ms()) expected.push_back(s.t_ms);
        }
        ASSERT_GE(online.robot_spikes.size(), expected.size());
        const double shift = online.robot_spikes[0].received_ms - expected[0];
        EXPECT_GE(shift, 0.0);
        EXPECT_LE(shift, 5.0);
        for (std::size_t i = 0; i < expected.size(); ++i) {
            EXPECT_EQ(online.robot_spikes[i].received_ms - expected[i], shift) << i;
        }
    }
}

TEST(Loopback, BoundedReaction) {
    const double bound = 4 * 20.0 + isi_from_tof(588.0) * 1000.0 + 5.0;
    for (double appear = 1000.0; appear < 1400.0; appear += 7.0) {
        auto distance = [appear](double t) { return t < appear ? kNoObstacle : 10.0; };
        const auto run = run_loopback(distance, appear + 500.0, {});
        ASSERT_FALSE(run.robot_spikes.empty()) << appear;
        EXPECT_LE(run.robot_spikes.front().received_ms - appear, bound) << "appearing at " << appear;
    }
}

TEST(Udp, RealSocketsCarryTheLoop) {
    const auto run = run_udp(constant(10.0), 1500.0, {}, {0, 0, 0});
    EXPECT_GT(run.tof_sent, 0u);
    EXPECT_FALSE(run.engine_output.empty());
    ASSERT_FALSE(run.robot_spikes.empty());
    std::set<double> fired;
    for (const auto& s : run.engine_output) fired.insert(s.t_ms);
    for (const auto& r : run.robot_spikes) EXPECT_TRUE(fired.count(static_cast<double>(r.stamp_ms)));
    EXPECT_EQ(run.malformed, 0u);
}
