#include "spikesonar/scenario.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

using namespace spikesonar;

namespace {

// Largest gap between consecutive output spikes, with its end points.
std::pair<double, double> longest_gap(const SpikeTrain& train) {
    std::pair<double, double> best{0.0, 0.0};
    for (std::size_t i = 1; i < train.size(); ++i) {
        if (train[i].t_ms - train[i - 1].t_ms > best.second - best.first) best = {train[i - 1].t_ms, train[i].t_ms};
    }
    return best;
}

} // namespace

TEST(Script, ProfilesAndValidation) {
    const auto script = parse_script(R"({"segments": [
        {"duration_ms": 1000, "profile": "constant", "distance_cm": 20},
        {"duration_ms": 1000, "profile": "ramp", "from_cm": 20, "to_cm": 40},
        {"duration_ms": 1000, "profile": "step", "before_cm": 30, "after_cm": null, "at_ms": 500},
        {"duration_ms": 1000, "profile": "appear", "distance_cm": 25, "on_ms": 200, "off_ms": 300}
    ]})");
    EXPECT_EQ(script.duration_ms(), 4000.0);
    EXPECT_EQ(script.distance_at(500.0), 20.0);
    EXPECT_DOUBLE_EQ(script.distance_at(1500.0), 30.0);
    EXPECT_EQ(script.distance_at(2400.0), 30.0);
    EXPECT_EQ(script.distance_at(2600.0), kNoObstacle);
    EXPECT_EQ(script.distance_at(3100.0), 25.0);
    EXPECT_EQ(script.distance_at(3300.0), kNoObstacle);
    EXPECT_EQ(script.distance_at(3600.0), 25.0);

    EXPECT_THROW(ScenarioScript{}.validate(), std::invalid_argument);
    EXPECT_THROW(parse_script(R"({"segments": []})"), std::invalid_argument);
    EXPECT_THROW(parse_script(R"({"segments": [{"duration_ms": 0, "profile": "constant", "distance_cm": 1}]})"),
                 std::invalid_argument);
    EXPECT_THROW(parse_script(R"({"segments": [{"duration_ms": 10, "profile": "constant", "distance_cm": -1}]})"),
                 std::invalid_argument);
    EXPECT_THROW(parse_script(R"({"segments": [{"duration_ms": 10, "profile": "spiral"}]})"), std::invalid_argument);
}

TEST(Script, ParamsOverrideFieldByField) {
    const auto p = parse_params(R"({"v_thresh": -50.0, "tau_m": 20})");
    EXPECT_EQ(p.v_thresh, -50.0);
    EXPECT_EQ(p.tau_m, 20.0);
    EXPECT_EQ(p.c_m, 1.0);
    EXPECT_EQ(p.syn_delay, 1);
    EXPECT_THROW(parse_params(R"({"c_m": 0})"), std::invalid_argument);
}

TEST(RunScenario, ThirtyNineCentimetresFires) {
    const auto report = run_scenario(ScenarioScript::constant(39.0, 20000.0), NeuronParams{});
    // Output present in every 2 s window of the steady state.
    for (double t = 4000.0; t < 20000.0; t += 2000.0) {
        EXPECT_GT(count_spikes(report.output_spikes, t, t + 2000.0), 0u) << t;
    }
}

TEST(RunScenario, HundredCentimetresIsSilent) {
    const auto report = run_scenario(ScenarioScript::constant(100.0, 20000.0), NeuronParams{});
    EXPECT_TRUE(report.output_spikes.empty());
    for (const auto& row : report.rows) ASSERT_EQ(row.tof_us, 5883.0);
}

TEST(RunScenario, InitialTofIsTheDefault) {
    const auto report = run_scenario(ScenarioScript::constant(20.0, 200.0), NeuronParams{});
    EXPECT_EQ(report.rows.front().tof_us, 5883.0);
    EXPECT_DOUBLE_EQ(report.rows.front().isi_ms, 1001.0);
}

TEST(RunScenario, RampHasOneSilentRegion) {
    const auto script = parse_script(R"({"segments": [
        {"duration_ms": 30000, "profile": "ramp", "from_cm": 10, "to_cm": 60},
        {"duration_ms": 30000, "profile": "ramp", "from_cm": 60, "to_cm": 10}]})");
    const auto report = run_scenario(script, NeuronParams{});
    const auto& out = report.output_spikes;
    ASSERT_GT(out.size(), 10u);

    std::size_t long_gaps = 0;
    for (std::size_t i = 1; i < out.size(); ++i) long_gaps += out[i].t_ms - out[i - 1].t_ms > 2000.0;
    EXPECT_EQ(long_gaps, 1u);

    const auto [from, to] = longest_gap(out);
    // The gap covers the span farther than 39.5 cm and firing resumes on the way down.
    EXPECT_LT(from, 17700.0);
    EXPECT_GT(to, 42300.0);
    EXPECT_GT(from, 15400.0);
    EXPECT_LT(to, 44600.0);
    EXPECT_LT(to, 60000.0);
}

TEST(RunScenario, RequiresUnitTimestep) {
    NeuronParams p;
    p.dt = 0.5;
    EXPECT_THROW(run_scenario(ScenarioScript::constant(20.0, 100.0), p), std::invalid_argument);
}

TEST(RunScenario, RateIncreasesAsDistanceShrinks) {
    std::vector<std::size_t> counts;
    for (double d : {10.0, 20.0, 30.0}) {
        const auto r = run_scenario(ScenarioScript::constant(d, 20000.0), NeuronParams{});
        counts.push_back(count_spikes(r.output_spikes, 2000.0, 20000.0));
    }
    EXPECT_GT(counts[0], counts[1]);
    EXPECT_GT(counts[1], counts[2]);
}

TEST(RunScenario, AppearingObjectAtTwentyFive) {
    const auto script = parse_script(R"({"segments": [
        {"duration_ms": 20000, "profile": "appear", "distance_cm": 25, "on_ms": 5000, "off_ms": 5000}]})");
    const auto report = run_scenario(script, NeuronParams{});
    for (const auto& row : report.rows) {
        if (row.dist_cm == 25.0 && row.tof_us != 5883.0) {
            ASSERT_GE(row.isi_ms, 60.0);
            ASSERT_LE(row.isi_ms, 67.0);
        }
    }
    // Steady state of each "on" phase, after a 1 s charging transient.
    for (double on : {0.0, 10000.0}) {
        SpikeTrain phase;
        for (const auto& s : report.output_spikes) {
            if (s.t_ms >= on + 1000.0 && s.t_ms < on + 5000.0) phase.push_back(s);
        }
        const auto isis = isi_series(phase);
        ASSERT_FALSE(isis.empty());
        for (const auto& p : isis) {
            EXPECT_GE(p.isi_ms, 60.0);
            EXPECT_LE(p.isi_ms, 130.0);
        }
    }
}

TEST(Threshold, DefaultBracket) {
    const double t = threshold_search(NeuronParams{}, 10.0, 100.0);
    EXPECT_GE(t, 39.0);
    EXPECT_LE(t, 39.5);
    EXPECT_TRUE(distance_detected(39.0, NeuronParams{}));
    EXPECT_FALSE(distance_detected(39.5, NeuronParams{}));
}

TEST(Threshold, HarderThresholdDetectsCloser) {
    NeuronParams p;
    p.v_thresh = -50.0;
    EXPECT_LT(threshold_search(p, 10.0, 100.0), threshold_search(NeuronParams{}, 10.0, 100.0));
}

TEST(Threshold, RejectsBadBracket) {
    EXPECT_THROW(threshold_search(NeuronParams{}, 50.0, 100.0), std::invalid_argument);
    EXPECT_THROW(threshold_search(NeuronParams{}, 10.0, 20.0), std::invalid_argument);
    EXPECT_THROW(threshold_search(NeuronParams{}, 60.0, 10.0), std::invalid_argument);
}

TEST(Report, ThirtyNineAndAHalfSilentAfterTransient) {
    const auto report = run_scenario(ScenarioScript::constant(39.5, 30000.0), NeuronParams{});
    for (const auto& row : report.rows) {
        if (row.t_ms >= 2000.0) ASSERT_FALSE(row.out_spike) << row.t_ms;
    }
}

TEST(Report, RateGatePlateaus) {
    const auto r = run_rate_segments(rate_gate_demo_segments(), NeuronParams{});
    ASSERT_EQ(r.report.rows.size(), 5000u);
    std::set<double> plateaus;
    for (const auto& row : r.report.rows) plateaus.insert(row.isi_ms);
    EXPECT_EQ(plateaus, (std::set<double>{100.0, 500.0, 1000.0}));
    EXPECT_EQ(count_spikes(r.report.output_spikes, 0.0, 4000.0), 0u);
    EXPECT_GE(count_spikes(r.report.output_spikes, 4000.0, 5000.0), 1u);
}

TEST(Report, EmitWritesAlignedCsv) {
    const auto report = run_scenario(ScenarioScript::constant(20.0, 3000.0), NeuronParams{});
    ASSERT_EQ(report.rows.size(), 3000u);
    const auto dir = std::filesystem::temp_directory_path() / "spikesonar_emit_test";
    std::filesystem::remove_all(dir);
    emit_report(report, dir);

    std::ifstream run_csv(dir / "run.csv");
    std::string line;
    std::getline(run_csv, line);
    EXPECT_EQ(line, "t_ms,dist_cm,tof_us,isi_ms,in_spike,out_spike,mode");
    std::size_t rows = 0;
    while (std::getline(run_csv, line)) ++rows;
    EXPECT_EQ(rows, 3000u);

    std::ifstream spikes_csv(dir / "spikes.csv");
    std::getline(spikes_csv, line);
    EXPECT_EQ(line, "t_ms,train");
    std::size_t spikes = 0;
    while (std::getline(spikes_csv, line)) ++spikes;
    EXPECT_EQ(spikes, report.input_spikes.size() + report.output_spikes.size());
    std::filesystem::remove_all(dir);

    EXPECT_THROW(emit_report(report, "/proc/spikesonar/nope"), std::runtime_error);
}

TEST(Report, Deterministic) {
    SensorConfig noisy;
    noisy.noise = true;
    const auto script = ScenarioScript::ramp(10.0, 50.0, 10000.0);
    const auto a = run_scenario(script, NeuronParams{}, {}, noisy);
    const auto b = run_scenario(script, NeuronParams{}, {}, noisy);
    EXPECT_EQ(a.output_spikes, b.output_spikes);
    EXPECT_EQ(a.input_spikes, b.input_spikes);
}
