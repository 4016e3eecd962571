// spikesonar: command-line front end for the spiking obstacle detector.
//
//   spikesonar encode   --tof-csv in.csv [--out spikes.csv]
//   spikesonar filter   --raw-csv in.csv --max-hits 4 --max-error 120 [--out out.csv]
//   spikesonar analyze  --trace trace.csv --spikes input.csv [--params p.json] --out dir
//   spikesonar pipeline --script s.json --ports a,b,c [--sim-clock] [--out dir]
//   spikesonar scenario run|threshold|world|fig3 [--params p.json] --out dir

#include "spikesonar/analysis.hpp"
#include "spikesonar/encoder.hpp"
#include "spikesonar/filter.hpp"
#include "spikesonar/lif.hpp"
#include "spikesonar/pipeline.hpp"
#include "spikesonar/scenario.hpp"
#include "spikesonar/world.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace spikesonar;

namespace {

struct Common {
    std::string params_path;
    unsigned max_hits = 4;
    double max_error = 120.0;
    double sample_period = 20.0;
    bool noise = false;
    std::uint64_t seed = 1;

    NeuronParams params() const { return params_path.empty() ? NeuronParams{} : load_params(params_path); }
    FilterConfig filter() const { return FilterConfig{max_hits, max_error}; }
    SensorConfig sensor() const {
        SensorConfig s;
        s.sample_period_ms = sample_period;
        s.noise = noise;
        s.seed = seed;
        return s;
    }
};

void add_common(CLI::App* app, Common& c) {
    app->add_option("--params", c.params_path, "Neuron parameter JSON (partial documents allowed)")
        ->check(CLI::ExistingFile);
    app->add_option("--max-hits", c.max_hits, "Readings that must agree before one is forwarded");
    app->add_option("--max-error", c.max_error, "Agreement tolerance in microseconds");
    app->add_option("--sample-period-ms", c.sample_period, "Sensor sampling period");
    app->add_flag("--noise", c.noise, "Uniform +-3 mm range noise");
    app->add_option("--seed", c.seed, "Noise seed");
}

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

// Writes to the file when given, stdout otherwise.
template <typename Fn>
void with_output(const std::string& path, Fn&& fn) {
    if (path.empty()) {
        fn(std::cout);
    } else {
        auto out = open_out(path);
        fn(out);
    }
}

std::array<std::uint16_t, kNodeCount> parse_ports(const std::string& text) {
    std::array<std::uint16_t, kNodeCount> ports{};
    std::stringstream in(text);
    std::string field;
    std::size_t i = 0;
    while (std::getline(in, field, ',')) {
        if (i >= kNodeCount) throw CLI::ValidationError("--ports", "expected three ports");
        ports[i++] = static_cast<std::uint16_t>(std::stoul(field));
    }
    if (i != kNodeCount) throw CLI::ValidationError("--ports", "expected three ports robot,bridge,engine");
    return ports;
}

void write_isi(const fs::path& path, const SpikeTrain& train) {
    auto out = open_out(path);
    write_isi_csv(out, isi_series(train));
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spiking obstacle detector: LIF engine, rate encoder, sensor filter and UDP pipeline"};
    app.require_subcommand(1);

    // encode
    std::string tof_csv, encode_out;
    double encode_horizon = -1.0;
    auto* encode = app.add_subcommand("encode", "Replay a t_ms,tof_us CSV through the rate encoder");
    encode->add_option("--tof-csv", tof_csv, "Input CSV")->required()->check(CLI::ExistingFile);
    encode->add_option("--horizon-ms", encode_horizon, "Replay length (default: last row + 1001 ms)");
    encode->add_option("--out", encode_out, "Output spike CSV (default stdout)");

    // filter
    std::string raw_csv, filter_out;
    Common filter_opts;
    auto* filter = app.add_subcommand("filter", "Validate raw readings with the redundancy filter");
    filter->add_option("--raw-csv", raw_csv, "Input t_ms,tof_us CSV")->required()->check(CLI::ExistingFile);
    filter->add_option("--max-hits", filter_opts.max_hits, "Readings that must agree");
    filter->add_option("--max-error", filter_opts.max_error, "Agreement tolerance in microseconds");
    filter->add_option("--out", filter_out, "Output CSV (default stdout)");

    // analyze
    std::string trace_csv, spikes_csv, analyze_out;
    Common analyze_opts;
    auto* analyze = app.add_subcommand("analyze", "Firing windows and ISI series of a neuron trace");
    analyze->add_option("--trace", trace_csv, "Trace CSV t_ms,v_mV,i_e_nA,i_i_nA,fired")
        ->required()
        ->check(CLI::ExistingFile);
    analyze->add_option("--spikes", spikes_csv, "Input spike CSV t_ms")->required()->check(CLI::ExistingFile);
    analyze->add_option("--params", analyze_opts.params_path, "Neuron parameter JSON")->check(CLI::ExistingFile);
    analyze->add_option("--out", analyze_out, "Output directory")->required();

    // pipeline
    std::string script_path, ports_text = "47001,47002,47003", pipeline_out;
    bool sim_clock = false;
    double pipeline_horizon = -1.0;
    Common pipeline_opts;
    auto* pipeline = app.add_subcommand("pipeline", "Run robot, bridge and engine endpoints");
    pipeline->add_option("--script", script_path, "Scenario script JSON")->required()->check(CLI::ExistingFile);
    pipeline->add_option("--ports", ports_text, "UDP ports robot,bridge,engine");
    pipeline->add_flag("--sim-clock", sim_clock, "Deterministic single-thread simulated clock");
    pipeline->add_option("--horizon-ms", pipeline_horizon, "Run length (default: script duration)");
    pipeline->add_option("--out", pipeline_out, "Output directory for log.csv and robot_spikes.csv");
    add_common(pipeline, pipeline_opts);

    // scenario
    auto* scenario = app.add_subcommand("scenario", "Experiment harness");
    scenario->require_subcommand(1);
    Common scen;
    std::string scen_out = "out";

    auto* scen_run = scenario->add_subcommand("run", "Run a scripted distance trace offline");
    std::string scen_script;
    scen_run->add_option("--script", scen_script, "Scenario script JSON")->required()->check(CLI::ExistingFile);

    auto* scen_threshold = scenario->add_subcommand("threshold", "Bisect the detection distance");
    double lo_cm = 10.0, hi_cm = 100.0, thr_duration = kSustainedRunMs;
    scen_threshold->add_option("--lo", lo_cm, "Detected lower bracket (cm)");
    scen_threshold->add_option("--hi", hi_cm, "Undetected upper bracket (cm)");
    scen_threshold->add_option("--duration-ms", thr_duration, "Length of each constant-distance run");

    auto* scen_world = scenario->add_subcommand("world", "Closed-loop run in a 2D box world");
    std::string world_path;
    double horizon_s = 60.0;
    scen_world->add_option("--world", world_path, "World JSON (default: walled arena)")->check(CLI::ExistingFile);
    scen_world->add_option("--horizon-s", horizon_s, "Simulated seconds");

    auto* scen_fig3 = scenario->add_subcommand("fig3", "1 Hz / 2 Hz / 10 Hz rate-gate demonstration");

    for (auto* sub : {scen_run, scen_threshold, scen_world, scen_fig3}) {
        add_common(sub, scen);
        sub->add_option("--out", scen_out, "Output directory");
    }

    CLI11_PARSE(app, argc, argv);

    try {
        if (*encode) {
            std::ifstream in(tof_csv);
            const auto series = read_tof_csv(in);
            double horizon = encode_horizon;
            if (horizon < 0.0) horizon = (series.empty() ? 0.0 : series.back().t_recv_ms) + kMaxIsiS * 1000.0 + 1.0;
            const auto train = encode_tof_series(series, horizon);
            with_output(encode_out, [&](std::ostream& out) { write_spike_times_csv(out, train); });
        } else if (*filter) {
            std::ifstream in(raw_csv);
            const auto raw = read_readings_csv(in);
            const auto validated = filter_series(raw, filter_opts.filter());
            with_output(filter_out, [&](std::ostream& out) { write_readings_csv(out, validated); });
        } else if (*analyze) {
            const auto params = analyze_opts.params();
            std::ifstream trace_in(trace_csv);
            const auto trace = read_trace_csv(trace_in);
            std::ifstream spikes_in(spikes_csv);
            const auto input = read_spike_times_csv(spikes_in);
            const auto windows = firing_windows(trace, params, input);
            fs::create_directories(analyze_out);
            auto wout = open_out(fs::path(analyze_out) / "windows.csv");
            write_windows_csv(wout, windows);
            write_isi(fs::path(analyze_out) / "isi.csv", input);
            SpikeTrain output;
            for (const auto& r : trace) {
                if (r.fired) output.push_back({LifEngine::kOutputSource, r.t_ms});
            }
            write_isi(fs::path(analyze_out) / "output_isi.csv", output);
            std::cout << "min firing potential " << min_firing_potential(params) << " mV, " << windows.size()
                      << " windows\n";
        } else if (*pipeline) {
            const auto script = load_script(script_path);
            const double horizon = pipeline_horizon > 0.0 ? pipeline_horizon : script.duration_ms();
            PipelineConfig cfg{pipeline_opts.params(), pipeline_opts.filter(), pipeline_opts.sensor()};
            auto distance = [&script](double t) { return script.distance_at(t); };
            const auto result = sim_clock ? run_loopback(distance, horizon, cfg)
                                          : run_udp(distance, horizon, cfg, parse_ports(ports_text));
            if (!pipeline_out.empty()) {
                fs::create_directories(pipeline_out);
                auto log = open_out(fs::path(pipeline_out) / "log.csv");
                write_run_log_csv(log, result.log);
                auto rx = open_out(fs::path(pipeline_out) / "robot_spikes.csv");
                rx << "received_ms,stamp_ms\n";
                for (const auto& s : result.robot_spikes) rx << s.received_ms << ',' << s.stamp_ms << '\n';
            } else {
                write_run_log_csv(std::cout, result.log);
            }
            std::cerr << result.tof_sent << " TOF frames, " << result.injector.size() << " injector spikes, "
                      << result.engine_output.size() << " output spikes, " << result.robot_spikes.size()
                      << " received by robot, " << result.malformed << " malformed\n";
        } else if (*scen_run) {
            const auto report = run_scenario(load_script(scen_script), scen.params(), scen.filter(), scen.sensor());
            emit_report(report, scen_out);
            std::cout << report.input_spikes.size() << " input spikes, " << report.output_spikes.size()
                      << " output spikes\n";
        } else if (*scen_threshold) {
            ThresholdOptions opts;
            opts.duration_ms = thr_duration;
            opts.filter = scen.filter();
            opts.sensor = scen.sensor();
            const double boundary = threshold_search(scen.params(), lo_cm, hi_cm, opts);
            fs::create_directories(scen_out);
            auto out = open_out(fs::path(scen_out) / "threshold.csv");
            out << "lo_cm,hi_cm,threshold_cm\n" << lo_cm << ',' << hi_cm << ',' << boundary << '\n';
            std::cout << "threshold distance " << boundary << " cm\n";
        } else if (*scen_world) {
            const auto world = world_path.empty() ? WorldModel::closed_arena() : load_world(world_path);
            const auto run = run_world(world, scen.params(), scen.filter(), horizon_s, scen.sensor());
            emit_report(run.report, scen_out);
            auto traj = open_out(fs::path(scen_out) / "trajectory.csv");
            write_trajectory_csv(traj, run.trajectory);
            std::cout << run.report.output_spikes.size() << " output spikes, min ray " << run.min_ray_cm
                      << " cm, min clearance " << run.min_clearance_cm << " cm\n";
        } else if (*scen_fig3) {
            const auto params = scen.params();
            const auto segments = rate_gate_demo_segments();
            const auto result = run_rate_segments(segments, params);
            emit_report(result.report, scen_out);
            auto trace = open_out(fs::path(scen_out) / "trace.csv");
            write_trace_csv(trace, result.neuron.trace);
            auto windows = open_out(fs::path(scen_out) / "windows.csv");
            write_windows_csv(windows, result.windows);
            write_isi(fs::path(scen_out) / "isi.csv", result.input);
            auto input = open_out(fs::path(scen_out) / "input_spikes.csv");
            write_spike_times_csv(input, result.input);
            std::cout << "min firing potential " << result.min_fire_mV << " mV, " << result.neuron.output.size()
                      << " output spikes\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
