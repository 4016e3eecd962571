#include "spikesonar/scenario.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace spikesonar {

using json = nlohmann::json;

namespace {

double profile_distance(const DistanceProfile& profile, double offset_ms, double duration_ms) {
    return std::visit(
        [&](const auto& p) -> double {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, ConstantProfile>) {
                return p.distance_cm;
            } else if constexpr (std::is_same_v<P, RampProfile>) {
                const double frac = std::clamp(offset_ms / duration_ms, 0.0, 1.0);
                return p.from_cm + (p.to_cm - p.from_cm) * frac;
            } else if constexpr (std::is_same_v<P, StepProfile>) {
                return offset_ms < p.at_ms ? p.before_cm : p.after_cm;
            } else {
                const double phase = std::fmod(offset_ms, p.on_ms + p.off_ms);
                return phase < p.on_ms ? p.distance_cm : p.background_cm;
            }
        },
        profile);
}

void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument("scenario script: " + what);
}

bool valid_distance(double d) { return d >= 0.0; } // +inf allowed

double read_distance(const json& j, const char* key, double fallback) {
    if (!j.contains(key) || j.at(key).is_null()) return fallback;
    return j.at(key).get<double>();
}

} // namespace

void ScenarioScript::validate() const {
    require(!segments.empty(), "empty script");
    for (const auto& seg : segments) {
        require(seg.duration_ms > 0.0 && std::isfinite(seg.duration_ms), "segment durations must be > 0");
        std::visit(
            [&](const auto& p) {
                using P = std::decay_t<decltype(p)>;
                if constexpr (std::is_same_v<P, ConstantProfile>) {
                    require(valid_distance(p.distance_cm), "distances must be >= 0");
                } else if constexpr (std::is_same_v<P, RampProfile>) {
                    require(valid_distance(p.from_cm) && valid_distance(p.to_cm) && std::isfinite(p.from_cm) &&
                                std::isfinite(p.to_cm),
                            "ramp endpoints must be finite and >= 0");
                } else if constexpr (std::is_same_v<P, StepProfile>) {
                    require(valid_distance(p.before_cm) && valid_distance(p.after_cm), "distances must be >= 0");
                    require(p.at_ms >= 0.0 && p.at_ms <= seg.duration_ms, "step time outside its segment");
                } else {
                    require(valid_distance(p.distance_cm) && valid_distance(p.background_cm),
                            "distances must be >= 0");
                    require(p.on_ms > 0.0 && p.off_ms >= 0.0, "appear on_ms must be > 0 and off_ms >= 0");
                }
            },
            seg.profile);
    }
}

double ScenarioScript::duration_ms() const {
    double total = 0.0;
    for (const auto& seg : segments) total += seg.duration_ms;
    return total;
}

double ScenarioScript::distance_at(double t_ms) const {
    double start = 0.0;
    for (const auto& seg : segments) {
        if (t_ms < start + seg.duration_ms) return profile_distance(seg.profile, t_ms - start, seg.duration_ms);
        start += seg.duration_ms;
    }
    const auto& last = segments.back();
    return profile_distance(last.profile, last.duration_ms, last.duration_ms);
}

ScenarioScript ScenarioScript::constant(double distance_cm, double duration_ms) {
    return ScenarioScript{{ScriptSegment{duration_ms, ConstantProfile{distance_cm}}}};
}

ScenarioScript ScenarioScript::ramp(double from_cm, double to_cm, double duration_ms) {
    return ScenarioScript{{ScriptSegment{duration_ms, RampProfile{from_cm, to_cm}}}};
}

ScenarioScript parse_script(std::string_view json_text) {
    const auto doc = json::parse(json_text);
    ScenarioScript script;
    for (const auto& s : doc.at("segments")) {
        ScriptSegment seg;
        seg.duration_ms = s.at("duration_ms").get<double>();
        const auto kind = s.at("profile").get<std::string>();
        if (kind == "constant") {
            seg.profile = ConstantProfile{read_distance(s, "distance_cm", kNoObstacle)};
        } else if (kind == "ramp") {
            seg.profile = RampProfile{s.at("from_cm").get<double>(), s.at("to_cm").get<double>()};
        } else if (kind == "step") {
            seg.profile = StepProfile{read_distance(s, "before_cm", kNoObstacle),
                                      read_distance(s, "after_cm", kNoObstacle), s.at("at_ms").get<double>()};
        } else if (kind == "appear") {
            AppearProfile p;
            p.distance_cm = s.at("distance_cm").get<double>();
            p.background_cm = read_distance(s, "background_cm", kNoObstacle);
            p.on_ms = s.value("on_ms", p.on_ms);
            p.off_ms = s.value("off_ms", p.off_ms);
            seg.profile = p;
        } else {
            throw std::invalid_argument("scenario script: unknown profile '" + kind + "'");
        }
        script.segments.push_back(seg);
    }
    script.validate();
    return script;
}

namespace {

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

} // namespace

ScenarioScript load_script(const std::filesystem::path& path) { return parse_script(slurp(path)); }

NeuronParams parse_params(std::string_view json_text) {
    const auto doc = json::parse(json_text);
    NeuronParams p;
    p.c_m = doc.value("c_m", p.c_m);
    p.tau_m = doc.value("tau_m", p.tau_m);
    p.tau_refrac = doc.value("tau_refrac", p.tau_refrac);
    p.tau_syn_E = doc.value("tau_syn_E", p.tau_syn_E);
    p.tau_syn_I = doc.value("tau_syn_I", p.tau_syn_I);
    p.v_rest = doc.value("v_rest", p.v_rest);
    p.v_reset = doc.value("v_reset", p.v_reset);
    p.v_thresh = doc.value("v_thresh", p.v_thresh);
    p.dt = doc.value("dt", p.dt);
    p.w_in = doc.value("w_in", p.w_in);
    p.syn_delay = doc.value("syn_delay", p.syn_delay);
    p.validate();
    return p;
}

NeuronParams load_params(const std::filesystem::path& path) { return parse_params(slurp(path)); }

OfflineSystem::OfflineSystem(const NeuronParams& params, const FilterConfig& filter, const SensorConfig& sensor)
    : sensor_(sensor), filter_(filter), engine_(params) {}

ReportRow OfflineSystem::tick(double t_ms, double distance_cm) {
    ReportRow row;
    row.t_ms = t_ms;
    row.dist_cm = distance_cm;

    if (sensor_.due(t_ms)) {
        const auto raw = sensor_.read(distance_cm);
        if (auto validated = filter_.push(static_cast<double>(raw))) {
            tof_us_ = *validated;
            encoder_ = update_tof(encoder_, TofMeasurement{tof_us_, t_ms});
        }
    }
    if (spikesonar::tick(encoder_, t_ms)) {
        row.in_spike = true;
        engine_.deliver(t_ms);
    }
    const auto record = engine_.advance();
    if (record.fired) {
        row.out_spike = true;
        avoidance_.on_spike(t_ms);
    }
    row.mode = avoidance_.update(t_ms);
    row.tof_us = tof_us_;
    row.isi_ms = encoder_.current_isi_ms();
    return row;
}

RunReport run_scenario(const ScenarioScript& script, const NeuronParams& params, const FilterConfig& cfg,
                       const SensorConfig& sensor) {
    script.validate();
    params.validate();
    if (params.dt != 1.0) throw std::invalid_argument("the sensor pipeline runs at dt = 1 ms");
    OfflineSystem system(params, cfg, sensor);
    RunReport report;
    const auto ticks = static_cast<std::int64_t>(std::floor(script.duration_ms()));
    report.rows.reserve(static_cast<std::size_t>(ticks));
    for (std::int64_t k = 0; k < ticks; ++k) {
        const double t = static_cast<double>(k);
        const auto row = system.tick(t, script.distance_at(t));
        if (row.in_spike) report.input_spikes.push_back({kInjectorSource, t});
        if (row.out_spike) report.output_spikes.push_back({LifEngine::kOutputSource, t});
        report.rows.push_back(row);
    }
    return report;
}

std::size_t count_spikes(const SpikeTrain& train, double from_ms, double to_ms) {
    return static_cast<std::size_t>(std::count_if(train.begin(), train.end(), [&](const SpikeEvent& s) {
        return s.t_ms >= from_ms && s.t_ms < to_ms;
    }));
}

bool distance_detected(double distance_cm, const NeuronParams& params, const ThresholdOptions& opts) {
    const auto report =
        run_scenario(ScenarioScript::constant(distance_cm, opts.duration_ms), params, opts.filter, opts.sensor);
    return count_spikes(report.output_spikes, opts.duration_ms * 2.0 / 3.0, opts.duration_ms) > 0;
}

double threshold_search(const NeuronParams& params, double lo_cm, double hi_cm, const ThresholdOptions& opts) {
    if (!(lo_cm < hi_cm) || lo_cm < 0.0) throw std::invalid_argument("threshold_search: need 0 <= lo < hi");
    if (!distance_detected(lo_cm, params, opts)) {
        throw std::invalid_argument("threshold_search: lower bracket " + std::to_string(lo_cm) +
                                    " cm is not detected");
    }
    if (distance_detected(hi_cm, params, opts)) {
        throw std::invalid_argument("threshold_search: upper bracket " + std::to_string(hi_cm) +
                                    " cm is still detected");
    }
    double lo = lo_cm;
    double hi = hi_cm;
    while (hi - lo > opts.resolution_cm) {
        const double mid = 0.5 * (lo + hi);
        if (distance_detected(mid, params, opts)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return lo;
}

std::vector<RateSegment> rate_gate_demo_segments() { return {{2000.0, 1.0}, {2000.0, 2.0}, {1000.0, 10.0}}; }

SpikeTrain rate_segments_train(std::span<const RateSegment> segments) {
    SpikeTrain train;
    double start = 0.0;
    for (const auto& seg : segments) {
        if (!(seg.duration_ms > 0.0 && seg.rate_hz > 0.0)) throw std::invalid_argument("rate segment must be > 0");
        const double period = 1000.0 / seg.rate_hz;
        for (double t = start; t < start + seg.duration_ms - 1e-9; t += period) {
            train.push_back({kInjectorSource, std::round(t)});
        }
        start += seg.duration_ms;
    }
    return train;
}

RateSegmentsRun run_rate_segments(std::span<const RateSegment> segments, const NeuronParams& params) {
    RateSegmentsRun out;
    out.input = rate_segments_train(segments);
    double horizon = 0.0;
    for (const auto& seg : segments) horizon += seg.duration_ms;
    out.neuron = run(params, out.input, horizon);
    out.min_fire_mV = min_firing_potential(params);
    out.windows = firing_windows(out.neuron.trace, params, out.input, out.min_fire_mV);

    AvoidanceController avoidance;
    std::size_t next_input = 0;
    double seg_start = 0.0;
    std::size_t seg = 0;
    for (const auto& rec : out.neuron.trace) {
        while (seg + 1 < segments.size() && rec.t_ms >= seg_start + segments[seg].duration_ms) {
            seg_start += segments[seg].duration_ms;
            ++seg;
        }
        ReportRow row;
        row.t_ms = rec.t_ms;
        row.isi_ms = 1000.0 / segments[seg].rate_hz;
        row.tof_us = tof_from_isi(std::clamp(row.isi_ms / 1000.0, kMinIsiS, kMaxIsiS));
        row.dist_cm = distance_from_tof(row.tof_us);
        while (next_input < out.input.size() && out.input[next_input].t_ms <= rec.t_ms) {
            row.in_spike = row.in_spike || out.input[next_input].t_ms == rec.t_ms;
            ++next_input;
        }
        row.out_spike = rec.fired;
        if (rec.fired) avoidance.on_spike(rec.t_ms);
        row.mode = avoidance.update(rec.t_ms);
        out.report.rows.push_back(row);
    }
    out.report.input_spikes = out.input;
    out.report.output_spikes = out.neuron.output;
    return out;
}

void write_run_csv(std::ostream& out, const RunReport& report) {
    out << "t_ms,dist_cm,tof_us,isi_ms,in_spike,out_spike,mode\n";
    out << std::setprecision(10);
    for (const auto& r : report.rows) {
        out << r.t_ms << ',' << r.dist_cm << ',' << r.tof_us << ',' << r.isi_ms << ',' << (r.in_spike ? 1 : 0) << ','
            << (r.out_spike ? 1 : 0) << ',' << to_string(r.mode) << '\n';
    }
}

void emit_report(const RunReport& report, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());

    std::ofstream run_csv(dir / "run.csv");
    if (!run_csv) throw std::runtime_error("cannot write " + (dir / "run.csv").string());
    write_run_csv(run_csv, report);

    std::ofstream spikes(dir / "spikes.csv");
    if (!spikes) throw std::runtime_error("cannot write " + (dir / "spikes.csv").string());
    spikes << "t_ms,train\n";
    for (const auto& s : report.input_spikes) spikes << s.t_ms << ",input\n";
    for (const auto& s : report.output_spikes) spikes << s.t_ms << ",output\n";
    if (!run_csv || !spikes) throw std::runtime_error("write failed in " + dir.string());
}

} // namespace spikesonar
