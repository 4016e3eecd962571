#include "spikesonar/lif.hpp"

#include "spikesonar/csv.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

namespace spikesonar {

void NeuronParams::validate() const {
    auto require = [](bool ok, const char* what) {
        if (!ok) throw std::invalid_argument(std::string("NeuronParams: ") + what);
    };
    require(c_m > 0.0, "c_m must be > 0");
    require(tau_m > 0.0, "tau_m must be > 0");
    require(tau_syn_E > 0.0, "tau_syn_E must be > 0");
    require(tau_syn_I > 0.0, "tau_syn_I must be > 0");
    require(dt > 0.0, "dt must be > 0");
    require(tau_refrac >= 0.0, "tau_refrac must be >= 0");
    require(syn_delay >= 1, "syn_delay must be >= 1");
    require(std::isfinite(v_rest) && std::isfinite(v_reset), "v_rest and v_reset must be finite");
    require(!std::isnan(v_thresh), "v_thresh must not be NaN");
    require(v_reset <= v_thresh, "v_reset must be <= v_thresh");
    require(v_rest < v_thresh, "v_rest must be < v_thresh");
    require(w_in >= 0.0 && std::isfinite(w_in), "w_in must be finite and >= 0");
}

double NeuronParams::synaptic_increment() const {
    return w_in * (tau_syn_E / dt) * (1.0 - std::exp(-dt / tau_syn_E));
}

int NeuronParams::refractory_steps() const {
    return static_cast<int>(std::llround(tau_refrac / dt));
}

NeuronState NeuronState::at_rest(const NeuronParams& params) {
    return NeuronState{params.v_rest, 0.0, 0.0, 0};
}

SpikeTrain make_train(std::span<const double> times_ms, std::uint32_t source) {
    SpikeTrain train;
    train.reserve(times_ms.size());
    for (double t : times_ms) train.push_back({source, t});
    return train;
}

StepResult step(const NeuronState& state, const NeuronParams& params, unsigned spikes_in) {
    NeuronState next = state;

    next.i_syn_E += static_cast<double>(spikes_in) * params.synaptic_increment();

    if (next.refrac_remaining > 0) {
        --next.refrac_remaining;
        next.v = params.v_reset;
    } else {
        const double drive = (next.i_syn_E - next.i_syn_I) * params.membrane_resistance();
        const double target = params.v_rest + drive;
        next.v = target + (next.v - target) * std::exp(-params.dt / params.tau_m);
    }

    next.i_syn_E *= std::exp(-params.dt / params.tau_syn_E);
    next.i_syn_I *= std::exp(-params.dt / params.tau_syn_I);

    bool fired = false;
    if (next.v >= params.v_thresh) {
        fired = true;
        next.v = params.v_reset;
        next.refrac_remaining = params.refractory_steps();
    }
    return {next, fired};
}

std::int64_t step_index(double t_ms, double dt) {
    if (!(t_ms >= 0.0)) throw std::invalid_argument("spike time must be >= 0");
    const double ratio = t_ms / dt;
    const double rounded = std::round(ratio);
    if (std::abs(ratio - rounded) > 1e-9 * std::max(1.0, std::abs(ratio))) {
        throw std::invalid_argument("spike time " + std::to_string(t_ms) + " ms is not a multiple of dt");
    }
    return static_cast<std::int64_t>(rounded);
}

LifEngine::LifEngine(NeuronParams params) : LifEngine(params, NeuronState::at_rest(params)) {}

LifEngine::LifEngine(NeuronParams params, NeuronState initial) : params_(params), state_(initial) {
    params_.validate();
}

void LifEngine::deliver(double t_ms) {
    std::int64_t arrival = step_index(t_ms, params_.dt) + params_.syn_delay;
    if (arrival < step_) arrival = step_;
    const auto offset = static_cast<std::size_t>(arrival - step_);
    if (pending_.size() <= offset) pending_.resize(offset + 1, 0);
    ++pending_[offset];
}

TraceRecord LifEngine::advance() {
    unsigned arriving = 0;
    if (!pending_.empty()) {
        arriving = pending_.front();
        pending_.pop_front();
    }
    auto [next, fired] = step(state_, params_, arriving);
    state_ = next;
    TraceRecord record{now_ms(), state_.v, state_.i_syn_E, state_.i_syn_I, fired};
    ++step_;
    return record;
}

RunResult run(const NeuronParams& params, std::span<const SpikeEvent> input, double horizon_ms) {
    return run(params, input, horizon_ms, NeuronState::at_rest(params));
}

RunResult run(const NeuronParams& params, std::span<const SpikeEvent> input, double horizon_ms,
              const NeuronState& initial) {
    params.validate();
    if (!(horizon_ms >= 0.0)) throw std::invalid_argument("horizon must be >= 0");
    const std::int64_t steps = static_cast<std::int64_t>(std::floor(horizon_ms / params.dt + 1e-9));

    double previous = -std::numeric_limits<double>::infinity();
    for (const auto& event : input) {
        if (event.t_ms < 0.0) throw std::invalid_argument("input train has a negative spike time");
        if (event.t_ms < previous) throw std::invalid_argument("input train is not sorted");
        step_index(event.t_ms, params.dt);
        previous = event.t_ms;
    }

    LifEngine engine(params, initial);
    RunResult result;
    result.trace.reserve(static_cast<std::size_t>(steps));
    std::size_t next_input = 0;
    for (std::int64_t k = 0; k < steps; ++k) {
        // Inputs emitted at or before this step are scheduled before it runs;
        // syn_delay >= 1 keeps every arrival in the future.
        while (next_input < input.size() && step_index(input[next_input].t_ms, params.dt) <= k) {
            engine.deliver(input[next_input].t_ms);
            ++next_input;
        }
        auto record = engine.advance();
        if (record.fired) result.output.push_back({LifEngine::kOutputSource, record.t_ms});
        result.trace.push_back(record);
    }
    return result;
}

void write_trace_csv(std::ostream& out, std::span<const TraceRecord> trace) {
    out << "t_ms,v_mV,i_e_nA,i_i_nA,fired\n";
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (const auto& r : trace) {
        out << r.t_ms << ',' << r.v << ',' << r.i_syn_E << ',' << r.i_syn_I << ',' << (r.fired ? 1 : 0) << '\n';
    }
}

Trace read_trace_csv(std::istream& in) {
    const auto table = csv::read(in);
    const auto t = table.column("t_ms");
    const auto v = table.column("v_mV");
    const auto ie = table.column("i_e_nA");
    const auto ii = table.column("i_i_nA");
    const auto fired = table.column("fired");
    Trace trace;
    trace.reserve(table.rows.size());
    for (const auto& row : table.rows) {
        trace.push_back({csv::to_double(row[t]), csv::to_double(row[v]), csv::to_double(row[ie]),
                         csv::to_double(row[ii]), csv::to_double(row[fired]) != 0.0});
    }
    return trace;
}

} // namespace spikesonar
