#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <iosfwd>
#include <span>
#include <vector>

namespace spikesonar {

/// Current-based LIF neuron with decaying-exponential synapses.
///
/// Units: nF, ms, mV, nA. The membrane resistance tau_m / c_m is in MOhm so
/// that nA * MOhm = mV. Default values are the output-neuron parameter set of
/// the obstacle detector (an IF_curr_exp-style neuron with tau_m = 100 ms,
/// tau_refrac = 0 ms and v_thresh = -59.5 mV).
struct NeuronParams {
    double c_m = 1.0;
    double tau_m = 100.0;
    double tau_refrac = 0.0;
    double tau_syn_E = 5.0;
    double tau_syn_I = 5.0;
    double v_rest = -65.0;
    double v_reset = -65.0;
    double v_thresh = -59.5;
    double dt = 1.0;
    double w_in = 1.0;
    int syn_delay = 1;

    /// Throws std::invalid_argument when an invariant is violated.
    /// v_thresh may be +infinity to disable firing.
    void validate() const;

    /// Current added to i_syn_E by one input spike,
    /// w_in * (tau_syn_E / dt) * (1 - exp(-dt / tau_syn_E)).
    double synaptic_increment() const;

    double membrane_resistance() const { return tau_m / c_m; }

    /// Refractory period expressed in whole timesteps.
    int refractory_steps() const;

    friend bool operator==(const NeuronParams&, const NeuronParams&) = default;
};

struct NeuronState {
    double v = -65.0;
    double i_syn_E = 0.0;
    double i_syn_I = 0.0;
    int refrac_remaining = 0;

    static NeuronState at_rest(const NeuronParams& params);

    friend bool operator==(const NeuronState&, const NeuronState&) = default;
};

struct SpikeEvent {
    std::uint32_t source = 0;
    double t_ms = 0.0;

    friend bool operator==(const SpikeEvent&, const SpikeEvent&) = default;
};

using SpikeTrain = std::vector<SpikeEvent>;

/// Builds a train with one source from a list of times.
SpikeTrain make_train(std::span<const double> times_ms, std::uint32_t source = 0);

struct StepResult {
    NeuronState state;
    bool fired = false;
};

/// One dt tick: insert input spikes, integrate (or hold while refractory),
/// decay the synaptic currents, then threshold and reset.
StepResult step(const NeuronState& state, const NeuronParams& params, unsigned spikes_in);

struct TraceRecord {
    double t_ms = 0.0;
    double v = 0.0;
    double i_syn_E = 0.0;
    double i_syn_I = 0.0;
    bool fired = false;

    friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

using Trace = std::vector<TraceRecord>;

struct RunResult {
    SpikeTrain output;
    Trace trace;
};

/// Incremental stepping form of the neuron. Input spikes are scheduled with
/// deliver() and land syn_delay steps after their emission time.
class LifEngine {
public:
    explicit LifEngine(NeuronParams params);
    LifEngine(NeuronParams params, NeuronState initial);

    /// Schedules one input spike emitted at t_ms. Spikes whose arrival step is
    /// already past are delivered on the next step.
    void deliver(double t_ms);

    /// Executes the next step and returns its trace record.
    TraceRecord advance();

    std::int64_t next_step() const { return step_; }
    double now_ms() const { return static_cast<double>(step_) * params_.dt; }
    const NeuronState& state() const { return state_; }
    const NeuronParams& params() const { return params_; }

    /// Output neuron source id used in emitted SpikeEvents.
    static constexpr std::uint32_t kOutputSource = 1;

private:
    NeuronParams params_;
    NeuronState state_;
    std::int64_t step_ = 0;
    // pending_[k] holds the spike count arriving at step_ + k
    std::deque<unsigned> pending_;
};

/// Converts a time to a step index; throws if t_ms is negative or not a
/// multiple of dt.
std::int64_t step_index(double t_ms, double dt);

/// Folds step() over the horizon with the input train delayed by syn_delay.
/// Throws std::invalid_argument for unsorted or negative-time trains.
RunResult run(const NeuronParams& params, std::span<const SpikeEvent> input, double horizon_ms);
RunResult run(const NeuronParams& params, std::span<const SpikeEvent> input, double horizon_ms,
              const NeuronState& initial);

/// Writes `t_ms,v_mV,i_e_nA,i_i_nA,fired` CSV.
void write_trace_csv(std::ostream& out, std::span<const TraceRecord> trace);
Trace read_trace_csv(std::istream& in);

} // namespace spikesonar
