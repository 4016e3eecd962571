#include "spikesonar/analysis.hpp"

#include "spikesonar/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

namespace spikesonar {

namespace {

std::int64_t free_response_cap(const NeuronParams& params) {
    return static_cast<std::int64_t>(std::ceil(50.0 * (params.tau_m + params.tau_syn_E) / params.dt)) + 10;
}

// One arrival step per group of input spikes landing on the same step.
struct Arrival {
    std::int64_t step;
    std::size_t input_index;
};

std::vector<Arrival> arrivals_of(std::span<const SpikeEvent> train, const NeuronParams& params) {
    std::vector<Arrival> arrivals;
    for (std::size_t i = 0; i < train.size(); ++i) {
        const std::int64_t a = step_index(train[i].t_ms, params.dt) + params.syn_delay;
        if (!arrivals.empty() && arrivals.back().step == a) continue;
        if (!arrivals.empty() && a < arrivals.back().step) throw std::invalid_argument("input train is not sorted");
        arrivals.push_back({a, i});
    }
    return arrivals;
}

void check_trace(std::span<const TraceRecord> trace, const NeuronParams& params,
                 std::span<const SpikeEvent> input_train) {
    const double horizon = static_cast<double>(trace.size()) * params.dt;
    for (std::size_t k = 0; k < trace.size(); ++k) {
        if (std::abs(trace[k].t_ms - static_cast<double>(k) * params.dt) > 1e-9 * std::max(1.0, horizon)) {
            throw std::invalid_argument("trace is not sampled at dt from t = 0");
        }
    }
    for (const auto& s : input_train) {
        if (s.t_ms < 0.0 || s.t_ms >= horizon) {
            throw std::invalid_argument("input train does not match the trace horizon");
        }
    }
}

} // namespace

bool single_spike_fires(const NeuronParams& params, double v0) {
    NeuronState state{v0, 0.0, 0.0, 0};
    const auto cap = free_response_cap(params);
    double previous = v0;
    for (std::int64_t k = 0; k < cap; ++k) {
        auto [next, fired] = step(state, params, k == 0 ? 1u : 0u);
        if (fired) return true;
        if (k > 0 && next.v <= previous) return false;
        previous = next.v;
        state = next;
    }
    return false;
}

double min_firing_potential(const NeuronParams& params) {
    params.validate();
    if (!std::isfinite(params.v_thresh)) throw std::invalid_argument("min_firing_potential needs a finite threshold");

    double lo = params.v_rest;
    if (single_spike_fires(params, lo)) return lo;

    const double top = params.v_thresh - 1e-6;
    if (!single_spike_fires(params, top)) {
        throw NeverFiresError("neuron never fires from a single input spike");
    }
    double hi = top;
    while (hi - lo > 1e-7) {
        const double mid = 0.5 * (lo + hi);
        if (single_spike_fires(params, mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return hi;
}

const char* to_string(WindowKind kind) {
    switch (kind) {
    case WindowKind::SpikeToPeak: return "spike-to-peak";
    case WindowKind::PeakToMinFire: return "peak-to-minfire";
    }
    return "?";
}

const char* to_string(WindowClose close) {
    switch (close) {
    case WindowClose::Natural: return "natural";
    case WindowClose::NextInput: return "next-input";
    case WindowClose::OutputSpike: return "output-spike";
    case WindowClose::Horizon: return "horizon";
    }
    return "?";
}

std::vector<FiringWindow> firing_windows(std::span<const TraceRecord> trace, const NeuronParams& params,
                                         std::span<const SpikeEvent> input_train) {
    return firing_windows(trace, params, input_train, min_firing_potential(params));
}

std::vector<FiringWindow> firing_windows(std::span<const TraceRecord> trace, const NeuronParams& params,
                                         std::span<const SpikeEvent> input_train, double min_fire_mV) {
    params.validate();
    check_trace(trace, params, input_train);

    const auto n = static_cast<std::int64_t>(trace.size());
    const auto arrivals = arrivals_of(input_train, params);

    std::vector<std::int64_t> outputs;
    for (std::int64_t k = 0; k < n; ++k) {
        if (trace[static_cast<std::size_t>(k)].fired) outputs.push_back(k);
    }

    NeuronParams free_params = params;
    free_params.v_thresh = std::numeric_limits<double>::infinity();
    const auto cap = free_response_cap(params);

    std::vector<FiringWindow> windows;
    for (std::size_t j = 0; j < arrivals.size(); ++j) {
        const std::int64_t a = arrivals[j].step;
        if (a >= n) break;

        const auto out_it = std::lower_bound(outputs.begin(), outputs.end(), a);
        const std::int64_t next_output = out_it == outputs.end() ? std::numeric_limits<std::int64_t>::max() : *out_it;
        if (next_output == a) continue; // fired on arrival; nothing left open

        const std::int64_t next_input =
            j + 1 < arrivals.size() ? arrivals[j + 1].step : std::numeric_limits<std::int64_t>::max();

        // Free response from the arrival state: peak index, then the first
        // index below the minimum firing potential.
        const auto& rec = trace[static_cast<std::size_t>(a)];
        NeuronState state{rec.v, rec.i_syn_E, rec.i_syn_I, 0};
        std::int64_t peak = a;
        double peak_v = rec.v;
        std::int64_t k = a;
        for (; k - a < cap; ++k) {
            auto next = step(state, free_params, 0).state;
            if (next.v <= state.v) break;
            state = next;
            peak = k + 1;
            peak_v = next.v;
        }
        if (peak_v < min_fire_mV) continue;

        std::int64_t drop = peak;
        state = NeuronState{peak_v, state.i_syn_E, state.i_syn_I, 0};
        while (state.v >= min_fire_mV && drop - peak < cap) {
            state = step(state, free_params, 0).state;
            ++drop;
        }

        std::int64_t limit = n - 1;
        WindowClose limit_reason = WindowClose::Horizon;
        if (next_input <= next_output && next_input <= limit) {
            limit = next_input;
            limit_reason = WindowClose::NextInput;
        } else if (next_output < next_input && next_output <= limit) {
            limit = next_output;
            limit_reason = WindowClose::OutputSpike;
        }

        auto ms = [&](std::int64_t idx) { return static_cast<double>(idx) * params.dt; };
        const std::size_t input_index = arrivals[j].input_index;

        if (limit < peak) {
            windows.push_back({ms(a), ms(limit), WindowKind::SpikeToPeak, limit_reason, input_index});
            continue;
        }
        windows.push_back({ms(a), ms(peak), WindowKind::SpikeToPeak, WindowClose::Natural, input_index});
        if (limit < drop) {
            windows.push_back({ms(peak), ms(limit), WindowKind::PeakToMinFire, limit_reason, input_index});
        } else {
            windows.push_back({ms(peak), ms(drop), WindowKind::PeakToMinFire, WindowClose::Natural, input_index});
        }
    }
    return windows;
}

std::vector<ArrivalOutcome> arrival_outcomes(std::span<const TraceRecord> trace, const NeuronParams& params,
                                             std::span<const SpikeEvent> input_train,
                                             std::span<const FiringWindow> windows) {
    check_trace(trace, params, input_train);
    const auto n = static_cast<std::int64_t>(trace.size());
    const auto arrivals = arrivals_of(input_train, params);

    std::vector<ArrivalOutcome> outcomes;
    for (std::size_t j = 0; j < arrivals.size(); ++j) {
        const std::int64_t a = arrivals[j].step;
        if (a >= n) break;
        const std::int64_t end = j + 1 < arrivals.size() ? std::min(arrivals[j + 1].step, n) : n;

        ArrivalOutcome outcome;
        outcome.arrival_ms = static_cast<double>(a) * params.dt;
        for (std::int64_t k = a; k < end; ++k) {
            if (trace[static_cast<std::size_t>(k)].fired) {
                outcome.output_fired = true;
                break;
            }
        }
        if (j > 0) {
            const auto previous = arrivals[j - 1].input_index;
            outcome.inside_open_window = std::any_of(windows.begin(), windows.end(), [&](const FiringWindow& w) {
                return w.input_index == previous && w.closed_by == WindowClose::NextInput;
            });
        }
        outcomes.push_back(outcome);
    }
    return outcomes;
}

IsiSeries isi_series(std::span<const SpikeEvent> train) {
    IsiSeries series;
    if (train.size() < 2) return series;
    series.reserve(train.size() - 1);
    for (std::size_t i = 1; i < train.size(); ++i) {
        const double isi = train[i].t_ms - train[i - 1].t_ms;
        if (!(isi > 0.0)) throw std::invalid_argument("spike train is not strictly increasing");
        series.push_back({train[i].t_ms, isi});
    }
    return series;
}

SpikeTrain constant_rate_train(double rate_hz, double horizon_ms) {
    if (!(rate_hz > 0.0)) throw std::invalid_argument("rate must be > 0");
    EncoderState state;
    state.current_isi_s = 1.0 / rate_hz;
    SpikeTrain train;
    const auto ticks = static_cast<std::int64_t>(std::floor(horizon_ms));
    for (std::int64_t t = 0; t < ticks; ++t) {
        if (auto s = tick(state, static_cast<double>(t))) train.push_back(*s);
    }
    return train;
}

bool sustained_output(const NeuronParams& params, double rate_hz) {
    const auto train = constant_rate_train(rate_hz, kSustainedRunMs);
    const auto result = run(params, train, kSustainedRunMs);
    const double tail_start = kSustainedRunMs * 2.0 / 3.0;
    return std::any_of(result.output.begin(), result.output.end(),
                       [&](const SpikeEvent& s) { return s.t_ms >= tail_start; });
}

double cutoff_rate(const NeuronParams& params) {
    params.validate();
    double lo = 0.1;
    double hi = 1000.0;
    if (sustained_output(params, lo)) return lo;
    if (!sustained_output(params, hi)) throw NeverFiresError("no sustained output even at 1000 Hz");
    while (hi - lo > 0.01) {
        const double mid = 0.5 * (lo + hi);
        if (sustained_output(params, mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return hi;
}

void write_windows_csv(std::ostream& out, std::span<const FiringWindow> windows) {
    out << "t_start_ms,t_end_ms,kind\n";
    for (const auto& w : windows) out << w.t_start_ms << ',' << w.t_end_ms << ',' << to_string(w.kind) << '\n';
}

void write_isi_csv(std::ostream& out, const IsiSeries& series) {
    out << "t_ms,isi_ms\n";
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (const auto& p : series) out << p.t_ms << ',' << p.isi_ms << '\n';
}

} // namespace spikesonar
