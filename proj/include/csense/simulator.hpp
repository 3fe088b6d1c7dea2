#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

#include "cost.hpp"
#include "errors.hpp"
#include "hyperexp.hpp"
#include "numerics.hpp"
#include "policies.hpp"
#include "rng.hpp"

namespace csense {

/// The primary user's channel: hyper-exponential idle (OFF) periods and, for
/// completeness, the busy-period rate. Poisson re-probing is memoryless, so
/// on_rate drops out of every per-idle-period metric; it is kept so the model
/// states the full channel, and validated, but nothing downstream reads it.
struct ChannelModel {
    HyperExp off_dist;
    double on_rate = 1.0;

    void validate() const {
        if (!(on_rate > 0.0) || !std::isfinite(on_rate))
            throw std::invalid_argument("ChannelModel: on_rate must be positive and finite");
    }
};

/// Energy-detector parameters plus the secondary user's off-channel probing
/// rate. p_f_override short-circuits the detector model with a direct
/// false-alarm probability (sweeps, tests).
struct SensingModel {
    double p_detect = 0.9;
    double snr = 0.01;
    double sample_rate = 1e6;
    double t_sense = 0.0;
    double busy_rate = 1.0; // rate of the Poisson probing the user falls back to off-channel
    std::optional<double> p_f_override;
};

/// False-alarm probability of the energy detector pinned to the target
/// detection probability: Q(sqrt(2 snr + 1) Q^{-1}(p_detect) + sqrt(t_sense
/// sample_rate) snr).
inline double false_alarm(const SensingModel& sm) {
    if (!(sm.p_detect > 0.0) || !(sm.p_detect < 1.0))
        throw std::invalid_argument("false_alarm: p_detect must lie strictly in (0, 1)");
    if (!(sm.snr > 0.0) || !std::isfinite(sm.snr))
        throw std::invalid_argument("false_alarm: snr must be positive and finite");
    if (!(sm.sample_rate > 0.0) || !std::isfinite(sm.sample_rate))
        throw std::invalid_argument("false_alarm: sample_rate must be positive and finite");
    if (!(sm.t_sense >= 0.0) || !std::isfinite(sm.t_sense))
        throw std::invalid_argument("false_alarm: t_sense must be finite and >= 0");
    return q_function(std::sqrt(2.0 * sm.snr + 1.0) * q_inverse(sm.p_detect) +
                      std::sqrt(sm.t_sense * sm.sample_rate) * sm.snr);
}

struct SimFlags {
    bool sensing_error = false;    // imperfect detection: false alarms and missed detections
    bool delayed_occupancy = false; // user discovers the idle channel with an Exp(busy_rate) delay
    bool sensing_duration = false; // each sense pauses transmission for t_sense

    bool any() const { return sensing_error || delayed_occupancy || sensing_duration; }
};

struct TrialMetrics {
    std::uint64_t n_sense = 0;        // senses during the occupancy, probes after false alarms included
    double interference = 0.0;        // transmission time past the idle period's end
    double missed_opportunity = 0.0;  // idle time gone before the user ever arrived
    double transmit_time = 0.0;       // idle time actually spent transmitting
    double total_cost = 0.0;          // cost_from_counts(n_sense, interference)
    double idle_time = 0.0;           // the realized idle duration (throughput denominator)
};

/// Posterior over the idle period's phase as seen by a user who discovers the
/// channel idle a random Exp(busy_rate) time after it freed up:
///   p_i = integral_0^inf residual_update(P0, m)_i busy_rate e^{-busy_rate m} dm,
/// by composite Simpson on [0, M] with M chosen so the discarded exponential
/// mass is below 1e-10. The components must integrate to 1 within 1e-6 (else
/// ConvergenceError); they are renormalized exactly afterwards.
inline PhaseVector delayed_phase_update(const HyperExp& d, double busy_rate,
                                        std::size_t quad_points = 20001) {
    if (!(busy_rate > 0.0) || !std::isfinite(busy_rate))
        throw std::invalid_argument("delayed_phase_update: busy_rate must be positive and finite");
    if (quad_points < 3)
        throw std::invalid_argument("delayed_phase_update: need at least three quadrature points");

    std::size_t segments = quad_points - 1;
    if (segments % 2 != 0) ++segments;
    const double m_hi = 23.0258509299404568 / busy_rate; // e^{-23.03} < 1e-10
    const double h = m_hi / static_cast<double>(segments);
    const PhaseVector prior = d.initial_pv();
    const std::size_t k = d.k();

    std::vector<double> acc(k, 0.0);
    for (std::size_t j = 0; j <= segments; ++j) {
        const double m = (j == segments) ? m_hi : h * static_cast<double>(j);
        const double weight = (j == 0 || j == segments) ? 1.0 : (j % 2 == 1 ? 4.0 : 2.0);
        const double density = busy_rate * std::exp(-busy_rate * m);
        const PhaseVector post = residual_update(d, prior, m);
        for (std::size_t i = 0; i < k; ++i) acc[i] += weight * post.p[i] * density;
    }
    double total = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        acc[i] *= h / 3.0;
        total += acc[i];
    }
    if (std::abs(total - 1.0) > 1e-6)
        throw ConvergenceError("delayed_phase_update: quadrature mass missed 1 beyond tolerance");
    for (double& v : acc) v /= total;
    return {std::move(acc), false};
}

/// Per-run constants for run_full_trial, precomputed once so per-trial work
/// stays cheap. Defaults encode the degenerate error model (p_f = 0, p_d = 1,
/// t_sense = 0), under which a flags-on trial replays a flags-off one bitwise.
struct TrialContext {
    double p_f = 0.0;
    double p_d = 1.0;
    double t_sense = 0.0;
    PhaseVector start_pv; // policy's starting posterior (delayed update when that flag is on)
};

inline TrialContext make_trial_context(const ChannelModel& ch, const SensingModel& sm,
                                       const SimFlags& flags, std::size_t quad_points = 20001) {
    ch.validate();
    TrialContext ctx;
    ctx.start_pv = ch.off_dist.initial_pv();
    if (flags.sensing_error) {
        if (!(sm.p_detect > 0.0) || !(sm.p_detect <= 1.0))
            throw std::invalid_argument("make_trial_context: p_detect must lie in (0, 1]");
        ctx.p_d = sm.p_detect;
        ctx.p_f = sm.p_f_override ? *sm.p_f_override : false_alarm(sm);
        if (!(ctx.p_f >= 0.0) || !(ctx.p_f < 1.0))
            throw std::invalid_argument("make_trial_context: false-alarm probability must lie in [0, 1)");
    }
    if (flags.sensing_duration) {
        if (!(sm.t_sense >= 0.0) || !std::isfinite(sm.t_sense))
            throw std::invalid_argument("make_trial_context: t_sense must be finite and >= 0");
        ctx.t_sense = sm.t_sense;
    }
    if (flags.sensing_error || flags.delayed_occupancy) {
        if (!(sm.busy_rate > 0.0) || !std::isfinite(sm.busy_rate))
            throw std::invalid_argument("make_trial_context: busy_rate must be positive and finite");
    }
    if (flags.delayed_occupancy)
        ctx.start_pv = delayed_phase_update(ch.off_dist, sm.busy_rate, quad_points);
    return ctx;
}

namespace detail {

constexpr std::uint64_t kRunawaySenses = 10'000'000;

inline void advance_state(const HyperExp& d, SensingState& st, double dt) {
    st.pv = residual_update(d, st.pv, dt);
    st.elapsed += dt;
    ++st.index;
}

} // namespace detail

/// One idle period under ideal sensing: draw X, sense at the policy's
/// cumulative interval ends, stop at the first sense strictly past X. The
/// whole idle period is transmitted; the overshoot is interference.
inline TrialMetrics run_idle_trial(const HyperExp& d, const PolicyParams& params,
                                   const CostModel& cm, RngStream& rng,
                                   std::optional<double> forced_idle = std::nullopt) {
    validate_params(params, d.k());
    cm.validate();
    const double x = forced_idle ? *forced_idle : sample(d, rng);
    if (!(x >= 0.0) || !std::isfinite(x))
        throw std::invalid_argument("run_idle_trial: idle duration must be finite and >= 0");

    SensingState st{d.initial_pv(), 0.0, 0};
    double cum = 0.0;
    std::uint64_t n = 0;
    for (;;) {
        const double interval = next_interval(params, st, rng);
        cum += interval;
        ++n;
        if (cum > x) break;
        if (n >= detail::kRunawaySenses)
            throw RunawayPolicyError("run_idle_trial: sensing count exceeded the runaway guard");
        detail::advance_state(d, st, interval);
    }
    const double interference = cum - x;
    return {n, interference, 0.0, x, cost_from_counts(cm, n, interference), x};
}

/// One idle period with the impairment flags applied. With every flag off
/// this is exactly run_idle_trial (same draws, same arithmetic). Otherwise:
///  - delayed_occupancy: the user arrives Exp(busy_rate) late; idle time
///    before arrival is missed opportunity, and the policy starts from the
///    delay-averaged posterior.
///  - sensing_duration: each sense (probes included) pauses transmission for
///    t_sense; pauses are neither transmission nor interference.
///  - sensing_error: an idle-channel sense false-alarms with probability p_f,
///    sending the user off-channel to probe at Exp(busy_rate) gaps until a
///    probe sees the channel idle again (probes can false-alarm too), after
///    which the policy restarts from its first interval; a busy-channel sense
///    detects with probability p_d, and a miss keeps the user transmitting.
/// Pass a precomputed context when running many trials; a null ctx builds one
/// on the spot.
inline TrialMetrics run_full_trial(const ChannelModel& ch, const SensingModel& sm,
                                   const PolicyParams& params, const CostModel& cm,
                                   const SimFlags& flags, RngStream& rng,
                                   const TrialContext* ctx = nullptr,
                                   std::optional<double> forced_idle = std::nullopt) {
    if (!flags.any()) return run_idle_trial(ch.off_dist, params, cm, rng, forced_idle);

    TrialContext local;
    if (ctx == nullptr) local = make_trial_context(ch, sm, flags);
    const TrialContext& c = ctx ? *ctx : local;
    const HyperExp& d = ch.off_dist;
    validate_params(params, d.k());
    cm.validate();

    const double x = forced_idle ? *forced_idle : sample(d, rng);
    if (!(x >= 0.0) || !std::isfinite(x))
        throw std::invalid_argument("run_full_trial: idle duration must be finite and >= 0");

    double missed = 0.0;
    if (flags.delayed_occupancy) {
        const double arrival_lag = rng.exponential(sm.busy_rate);
        if (arrival_lag >= x) return {0, 0.0, x, 0.0, 0.0, x}; // user never arrived in time
        missed = arrival_lag;
    }
    // Clock runs from the user's arrival; the primary returns at x_res.
    const double x_res = x - missed;

    SensingState st{c.start_pv, 0.0, 0};
    double t = 0.0;
    double idle_loss = 0.0; // idle airtime not transmitted (sense pauses, off-channel spells)
    double interference = 0.0;
    std::uint64_t n = 0;

    for (;;) {
        const double interval = next_interval(params, st, rng);
        // Transmission segment [t, t + interval): the part past x_res interferes.
        if (t + interval > x_res) interference += (t + interval) - std::max(x_res, t);
        t += interval;
        ++n;
        if (n >= detail::kRunawaySenses)
            throw RunawayPolicyError("run_full_trial: sensing count exceeded the runaway guard");

        if (t > x_res) {
            // Primary already back at this sense (a sense exactly at x_res still sees idle).
            const bool detected = c.p_d >= 1.0 || rng.uniform01() < c.p_d;
            t += c.t_sense;
            if (detected) break;
            detail::advance_state(d, st, interval + c.t_sense); // miss: keep going
            continue;
        }

        // Channel idle at this sense.
        if (c.t_sense > 0.0) {
            idle_loss += std::min(c.t_sense, x_res - t);
            t += c.t_sense;
        }
        if (!(c.p_f > 0.0 && rng.uniform01() < c.p_f)) {
            detail::advance_state(d, st, interval + c.t_sense);
            continue;
        }

        // False alarm: vacate and probe at Exp(busy_rate) gaps until a probe
        // reports idle. Probes can false-alarm again; a probe after the
        // primary's true return can miss and wrongly re-acquire.
        const double off_start = t;
        bool reacquired = false;
        for (;;) {
            t += rng.exponential(sm.busy_rate);
            ++n;
            if (n >= detail::kRunawaySenses)
                throw RunawayPolicyError("run_full_trial: sensing count exceeded the runaway guard");
            const bool busy_now = t > x_res;
            t += c.t_sense;
            if (!busy_now) {
                if (c.p_f > 0.0 && rng.uniform01() < c.p_f) continue; // false alarm again
                reacquired = true; // correctly saw idle
                break;
            }
            const bool detected = c.p_d >= 1.0 || rng.uniform01() < c.p_d;
            if (detected) break;  // stays off; this idle period is over for the user
            reacquired = true;    // missed: wrongly believes the channel idle
            break;
        }
        idle_loss += std::max(0.0, std::min(t, x_res) - std::min(off_start, x_res));
        if (!reacquired) break;
        st = SensingState{c.start_pv, 0.0, 0}; // policy restarts from its first interval
    }

    const double transmit = std::max(0.0, x_res - idle_loss);
    return {n, interference, missed, transmit, cost_from_counts(cm, n, interference), x};
}

struct AggregateMetrics {
    double mean_n = 0.0;
    double se_n = 0.0;
    double mean_interference = 0.0;
    double se_interference = 0.0;
    double mean_cost = 0.0;
    double se_cost = 0.0;
    double normalized_throughput = 0.0; // sum(transmit) / sum(idle)
    double se_throughput = 0.0;         // delta-method standard error of that ratio
    std::uint64_t trial_count = 0;
};

namespace detail {

/// Trials are accumulated in fixed chunks and the chunk partials merged in
/// chunk order, so aggregates are bitwise identical no matter how many
/// threads produced them.
constexpr std::uint64_t kAggChunk = 65536;

struct KahanAcc {
    double sum = 0.0;
    double carry = 0.0;
    void add(double v) {
        const double y = v - carry;
        const double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
};

struct MetricSums {
    std::uint64_t count = 0;
    KahanAcc n, n2, interf, interf2, cost, cost2, transmit, transmit2, idle, idle2, tx_idle;

    void add(const TrialMetrics& t) {
        ++count;
        const double ns = static_cast<double>(t.n_sense);
        n.add(ns);
        n2.add(ns * ns);
        interf.add(t.interference);
        interf2.add(t.interference * t.interference);
        cost.add(t.total_cost);
        cost2.add(t.total_cost * t.total_cost);
        transmit.add(t.transmit_time);
        transmit2.add(t.transmit_time * t.transmit_time);
        idle.add(t.idle_time);
        idle2.add(t.idle_time * t.idle_time);
        tx_idle.add(t.transmit_time * t.idle_time);
    }

    void merge(const MetricSums& o) {
        count += o.count;
        for (auto member : {&MetricSums::n, &MetricSums::n2, &MetricSums::interf,
                            &MetricSums::interf2, &MetricSums::cost, &MetricSums::cost2,
                            &MetricSums::transmit, &MetricSums::transmit2, &MetricSums::idle,
                            &MetricSums::idle2, &MetricSums::tx_idle}) {
            (this->*member).add((o.*member).sum);
            (this->*member).add(-(o.*member).carry);
        }
    }
};

inline AggregateMetrics finish_aggregate(const MetricSums& s) {
    if (s.count == 0) throw std::invalid_argument("aggregate: no trials");
    const double n = static_cast<double>(s.count);
    const auto mean_se = [&](const KahanAcc& sum, const KahanAcc& sumsq, double& mean_out,
                             double& se_out) {
        mean_out = sum.sum / n;
        if (s.count < 2) {
            se_out = 0.0;
            return;
        }
        const double var = std::max(0.0, (sumsq.sum - n * mean_out * mean_out) / (n - 1.0));
        se_out = std::sqrt(var / n);
    };
    AggregateMetrics out;
    out.trial_count = s.count;
    mean_se(s.n, s.n2, out.mean_n, out.se_n);
    mean_se(s.interf, s.interf2, out.mean_interference, out.se_interference);
    mean_se(s.cost, s.cost2, out.mean_cost, out.se_cost);

    if (s.idle.sum > 0.0) {
        const double ratio = s.transmit.sum / s.idle.sum;
        out.normalized_throughput = ratio;
        if (s.count >= 2) {
            // Delta method for a ratio of sums; the mean term vanishes since
            // mean(transmit) - ratio * mean(idle) = 0 by construction.
            const double var = std::max(
                0.0, (s.transmit2.sum - 2.0 * ratio * s.tx_idle.sum + ratio * ratio * s.idle2.sum) /
                         (n - 1.0));
            out.se_throughput = std::sqrt(var / n) / (s.idle.sum / n);
        }
    }
    return out;
}

} // namespace detail

/// Means, standard errors, and the ratio-of-sums throughput for a batch of
/// trials. Chunked exactly like run_many, so aggregating a stored batch and
/// streaming it produce bitwise-identical results.
inline AggregateMetrics aggregate(const std::vector<TrialMetrics>& trials) {
    if (trials.empty()) throw std::invalid_argument("aggregate: no trials");
    detail::MetricSums total;
    for (std::size_t lo = 0; lo < trials.size(); lo += detail::kAggChunk) {
        const std::size_t hi = std::min(trials.size(), lo + detail::kAggChunk);
        detail::MetricSums part;
        for (std::size_t i = lo; i < hi; ++i) part.add(trials[i]);
        total.merge(part);
    }
    return detail::finish_aggregate(total);
}

/// Run `trials` independent idle periods and aggregate them. Trial i draws
/// from its own substream keyed by (base_seed, i), so results are identical
/// for any thread count; threads only split the fixed 65536-trial chunks.
/// `forced_idles`, when nonempty, must have one idle duration per trial and
/// replaces the idle draws (the rest of each trial's stream is unchanged).
inline AggregateMetrics run_many(const ChannelModel& ch, const SensingModel& sm,
                                 const PolicyParams& params, const CostModel& cm,
                                 const SimFlags& flags, std::uint64_t trials,
                                 std::uint64_t base_seed, unsigned threads = 1,
                                 std::span<const double> forced_idles = {},
                                 std::size_t quad_points = 20001) {
    if (trials == 0) throw std::invalid_argument("run_many: need at least one trial");
    if (!forced_idles.empty() && forced_idles.size() != trials)
        throw std::invalid_argument("run_many: forced_idles must have one entry per trial");
    ch.validate();
    cm.validate();
    validate_params(params, ch.off_dist.k());
    const TrialContext ctx = make_trial_context(ch, sm, flags, quad_points);

    const std::uint64_t chunk_count = (trials + detail::kAggChunk - 1) / detail::kAggChunk;
    std::vector<detail::MetricSums> parts(chunk_count);

    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex error_mutex;

    const auto run_chunk = [&](std::uint64_t chunk) {
        detail::MetricSums& part = parts[chunk];
        const std::uint64_t lo = chunk * detail::kAggChunk;
        const std::uint64_t hi = std::min(trials, lo + detail::kAggChunk);
        for (std::uint64_t i = lo; i < hi; ++i) {
            RngStream rng = make_trial_stream(base_seed, i);
            std::optional<double> forced;
            if (!forced_idles.empty()) forced = forced_idles[i];
            part.add(run_full_trial(ch, sm, params, cm, flags, rng, &ctx, forced));
        }
    };

    if (threads <= 1 || chunk_count == 1) {
        for (std::uint64_t chunk = 0; chunk < chunk_count; ++chunk) run_chunk(chunk);
    } else {
        const unsigned worker_count =
            static_cast<unsigned>(std::min<std::uint64_t>(threads, chunk_count));
        std::vector<std::thread> workers;
        workers.reserve(worker_count);
        for (unsigned w = 0; w < worker_count; ++w) {
            workers.emplace_back([&, w] {
                for (std::uint64_t chunk = w; chunk < chunk_count; chunk += worker_count) {
                    if (failed.load(std::memory_order_relaxed)) return;
                    try {
                        run_chunk(chunk);
                    } catch (...) {
                        std::lock_guard<std::mutex> lock(error_mutex);
                        if (!first_error) first_error = std::current_exception();
                        failed.store(true, std::memory_order_relaxed);
                        return;
                    }
                }
            });
        }
        for (std::thread& worker : workers) worker.join();
        if (first_error) std::rethrow_exception(first_error);
    }

    detail::MetricSums total;
    for (const detail::MetricSums& part : parts) total.merge(part);
    return detail::finish_aggregate(total);
}

} // namespace csense
