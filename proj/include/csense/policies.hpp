#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "cost.hpp"
#include "errors.hpp"
#include "hyperexp.hpp"
#include "numerics.hpp"
#include "rng.hpp"

namespace csense {

/// Where a policy stands inside one idle period: the posterior over phases,
/// the idle time confirmed so far, and how many senses have happened.
struct SensingState {
    PhaseVector pv;
    double elapsed = 0.0;
    std::uint64_t index = 0;
};

struct PeriodicParams {
    double interval = 1.0;
};

struct ExponentialParams {
    double rate = 1.0; // intervals are Exp(rate) draws
};

struct OneStageParams {
    double first_interval = 1.0; // deterministic first wait
    double rate = 1.0;           // exponential intervals afterwards
};

struct MultishotParams {
    std::vector<double> intervals; // one per phase; reuse the last when exhausted
};

using PolicyParams = std::variant<PeriodicParams, ExponentialParams, OneStageParams, MultishotParams>;

inline const char* policy_name(const PolicyParams& params) {
    struct Visitor {
        const char* operator()(const PeriodicParams&) const { return "periodic"; }
        const char* operator()(const ExponentialParams&) const { return "exponential"; }
        const char* operator()(const OneStageParams&) const { return "one_stage"; }
        const char* operator()(const MultishotParams&) const { return "multishot"; }
    };
    return std::visit(Visitor{}, params);
}

/// Throws unless every interval/rate in the params is positive and finite and
/// a multishot schedule has exactly `phases` entries.
inline void validate_params(const PolicyParams& params, std::size_t phases) {
    struct Visitor {
        std::size_t phases;
        static void positive(double v, const char* what) {
            if (!(v > 0.0) || !std::isfinite(v))
                throw std::invalid_argument(std::string(what) + " must be positive and finite");
        }
        void operator()(const PeriodicParams& p) const { positive(p.interval, "periodic interval"); }
        void operator()(const ExponentialParams& p) const { positive(p.rate, "exponential rate"); }
        void operator()(const OneStageParams& p) const {
            positive(p.first_interval, "one_stage first_interval");
            positive(p.rate, "one_stage rate");
        }
        void operator()(const MultishotParams& p) const {
            if (p.intervals.size() != phases)
                throw std::invalid_argument("multishot needs one interval per phase");
            for (double v : p.intervals) positive(v, "multishot interval");
        }
    };
    std::visit(Visitor{phases}, params);
}

/// The interval a policy would choose at sensing index `index` when that
/// choice is deterministic; nullopt when the policy randomizes there.
inline std::optional<double> deterministic_interval(const PolicyParams& params,
                                                    std::uint64_t index) {
    struct Visitor {
        std::uint64_t index;
        std::optional<double> operator()(const PeriodicParams& p) const { return p.interval; }
        std::optional<double> operator()(const ExponentialParams&) const { return std::nullopt; }
        std::optional<double> operator()(const OneStageParams& p) const {
            return index == 0 ? std::optional<double>(p.first_interval) : std::nullopt;
        }
        std::optional<double> operator()(const MultishotParams& p) const {
            const std::size_t i = static_cast<std::size_t>(
                index < p.intervals.size() ? index : p.intervals.size() - 1);
            return p.intervals[i];
        }
    };
    return std::visit(Visitor{index}, params);
}

/// Next sensing interval for the given state. Randomized policies draw from
/// `rng`; deterministic ones leave the stream untouched.
inline double next_interval(const PolicyParams& params, const SensingState& state,
                            RngStream& rng) {
    if (auto fixed = deterministic_interval(params, state.index)) return *fixed;
    if (const auto* e = std::get_if<ExponentialParams>(&params)) return rng.exponential(e->rate);
    return rng.exponential(std::get<OneStageParams>(params).rate);
}

namespace detail {

inline void require_interior_weight(const CostModel& cm, const char* who) {
    if (!(cm.weight > 0.0) || !(cm.weight < 1.0))
        throw std::invalid_argument(std::string(who) + ": weight must lie strictly in (0, 1)");
}

} // namespace detail

/// Optimal constant interval against a single exponential idle phase of the
/// given rate. With a = rate * (weight/(1-weight)) * (c_sense/c_interf) the
/// minimizer of the per-cycle cost rate is
///   I* = (-1 - a - W_{-1}(-e^{-1-a})) / rate,
/// evaluated through the overflow-free Lambert companion so very cheap
/// sensing (huge a) stays exact.
inline double derive_periodic(const CostModel& cm, double rate) {
    cm.validate();
    detail::require_interior_weight(cm, "derive_periodic");
    if (!(rate > 0.0) || !std::isfinite(rate))
        throw std::invalid_argument("derive_periodic: rate must be positive and finite");
    if (!(cm.c_interf > 0.0))
        throw std::invalid_argument("derive_periodic: c_interf must be positive (otherwise waiting is free)");
    if (!(cm.c_sense > 0.0))
        throw std::invalid_argument("derive_periodic: c_sense must be positive (otherwise sensing is free)");
    const double a = rate * (cm.weight / cm.co_weight()) * (cm.c_sense / cm.c_interf);
    const double w = lambert_w_m1_negexp(1.0 + a);
    const double interval = (-1.0 - a - w) / rate;
    if (!(interval > 0.0) || !std::isfinite(interval))
        throw ConvergenceError("derive_periodic: optimum did not come out positive");
    return interval;
}

/// Long-run average cost per idle period of sensing every `interval` against
/// a single exponential phase: (w c_s + (1-w) c_i (I - (1-e^{-rI})/r)) / (1 - e^{-rI}).
inline double periodic_cost_rate(const CostModel& cm, double rate, double interval) {
    if (!(rate > 0.0) || !(interval > 0.0))
        throw std::invalid_argument("periodic_cost_rate: rate and interval must be positive");
    const double hit = -std::expm1(-rate * interval); // P(idle period ends inside one interval)
    const double overshoot = interval - hit / rate;
    return (cm.weight * cm.c_sense + cm.co_weight() * cm.c_interf * overshoot) / hit;
}

struct ExpPolicyDerivation {
    double rate = 0.0;   // optimal exponential sensing rate
    double c_star = 0.0; // its expected total cost per idle period
};

/// Optimal exponential sensing rate when the remaining idle time has the
/// given mean: rate* = sqrt((1-w) c_i / (w c_s mean)), with closed-form cost
/// w c_s + 2 sqrt(w (1-w) c_s c_i mean). Both are distribution-free given the
/// mean because Poisson sensing only feels E[X].
inline ExpPolicyDerivation derive_exponential_for_mean(const CostModel& cm, double mean_idle) {
    cm.validate();
    detail::require_interior_weight(cm, "derive_exponential");
    if (!(mean_idle > 0.0) || !std::isfinite(mean_idle))
        throw std::invalid_argument("derive_exponential: mean idle time must be positive and finite");
    if (!(cm.c_sense > 0.0) || !(cm.c_interf > 0.0))
        throw std::invalid_argument("derive_exponential: both cost coefficients must be positive");
    ExpPolicyDerivation out;
    out.rate = std::sqrt(cm.co_weight() * cm.c_interf / (cm.weight * cm.c_sense * mean_idle));
    out.c_star = cm.weight * cm.c_sense +
                 2.0 * std::sqrt(cm.weight * cm.co_weight() * cm.c_sense * cm.c_interf * mean_idle);
    return out;
}

inline ExpPolicyDerivation derive_exponential(const CostModel& cm, const HyperExp& d) {
    return derive_exponential_for_mean(cm, mean(d, d.initial_pv()));
}

/// Upper end of the interval search range. Intervals this long are already
/// dominated: the interference charge alone exceeds the value bound vbar.
/// The bound can undershoot for extreme parameter corners, so callers widen
/// it (doubling) whenever a search saturates at the top.
inline double sensing_upper_bound(const CostModel& cm, const HyperExp& d) {
    cm.validate();
    if (!(cm.weight < 1.0))
        throw std::invalid_argument("sensing_upper_bound: weight must be < 1");
    const double inv_min = 1.0 / d.min_rate();
    const double vbar = cm.co_weight() + cm.weight * (1.0 + inv_min) * cm.c_interf;
    return (vbar + 1.0 + inv_min) / cm.co_weight();
}

struct OneStageDerivation {
    double first_interval = 0.0; // grid minimizer of the two-term objective
    double rate = 0.0;           // optimal exponential rate given survival past it
    double c_total = 0.0;        // objective value at the minimizer
    double upper_bound = 0.0;    // search range actually used
    bool widened = false;        // true if the initial range had to be doubled
};

/// One deterministic first wait, then the optimal exponential policy against
/// the survivors' posterior. The first interval minimizes
///   C0(I1) + P(X > I1) * c_star(E[X | X > I1])
/// over the grid {step, 2*step, ..., upper_bound}; zero is excluded since an
/// immediate re-sense is degenerate. If the grid minimizer lands at the top,
/// the range doubles and the scan repeats.
inline OneStageDerivation derive_one_stage(const CostModel& cm, const HyperExp& d, double step) {
    cm.validate();
    detail::require_interior_weight(cm, "derive_one_stage");
    if (!(cm.c_sense > 0.0) || !(cm.c_interf > 0.0))
        throw std::invalid_argument("derive_one_stage: both cost coefficients must be positive");
    if (!(step > 0.0) || !std::isfinite(step))
        throw std::invalid_argument("derive_one_stage: step must be positive and finite");

    const PhaseVector p0 = d.initial_pv();
    const auto objective = [&](double first) {
        const PhaseVector after = residual_update(d, p0, first);
        return stage_cost(cm, d, p0, first) +
               survival(d, p0, first) * derive_exponential_for_mean(cm, mean(d, after)).c_star;
    };

    double upper = sensing_upper_bound(cm, d);
    bool widened = false;
    for (int attempt = 0; attempt < 60; ++attempt) {
        const GridMin best = minimize_scalar(objective, step, upper, step);
        if (best.argmin <= upper - 1.5 * step) {
            const PhaseVector after = residual_update(d, p0, best.argmin);
            const double rate = derive_exponential_for_mean(cm, mean(d, after)).rate;
            return {best.argmin, rate, best.value, upper, widened};
        }
        upper *= 2.0; // minimizer saturated at the top of the range
        widened = true;
    }
    throw ConvergenceError("derive_one_stage: search range kept saturating");
}

/// Phase-matched schedule: stage j uses the constant interval that is optimal
/// against the j-th most plausible remaining phase, ordered from the largest
/// rate (shortest expected idle) to the smallest. Since the single-phase
/// optimum is strictly decreasing in the rate, the schedule is strictly
/// increasing.
inline MultishotParams derive_multishot(const CostModel& cm, const HyperExp& d) {
    MultishotParams out;
    out.intervals.reserve(d.k());
    for (std::size_t j = d.k(); j-- > 0;)
        out.intervals.push_back(derive_periodic(cm, d.rate(j)));
    for (std::size_t i = 1; i < out.intervals.size(); ++i) {
        if (!(out.intervals[i] > out.intervals[i - 1]))
            throw ConvergenceError("derive_multishot: schedule failed to come out increasing");
    }
    return out;
}

} // namespace csense
