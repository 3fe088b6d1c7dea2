#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>

#include "errors.hpp"
#include "hyperexp.hpp"

namespace csense {

/// Weighted two-term cost: each sense costs c_sense, each unit of
/// interference (transmission past the idle period's end) costs c_interf,
/// traded off by weight in [0, 1].
struct CostModel {
    double c_sense = 1.0;
    double c_interf = 1.0;
    double weight = 0.5;

    double co_weight() const { return 1.0 - weight; }

    void validate() const {
        if (!(c_sense >= 0.0) || !std::isfinite(c_sense))
            throw std::invalid_argument("CostModel: c_sense must be finite and >= 0");
        if (!(c_interf >= 0.0) || !std::isfinite(c_interf))
            throw std::invalid_argument("CostModel: c_interf must be finite and >= 0");
        if (!(weight >= 0.0) || !(weight <= 1.0))
            throw std::invalid_argument("CostModel: weight must lie in [0, 1]");
        if (c_sense == 0.0 && c_interf == 0.0)
            throw std::invalid_argument("CostModel: c_sense and c_interf cannot both be zero");
    }
};

/// Expected cost of one more sensing step of length `interval` from state pv:
/// the certain sensing charge plus the expected interference charge.
inline double stage_cost(const CostModel& cm, const HyperExp& d, const PhaseVector& pv,
                         double interval) {
    return cm.weight * cm.c_sense +
           cm.co_weight() * cm.c_interf * interference_expectation(d, pv, interval);
}

/// Realized cost as a function of the trial's counts — the same identity the
/// simulator uses, kept in one place so analytic and simulated totals agree
/// exactly: weight*c_sense*n + (1-weight)*c_interf*interference.
inline double cost_from_counts(const CostModel& cm, std::uint64_t n, double interference) {
    return cm.weight * cm.c_sense * static_cast<double>(n) +
           cm.co_weight() * cm.c_interf * interference;
}

struct RealizedCost {
    double cost = 0.0;
    std::uint64_t n = 0;       // senses performed, including the one that found the channel busy
    double interference = 0.0; // transmission time past the idle period's end
};

/// Walk a fixed interval schedule against one realized idle duration: the
/// user senses at the cumulative interval ends and stops at the first sense
/// strictly past `idle` (a sense landing exactly at the boundary still sees
/// the channel idle and continues). Throws ExhaustedIntervalsError if the
/// schedule runs out first.
inline RealizedCost realized_total_cost(const CostModel& cm, std::span<const double> intervals,
                                        double idle) {
    if (intervals.empty())
        throw std::invalid_argument("realized_total_cost: interval schedule is empty");
    if (!(idle >= 0.0) || !std::isfinite(idle))
        throw std::invalid_argument("realized_total_cost: idle duration must be finite and >= 0");
    double cum = 0.0;
    std::uint64_t n = 0;
    for (double interval : intervals) {
        if (!(interval > 0.0) || !std::isfinite(interval))
            throw std::invalid_argument("realized_total_cost: intervals must be positive and finite");
        cum += interval;
        ++n;
        if (cum > idle) {
            const double interference = cum - idle;
            return {cost_from_counts(cm, n, interference), n, interference};
        }
    }
    throw ExhaustedIntervalsError(
        "realized_total_cost: schedule ended before the idle period did");
}

/// Expected total cost of a deterministic interval schedule, truncated at the
/// schedule's end: sum over stages of P(still idle at stage start) times that
/// stage's expected cost, with the posterior advanced between stages.
inline double expected_total_cost_recursive(const CostModel& cm, const HyperExp& d,
                                            std::span<const double> intervals) {
    if (intervals.empty())
        throw std::invalid_argument("expected_total_cost_recursive: interval schedule is empty");
    PhaseVector pv = d.initial_pv();
    double reach = 1.0; // P(channel still idle when this stage starts)
    double total = 0.0;
    for (double interval : intervals) {
        if (!(interval > 0.0) || !std::isfinite(interval))
            throw std::invalid_argument(
                "expected_total_cost_recursive: intervals must be positive and finite");
        total += reach * stage_cost(cm, d, pv, interval);
        reach *= survival(d, pv, interval);
        pv = residual_update(d, pv, interval);
    }
    return total;
}

} // namespace csense
