#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <unordered_map>
#include <variant>
#include <vector>

#include "cost.hpp"
#include "errors.hpp"
#include "hyperexp.hpp"
#include "policies.hpp"
#include "rng.hpp"

namespace csense {

/// What the DP charges for idle periods that outlive the horizon.
enum class TailRule {
    zero,             // truncate: free past the horizon (lower-bounds the true value)
    exponential_bound // charge the closed-form optimal exponential cost of the tail posterior
};

struct DpConfig {
    std::size_t horizon = 8;          // number of sensing decisions to optimize
    std::vector<double> action_grid;  // candidate intervals, strictly increasing, all > 0
    TailRule tail_rule = TailRule::exponential_bound;
    double state_quantum = 1e-9;      // posterior components quantized to this before dedup
    std::size_t max_nodes = 4'000'000;
    double error_p_f = 0.0;           // false-alarm rate folded into the continuation, if any

    void validate() const {
        if (horizon < 1) throw std::invalid_argument("DpConfig: horizon must be >= 1");
        if (action_grid.size() < 2)
            throw std::invalid_argument("DpConfig: action grid needs at least two intervals");
        double prev = 0.0;
        for (double a : action_grid) {
            if (!(a > prev) || !std::isfinite(a))
                throw std::invalid_argument(
                    "DpConfig: action grid must be strictly increasing and positive");
            prev = a;
        }
        if (!(state_quantum > 0.0))
            throw std::invalid_argument("DpConfig: state_quantum must be positive");
        if (max_nodes < 1) throw std::invalid_argument("DpConfig: max_nodes must be >= 1");
        if (!(error_p_f >= 0.0) || !(error_p_f < 1.0))
            throw std::invalid_argument("DpConfig: error_p_f must lie in [0, 1)");
    }
};

/// Evenly spaced action grid {upper/z, 2*upper/z, ..., upper}.
inline std::vector<double> uniform_action_grid(std::size_t z, double upper) {
    if (z < 2) throw std::invalid_argument("uniform_action_grid: need at least two points");
    if (!(upper > 0.0) || !std::isfinite(upper))
        throw std::invalid_argument("uniform_action_grid: upper must be positive and finite");
    std::vector<double> grid(z);
    for (std::size_t i = 0; i < z; ++i)
        grid[i] = upper * static_cast<double>(i + 1) / static_cast<double>(z);
    return grid;
}

struct PolicyTreeStats {
    std::size_t node_count = 0;    // distinct quantized states across all levels
    std::size_t depth_reached = 0; // levels actually expanded
};

struct DpResult {
    double value = 0.0;        // optimal expected total cost from the prior state
    double first_action = 0.0; // optimal first interval
    PolicyTreeStats stats;
    std::vector<double> path_actions; // greedy action sequence along the always-idle path
};

namespace detail {

struct QuantizedKeyHash {
    std::size_t operator()(const std::vector<std::int64_t>& key) const {
        std::uint64_t h = 1469598103934665603ULL;
        for (std::int64_t v : key) {
            h ^= splitmix64(static_cast<std::uint64_t>(v));
            h *= 1099511628211ULL;
        }
        return static_cast<std::size_t>(h);
    }
};

/// One DP level: the distinct posteriors reachable after that many senses,
/// with a quantized-key lookup for dedup and child resolution.
struct DpLevel {
    std::vector<PhaseVector> states;
    std::unordered_map<std::vector<std::int64_t>, std::size_t, QuantizedKeyHash> lookup;
};

inline std::vector<std::int64_t> quantize_state(const PhaseVector& pv, double quantum) {
    std::vector<std::int64_t> key(pv.p.size());
    for (std::size_t i = 0; i < pv.p.size(); ++i)
        key[i] = static_cast<std::int64_t>(std::llround(pv.p[i] / quantum));
    return key;
}

} // namespace detail

/// Exact finite-horizon value iteration over the posterior-simplex states the
/// action grid can reach. Bellman recursion, j = 0..horizon-1:
///   V_j(pv) = min_a [ stage_cost(pv, a) + survival(pv, a) (1 - p_f) V_{j+1}(update(pv, a)) ],
/// with V_horizon given by the tail rule. States are deduplicated after
/// quantizing each posterior component, which collapses the exponential
/// action tree to polynomial size on uniform grids. Throws
/// BudgetExceededError if the reachable set outgrows max_nodes. Ties on the
/// minimum break toward the smaller interval (the grid is scanned ascending).
inline DpResult solve(const CostModel& cm, const HyperExp& d, const DpConfig& cfg) {
    cm.validate();
    cfg.validate();

    const std::size_t horizon = cfg.horizon;
    std::vector<detail::DpLevel> levels(horizon + 1);
    levels[0].states.push_back(d.initial_pv());
    levels[0].lookup.emplace(detail::quantize_state(levels[0].states[0], cfg.state_quantum), 0);
    std::size_t node_count = 1;

    // Forward pass: discover every reachable quantized posterior per level.
    for (std::size_t j = 0; j < horizon; ++j) {
        detail::DpLevel& next = levels[j + 1];
        for (const PhaseVector& pv : levels[j].states) {
            for (double action : cfg.action_grid) {
                PhaseVector child = residual_update(d, pv, action);
                auto key = detail::quantize_state(child, cfg.state_quantum);
                if (next.lookup.find(key) != next.lookup.end()) continue;
                if (++node_count > cfg.max_nodes)
                    throw BudgetExceededError("solve: reachable state set exceeded max_nodes",
                                              node_count, j + 1);
                next.lookup.emplace(std::move(key), next.states.size());
                next.states.push_back(std::move(child));
            }
        }
    }

    // Terminal values from the tail rule.
    std::vector<double> value_next(levels[horizon].states.size(), 0.0);
    if (cfg.tail_rule == TailRule::exponential_bound) {
        for (std::size_t s = 0; s < levels[horizon].states.size(); ++s)
            value_next[s] =
                derive_exponential_for_mean(cm, mean(d, levels[horizon].states[s])).c_star;
    }

    // Backward induction, recomputing each transition instead of storing it.
    const double carry = 1.0 - cfg.error_p_f;
    std::vector<std::vector<std::size_t>> best_action(horizon); // per level, per state
    std::vector<double> value_here;
    for (std::size_t j = horizon; j-- > 0;) {
        const detail::DpLevel& level = levels[j];
        const detail::DpLevel& next = levels[j + 1];
        value_here.assign(level.states.size(), 0.0);
        best_action[j].assign(level.states.size(), 0);
        for (std::size_t s = 0; s < level.states.size(); ++s) {
            const PhaseVector& pv = level.states[s];
            double best = std::numeric_limits<double>::infinity();
            std::size_t best_idx = 0;
            for (std::size_t a = 0; a < cfg.action_grid.size(); ++a) {
                const double action = cfg.action_grid[a];
                const PhaseVector child = residual_update(d, pv, action);
                const auto it = next.lookup.find(detail::quantize_state(child, cfg.state_quantum));
                const double cont = value_next[it->second];
                const double total =
                    stage_cost(cm, d, pv, action) + survival(d, pv, action) * carry * cont;
                if (total < best) {
                    best = total;
                    best_idx = a;
                }
            }
            value_here[s] = best;
            best_action[j][s] = best_idx;
        }
        value_next = value_here;
    }

    // Greedy action path from the root, following the always-idle branch.
    DpResult out;
    out.value = value_next[0];
    out.first_action = cfg.action_grid[best_action[0][0]];
    out.stats = {node_count, horizon};
    out.path_actions.reserve(horizon);
    std::size_t state = 0;
    for (std::size_t j = 0; j < horizon; ++j) {
        const double action = cfg.action_grid[best_action[j][state]];
        out.path_actions.push_back(action);
        const PhaseVector child = residual_update(d, levels[j].states[state], action);
        state = levels[j + 1].lookup.at(detail::quantize_state(child, cfg.state_quantum));
    }
    return out;
}

/// Expected total cost of a deterministic policy over `horizon` stages plus
/// the tail charge. Only periodic and multishot policies qualify; randomized
/// families have closed forms and are rejected here.
inline double evaluate_policy_truncated(const CostModel& cm, const HyperExp& d,
                                        const PolicyParams& params, std::size_t horizon,
                                        TailRule tail_rule = TailRule::exponential_bound) {
    cm.validate();
    if (horizon < 1)
        throw std::invalid_argument("evaluate_policy_truncated: horizon must be >= 1");
    if (std::holds_alternative<ExponentialParams>(params) ||
        std::holds_alternative<OneStageParams>(params))
        throw std::invalid_argument(
            "evaluate_policy_truncated: only deterministic policies are supported");
    validate_params(params, d.k());

    PhaseVector pv = d.initial_pv();
    double reach = 1.0;
    double total = 0.0;
    for (std::size_t j = 0; j < horizon; ++j) {
        const double interval = *deterministic_interval(params, j);
        total += reach * stage_cost(cm, d, pv, interval);
        reach *= survival(d, pv, interval);
        pv = residual_update(d, pv, interval);
    }
    if (tail_rule == TailRule::exponential_bound)
        total += reach * derive_exponential_for_mean(cm, mean(d, pv)).c_star;
    return total;
}

} // namespace csense
