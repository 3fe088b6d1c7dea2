#pragma once

#include <stdexcept>
#include <string>

namespace csense {

/// Configuration file / option validation failure. CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// An iterative numerical routine failed to converge within its budget.
class ConvergenceError : public std::runtime_error {
public:
    explicit ConvergenceError(const std::string& what) : std::runtime_error(what) {}
};

/// realized_total_cost ran off the end of the supplied interval list.
class ExhaustedIntervalsError : public std::runtime_error {
public:
    explicit ExhaustedIntervalsError(const std::string& what) : std::runtime_error(what) {}
};

/// A simulated trial exceeded the sensing-count runaway guard.
class RunawayPolicyError : public std::runtime_error {
public:
    explicit RunawayPolicyError(const std::string& what) : std::runtime_error(what) {}
};

/// The DP solver hit its node budget; partial stats are in the message.
class BudgetExceededError : public std::runtime_error {
public:
    BudgetExceededError(const std::string& what, std::size_t nodes, std::size_t depth)
        : std::runtime_error(what), node_count(nodes), depth_reached(depth) {}
    std::size_t node_count;
    std::size_t depth_reached;
};

} // namespace csense
