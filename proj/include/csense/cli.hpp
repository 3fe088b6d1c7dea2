#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "config.hpp"
#include "cost.hpp"
#include "errors.hpp"
#include "hyperexp.hpp"
#include "mdp.hpp"
#include "policies.hpp"
#include "simulator.hpp"

namespace csense {
namespace cli {

/// Shortest round-trip decimal form; the CSV writers use this so identical
/// runs emit byte-identical files.
inline std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

namespace detail {

struct OutputTarget {
    std::ofstream file;
    std::ostream* os = nullptr;

    explicit OutputTarget(const std::string& path) {
        if (path == "-") {
            os = &std::cout;
        } else {
            file.open(path, std::ios::binary | std::ios::trunc);
            if (!file) throw ConfigError("cannot open output file: " + path);
            os = &file;
        }
    }
};

/// Policy parameters for one (policy, cost model) cell, honoring overrides.
inline PolicyParams make_policy_params(const std::string& name, const RunConfig& cfg,
                                       const CostModel& cm, const HyperExp& d) {
    if (name == "periodic") {
        if (cfg.overrides.periodic_interval)
            return PeriodicParams{*cfg.overrides.periodic_interval};
        // With several phases the closed form needs one effective rate; use
        // the rate whose exponential matches the mean idle time.
        const double rate = (d.k() == 1) ? d.rate(0) : 1.0 / mean(d, d.initial_pv());
        return PeriodicParams{derive_periodic(cm, rate)};
    }
    if (name == "exponential") {
        if (cfg.overrides.exponential_rate)
            return ExponentialParams{*cfg.overrides.exponential_rate};
        return ExponentialParams{derive_exponential(cm, d).rate};
    }
    if (name == "one_stage") {
        if (cfg.overrides.one_stage_first && cfg.overrides.one_stage_rate)
            return OneStageParams{*cfg.overrides.one_stage_first, *cfg.overrides.one_stage_rate};
        if (cfg.overrides.one_stage_first) {
            const double first = *cfg.overrides.one_stage_first;
            const PhaseVector after = residual_update(d, d.initial_pv(), first);
            return OneStageParams{first, derive_exponential_for_mean(cm, mean(d, after)).rate};
        }
        const OneStageDerivation der = derive_one_stage(cm, d, cfg.one_stage_step);
        if (cfg.overrides.one_stage_rate)
            return OneStageParams{der.first_interval, *cfg.overrides.one_stage_rate};
        return OneStageParams{der.first_interval, der.rate};
    }
    if (cfg.overrides.multishot) return MultishotParams{*cfg.overrides.multishot};
    return derive_multishot(cm, d);
}

/// Semicolon-joined parameter list for CSV cells.
inline std::string params_cell(const PolicyParams& params) {
    struct Visitor {
        std::string operator()(const PeriodicParams& p) const { return format_double(p.interval); }
        std::string operator()(const ExponentialParams& p) const { return format_double(p.rate); }
        std::string operator()(const OneStageParams& p) const {
            return format_double(p.first_interval) + ";" + format_double(p.rate);
        }
        std::string operator()(const MultishotParams& p) const {
            std::string out;
            for (std::size_t i = 0; i < p.intervals.size(); ++i) {
                if (i) out += ";";
                out += format_double(p.intervals[i]);
            }
            return out;
        }
    };
    return std::visit(Visitor{}, params);
}

inline std::span<const double> forced_span(const RunConfig& cfg) {
    if (!cfg.injected_idles) return {};
    return {cfg.injected_idles->data(), cfg.injected_idles->size()};
}

inline std::uint64_t effective_trials(const RunConfig& cfg) {
    return cfg.injected_idles ? cfg.injected_idles->size() : cfg.trials;
}

} // namespace detail

/// `derive`: closed-form policy parameters (and optional DP cross-check) as a
/// JSON report, one entry per omega.
inline int cmd_derive(const RunConfig& cfg, std::ostream& os) {
    const HyperExp& d = cfg.channel.off_dist;
    nlohmann::json report = nlohmann::json::array();
    for (double omega : cfg.omegas) {
        const CostModel cm{cfg.c_sense, cfg.c_interf, omega};
        nlohmann::json entry;
        entry["omega"] = omega;
        entry["sensing_upper_bound"] = sensing_upper_bound(cm, d);
        nlohmann::json pol = nlohmann::json::object();
        for (const std::string& name : cfg.policies) {
            const PolicyParams params = detail::make_policy_params(name, cfg, cm, d);
            if (name == "periodic") {
                const double interval = std::get<PeriodicParams>(params).interval;
                nlohmann::json p = {{"interval", interval}};
                if (d.k() == 1) p["cost_rate"] = periodic_cost_rate(cm, d.rate(0), interval);
                p["truncated_cost"] = evaluate_policy_truncated(cm, d, params, 64);
                pol[name] = p;
            } else if (name == "exponential") {
                const double rate = std::get<ExponentialParams>(params).rate;
                const double mean_idle = mean(d, d.initial_pv());
                pol[name] = {{"rate", rate},
                             {"c_star", derive_exponential(cm, d).c_star},
                             {"expected_n", rate * mean_idle + 1.0},
                             {"expected_interference", 1.0 / rate}};
            } else if (name == "one_stage") {
                const auto& p = std::get<OneStageParams>(params);
                nlohmann::json jp = {{"first_interval", p.first_interval}, {"rate", p.rate}};
                if (!cfg.overrides.one_stage_first && !cfg.overrides.one_stage_rate) {
                    const OneStageDerivation der = derive_one_stage(cm, d, cfg.one_stage_step);
                    jp["c_total"] = der.c_total;
                    jp["upper_bound"] = der.upper_bound;
                    jp["widened"] = der.widened;
                }
                pol[name] = jp;
            } else {
                const auto& p = std::get<MultishotParams>(params);
                pol[name] = {{"intervals", p.intervals},
                             {"truncated_cost", evaluate_policy_truncated(cm, d, params, 64)}};
            }
        }
        entry["policies"] = pol;
        if (cfg.dp_check) {
            DpConfig dc;
            dc.horizon = cfg.dp_check->horizon;
            dc.action_grid = uniform_action_grid(cfg.dp_check->grid_size, sensing_upper_bound(cm, d));
            dc.tail_rule = cfg.dp_check->tail_rule;
            const DpResult r = solve(cm, d, dc);
            entry["dp_check"] = {{"value", r.value},
                                 {"first_action", r.first_action},
                                 {"node_count", r.stats.node_count},
                                 {"depth_reached", r.stats.depth_reached},
                                 {"path_actions", r.path_actions}};
        }
        report.push_back(entry);
    }
    os << report.dump(2) << "\n";
    os.flush();
    return 0;
}

/// `simulate`: one CSV row per (omega, policy) cell.
inline int cmd_simulate(const RunConfig& cfg, std::ostream& os) {
    const HyperExp& d = cfg.channel.off_dist;
    const std::string hash = config_hash(cfg);
    const std::uint64_t trials = detail::effective_trials(cfg);
    os << "policy,omega,trials,seed,mean_n,se_n,mean_interference,se_interference,"
          "mean_cost,se_cost,throughput,se_throughput,config_hash\n";
    try {
        for (double omega : cfg.omegas) {
            const CostModel cm{cfg.c_sense, cfg.c_interf, omega};
            for (const std::string& name : cfg.policies) {
                const PolicyParams params = detail::make_policy_params(name, cfg, cm, d);
                const AggregateMetrics agg =
                    run_many(cfg.channel, cfg.sensing, params, cm, cfg.flags, trials, cfg.seed,
                             cfg.threads, detail::forced_span(cfg), cfg.quadrature_points);
                os << name << ',' << format_double(omega) << ',' << trials << ',' << cfg.seed
                   << ',' << format_double(agg.mean_n) << ',' << format_double(agg.se_n) << ','
                   << format_double(agg.mean_interference) << ','
                   << format_double(agg.se_interference) << ',' << format_double(agg.mean_cost)
                   << ',' << format_double(agg.se_cost) << ','
                   << format_double(agg.normalized_throughput) << ','
                   << format_double(agg.se_throughput) << ',' << hash << '\n';
            }
        }
    } catch (const std::exception& e) {
        os << "# error: " << e.what() << '\n';
        os.flush();
        throw;
    }
    os.flush();
    return 0;
}

/// `sweep`: like simulate, but re-derives and re-runs every cell along the
/// configured axis (omega, load_scale, or p_f).
inline int cmd_sweep(const RunConfig& cfg, std::ostream& os) {
    if (!cfg.sweep) throw ConfigError("sweep command needs a sweep block in the config");
    const std::string hash = config_hash(cfg);
    const std::uint64_t trials = detail::effective_trials(cfg);
    os << "axis,axis_value,policy,omega,params,mean_n,se_n,mean_interference,se_interference,"
          "mean_cost,se_cost,throughput,se_throughput,trials,seed,config_hash\n";
    try {
        for (double value : cfg.sweep->values) {
            // Materialize the swept knob.
            ChannelModel channel = cfg.channel;
            SensingModel sensing = cfg.sensing;
            SimFlags flags = cfg.flags;
            std::vector<double> omegas = cfg.omegas;
            if (cfg.sweep->axis == "omega") {
                omegas = {value};
            } else if (cfg.sweep->axis == "load_scale") {
                // Scale the mean idle time by `value` (rates divided by it).
                std::vector<double> rates = cfg.channel.off_dist.rates();
                for (double& r : rates) r /= value;
                channel.off_dist = HyperExp(cfg.channel.off_dist.probs(), rates);
            } else { // p_f
                flags.sensing_error = true;
                sensing.p_f_override = value;
            }
            for (double omega : omegas) {
                const CostModel cm{cfg.c_sense, cfg.c_interf, omega};
                for (const std::string& name : cfg.policies) {
                    const PolicyParams params =
                        detail::make_policy_params(name, cfg, cm, channel.off_dist);
                    const AggregateMetrics agg =
                        run_many(channel, sensing, params, cm, flags, trials, cfg.seed,
                                 cfg.threads, detail::forced_span(cfg), cfg.quadrature_points);
                    os << cfg.sweep->axis << ',' << format_double(value) << ',' << name << ','
                       << format_double(omega) << ',' << detail::params_cell(params) << ','
                       << format_double(agg.mean_n) << ',' << format_double(agg.se_n) << ','
                       << format_double(agg.mean_interference) << ','
                       << format_double(agg.se_interference) << ','
                       << format_double(agg.mean_cost) << ',' << format_double(agg.se_cost) << ','
                       << format_double(agg.normalized_throughput) << ','
                       << format_double(agg.se_throughput) << ',' << trials << ',' << cfg.seed
                       << ',' << hash << '\n';
                }
            }
        }
    } catch (const std::exception& e) {
        os << "# error: " << e.what() << '\n';
        os.flush();
        throw;
    }
    os.flush();
    return 0;
}

/// `table`: policy rows against omega column groups for the three headline
/// metrics, as aligned text or CSV.
inline int cmd_table(const RunConfig& cfg, std::ostream& os, const std::string& format) {
    const HyperExp& d = cfg.channel.off_dist;
    const std::uint64_t trials = detail::effective_trials(cfg);
    const char* metric_names[] = {"mean_n", "mean_interference", "mean_cost"};

    // cells[policy][metric][omega]
    std::vector<std::vector<std::vector<double>>> cells(
        cfg.policies.size(),
        std::vector<std::vector<double>>(3, std::vector<double>(cfg.omegas.size(), 0.0)));
    for (std::size_t wi = 0; wi < cfg.omegas.size(); ++wi) {
        const CostModel cm{cfg.c_sense, cfg.c_interf, cfg.omegas[wi]};
        for (std::size_t pi = 0; pi < cfg.policies.size(); ++pi) {
            const PolicyParams params = detail::make_policy_params(cfg.policies[pi], cfg, cm, d);
            const AggregateMetrics agg =
                run_many(cfg.channel, cfg.sensing, params, cm, cfg.flags, trials, cfg.seed,
                         cfg.threads, detail::forced_span(cfg), cfg.quadrature_points);
            cells[pi][0][wi] = agg.mean_n;
            cells[pi][1][wi] = agg.mean_interference;
            cells[pi][2][wi] = agg.mean_cost;
        }
    }

    if (format == "csv") {
        os << "policy";
        for (const char* metric : metric_names)
            for (double omega : cfg.omegas) os << ',' << metric << '@' << format_double(omega);
        os << '\n';
        for (std::size_t pi = 0; pi < cfg.policies.size(); ++pi) {
            os << cfg.policies[pi];
            for (std::size_t mi = 0; mi < 3; ++mi)
                for (std::size_t wi = 0; wi < cfg.omegas.size(); ++wi)
                    os << ',' << format_double(cells[pi][mi][wi]);
            os << '\n';
        }
        os.flush();
        return 0;
    }

    // Aligned text: one block per metric.
    char buf[64];
    for (std::size_t mi = 0; mi < 3; ++mi) {
        os << metric_names[mi] << " (" << trials << " trials, seed " << cfg.seed << ")\n";
        os << "  " << std::string(12, ' ');
        for (double omega : cfg.omegas) {
            std::snprintf(buf, sizeof buf, "omega=%-8.3g", omega);
            os << buf << ' ';
        }
        os << '\n';
        for (std::size_t pi = 0; pi < cfg.policies.size(); ++pi) {
            std::snprintf(buf, sizeof buf, "  %-12s", cfg.policies[pi].c_str());
            os << buf;
            for (std::size_t wi = 0; wi < cfg.omegas.size(); ++wi) {
                std::snprintf(buf, sizeof buf, "%-14.6g", cells[pi][mi][wi]);
                os << buf;
            }
            os << '\n';
        }
        if (mi + 1 < 3) os << '\n';
    }
    os.flush();
    return 0;
}

namespace detail {

struct CommonFlags {
    std::string config_path;
    std::optional<std::uint64_t> trials;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::optional<double> omega;
    std::optional<std::string> policy;
    std::optional<std::string> out;

    void attach(CLI::App* cmd, bool with_run_knobs) {
        cmd->add_option("-c,--config", config_path, "JSON config file")->required();
        cmd->add_option("--out", out, "output path (- for stdout)");
        cmd->add_option("--omega", omega, "override: single omega");
        cmd->add_option("--policy", policy, "override: single policy");
        if (with_run_knobs) {
            cmd->add_option("--trials", trials, "override: trial count");
            cmd->add_option("--seed", seed, "override: base seed");
            cmd->add_option("--threads", threads, "override: worker threads");
        }
    }

    RunConfig load() const {
        RunConfig cfg = load_config_file(config_path);
        if (trials) {
            if (*trials == 0) throw ConfigError("trials must be >= 1");
            cfg.trials = *trials;
        }
        if (seed) cfg.seed = *seed;
        if (threads) {
            if (*threads == 0) throw ConfigError("threads must be >= 1");
            cfg.threads = *threads;
        }
        if (omega) {
            if (!(*omega > 0.0) || !(*omega < 1.0))
                throw ConfigError("omega must lie strictly in (0, 1)");
            cfg.omegas = {*omega};
        }
        if (policy) {
            const std::string& name = *policy;
            if (name != "periodic" && name != "exponential" && name != "one_stage" &&
                name != "multishot")
                throw ConfigError("unknown policy name: " + name);
            cfg.policies = {name};
        }
        if (out) cfg.output = *out;
        return cfg;
    }
};

} // namespace detail

/// Entry point behind main(). Exit codes: 0 success (including --help),
/// 2 config/usage errors, 3 runtime failures.
inline int run_cli(int argc, const char* const* argv) {
    CLI::App app{"sensing-interval policies for opportunistic channel access"};
    app.require_subcommand(1);

    detail::CommonFlags derive_flags, simulate_flags, sweep_flags, table_flags;
    std::string table_format = "text";

    CLI::App* derive = app.add_subcommand("derive", "closed-form policy parameters as JSON");
    derive_flags.attach(derive, false);

    CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo metrics as CSV");
    simulate_flags.attach(simulate, true);

    CLI::App* sweep = app.add_subcommand("sweep", "re-derive and simulate along an axis");
    sweep_flags.attach(sweep, true);

    CLI::App* table = app.add_subcommand("table", "policy-by-omega comparison table");
    table_flags.attach(table, true);
    table->add_option("--format", table_format, "text or csv")
        ->check(CLI::IsMember({"text", "csv"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e); // prints help or the usage error
        return code == 0 ? 0 : 2;
    }

    try {
        if (derive->parsed()) {
            const RunConfig cfg = derive_flags.load();
            detail::OutputTarget target(cfg.output);
            return cmd_derive(cfg, *target.os);
        }
        if (simulate->parsed()) {
            const RunConfig cfg = simulate_flags.load();
            detail::OutputTarget target(cfg.output);
            return cmd_simulate(cfg, *target.os);
        }
        if (sweep->parsed()) {
            const RunConfig cfg = sweep_flags.load();
            detail::OutputTarget target(cfg.output);
            return cmd_sweep(cfg, *target.os);
        }
        const RunConfig cfg = table_flags.load();
        detail::OutputTarget target(cfg.output);
        return cmd_table(cfg, *target.os, table_format);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
}

} // namespace cli
} // namespace csense
