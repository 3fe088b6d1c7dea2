#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "hyperexp.hpp"
#include "mdp.hpp"
#include "simulator.hpp"

namespace csense {

/// Explicit policy parameters that bypass derivation when present.
struct PolicyOverrides {
    std::optional<double> periodic_interval;
    std::optional<double> exponential_rate;
    std::optional<double> one_stage_first;
    std::optional<double> one_stage_rate;
    std::optional<std::vector<double>> multishot;
};

/// Optional DP cross-check attached to the derive command.
struct DpCheck {
    std::size_t horizon = 8;
    std::size_t grid_size = 64;
    TailRule tail_rule = TailRule::exponential_bound;
};

struct SweepSpec {
    std::string axis; // "omega", "load_scale" or "p_f"
    std::vector<double> values;
};

/// Everything one run needs, parsed from a JSON config file. Unknown keys
/// anywhere in the file are hard errors, as are out-of-range values.
struct RunConfig {
    explicit RunConfig(ChannelModel ch) : channel(std::move(ch)) {}

    ChannelModel channel;
    double c_sense = 1.0;
    double c_interf = 1.0;
    std::vector<double> omegas = {0.5};
    std::vector<std::string> policies = {"periodic", "exponential", "one_stage", "multishot"};
    PolicyOverrides overrides;
    std::uint64_t trials = 10000;
    std::uint64_t seed = 1;
    unsigned threads = 1;
    SimFlags flags;
    SensingModel sensing;
    std::optional<DpCheck> dp_check;
    double one_stage_step = 1e-4;
    std::optional<std::vector<double>> injected_idles;
    std::optional<SweepSpec> sweep;
    std::string output = "-";
    std::size_t quadrature_points = 20001;
};

namespace detail {

inline void check_keys(const nlohmann::json& obj, const std::string& where,
                       std::initializer_list<const char*> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* key : allowed) {
            if (it.key() == key) {
                known = true;
                break;
            }
        }
        if (!known) throw ConfigError("unknown config key: " + where + it.key());
    }
}

inline double as_number(const nlohmann::json& v, const std::string& name) {
    if (!v.is_number()) throw ConfigError("config key " + name + " must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError("config key " + name + " must be finite");
    return x;
}

inline double positive_number(const nlohmann::json& v, const std::string& name) {
    const double x = as_number(v, name);
    if (!(x > 0.0)) throw ConfigError("config key " + name + " must be positive");
    return x;
}

inline std::uint64_t as_count(const nlohmann::json& v, const std::string& name) {
    if (!v.is_number_unsigned())
        throw ConfigError("config key " + name + " must be a nonnegative integer");
    return v.get<std::uint64_t>();
}

inline std::vector<double> as_number_array(const nlohmann::json& v, const std::string& name) {
    if (!v.is_array() || v.empty())
        throw ConfigError("config key " + name + " must be a nonempty array of numbers");
    std::vector<double> out;
    out.reserve(v.size());
    for (const auto& e : v) out.push_back(as_number(e, name + "[]"));
    return out;
}

} // namespace detail

inline RunConfig parse_config(const nlohmann::json& root) {
    if (!root.is_object()) throw ConfigError("config root must be a JSON object");
    detail::check_keys(root, "",
                       {"channel", "cost", "omegas", "policies", "overrides", "trials", "seed",
                        "threads", "flags", "sensing", "dp_check", "one_stage_step",
                        "injected_idles", "sweep", "output", "quadrature_points"});

    if (!root.contains("channel") || !root["channel"].is_object())
        throw ConfigError("config needs a channel object");
    const auto& jch = root["channel"];
    detail::check_keys(jch, "channel.", {"probs", "rates", "on_rate"});
    if (!jch.contains("probs") || !jch.contains("rates"))
        throw ConfigError("channel needs probs and rates arrays");
    ChannelModel channel = [&] {
        try {
            HyperExp hed(detail::as_number_array(jch["probs"], "channel.probs"),
                         detail::as_number_array(jch["rates"], "channel.rates"));
            return ChannelModel{std::move(hed), 1.0};
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("channel: ") + e.what());
        }
    }();
    if (jch.contains("on_rate"))
        channel.on_rate = detail::positive_number(jch["on_rate"], "channel.on_rate");

    RunConfig cfg(std::move(channel));

    if (root.contains("cost")) {
        const auto& jc = root["cost"];
        detail::check_keys(jc, "cost.", {"c_sense", "c_interf"});
        if (jc.contains("c_sense")) cfg.c_sense = detail::as_number(jc["c_sense"], "cost.c_sense");
        if (jc.contains("c_interf"))
            cfg.c_interf = detail::as_number(jc["c_interf"], "cost.c_interf");
        if (!(cfg.c_sense >= 0.0) || !(cfg.c_interf >= 0.0))
            throw ConfigError("cost coefficients must be >= 0");
    }

    if (root.contains("omegas")) {
        cfg.omegas = detail::as_number_array(root["omegas"], "omegas");
        for (double w : cfg.omegas)
            if (!(w > 0.0) || !(w < 1.0))
                throw ConfigError("omegas entries must lie strictly in (0, 1)");
    }

    if (root.contains("policies")) {
        const auto& jp = root["policies"];
        if (!jp.is_array() || jp.empty())
            throw ConfigError("policies must be a nonempty array of policy names");
        cfg.policies.clear();
        for (const auto& e : jp) {
            if (!e.is_string()) throw ConfigError("policies entries must be strings");
            const std::string name = e.get<std::string>();
            if (name != "periodic" && name != "exponential" && name != "one_stage" &&
                name != "multishot")
                throw ConfigError("unknown policy name: " + name);
            for (const std::string& seen : cfg.policies)
                if (seen == name) throw ConfigError("duplicate policy name: " + name);
            cfg.policies.push_back(name);
        }
    }

    if (root.contains("overrides")) {
        const auto& jo = root["overrides"];
        detail::check_keys(jo, "overrides.",
                           {"periodic_interval", "exponential_rate", "one_stage_first",
                            "one_stage_rate", "multishot"});
        if (jo.contains("periodic_interval"))
            cfg.overrides.periodic_interval =
                detail::positive_number(jo["periodic_interval"], "overrides.periodic_interval");
        if (jo.contains("exponential_rate"))
            cfg.overrides.exponential_rate =
                detail::positive_number(jo["exponential_rate"], "overrides.exponential_rate");
        if (jo.contains("one_stage_first"))
            cfg.overrides.one_stage_first =
                detail::positive_number(jo["one_stage_first"], "overrides.one_stage_first");
        if (jo.contains("one_stage_rate"))
            cfg.overrides.one_stage_rate =
                detail::positive_number(jo["one_stage_rate"], "overrides.one_stage_rate");
        if (jo.contains("multishot")) {
            auto intervals = detail::as_number_array(jo["multishot"], "overrides.multishot");
            for (double v : intervals)
                if (!(v > 0.0)) throw ConfigError("overrides.multishot entries must be positive");
            if (intervals.size() != cfg.channel.off_dist.k())
                throw ConfigError("overrides.multishot needs one interval per channel phase");
            cfg.overrides.multishot = std::move(intervals);
        }
    }

    if (root.contains("trials")) {
        cfg.trials = detail::as_count(root["trials"], "trials");
        if (cfg.trials == 0) throw ConfigError("trials must be >= 1");
    }
    if (root.contains("seed")) cfg.seed = detail::as_count(root["seed"], "seed");
    if (root.contains("threads")) {
        const std::uint64_t t = detail::as_count(root["threads"], "threads");
        if (t == 0 || t > 1024) throw ConfigError("threads must lie in [1, 1024]");
        cfg.threads = static_cast<unsigned>(t);
    }

    if (root.contains("flags")) {
        const auto& jf = root["flags"];
        detail::check_keys(jf, "flags.", {"sensing_error", "delayed_occupancy", "sensing_duration"});
        const auto flag = [&](const char* key, bool& out) {
            if (!jf.contains(key)) return;
            if (!jf[key].is_boolean())
                throw ConfigError(std::string("flags.") + key + " must be a boolean");
            out = jf[key].get<bool>();
        };
        flag("sensing_error", cfg.flags.sensing_error);
        flag("delayed_occupancy", cfg.flags.delayed_occupancy);
        flag("sensing_duration", cfg.flags.sensing_duration);
    }

    if (root.contains("sensing")) {
        const auto& js = root["sensing"];
        detail::check_keys(js, "sensing.",
                           {"p_detect", "snr", "sample_rate", "t_sense", "busy_rate",
                            "p_f_override"});
        if (js.contains("p_detect")) {
            cfg.sensing.p_detect = detail::as_number(js["p_detect"], "sensing.p_detect");
            if (!(cfg.sensing.p_detect > 0.0) || !(cfg.sensing.p_detect <= 1.0))
                throw ConfigError("sensing.p_detect must lie in (0, 1]");
        }
        if (js.contains("snr"))
            cfg.sensing.snr = detail::positive_number(js["snr"], "sensing.snr");
        if (js.contains("sample_rate"))
            cfg.sensing.sample_rate = detail::positive_number(js["sample_rate"], "sensing.sample_rate");
        if (js.contains("t_sense")) {
            cfg.sensing.t_sense = detail::as_number(js["t_sense"], "sensing.t_sense");
            if (!(cfg.sensing.t_sense >= 0.0)) throw ConfigError("sensing.t_sense must be >= 0");
        }
        if (js.contains("busy_rate"))
            cfg.sensing.busy_rate = detail::positive_number(js["busy_rate"], "sensing.busy_rate");
        if (js.contains("p_f_override")) {
            const double pf = detail::as_number(js["p_f_override"], "sensing.p_f_override");
            if (!(pf >= 0.0) || !(pf < 1.0))
                throw ConfigError("sensing.p_f_override must lie in [0, 1)");
            cfg.sensing.p_f_override = pf;
        }
    }

    if (root.contains("dp_check")) {
        const auto& jd = root["dp_check"];
        detail::check_keys(jd, "dp_check.", {"horizon", "grid_size", "tail_rule"});
        DpCheck check;
        if (jd.contains("horizon")) {
            check.horizon = detail::as_count(jd["horizon"], "dp_check.horizon");
            if (check.horizon < 1) throw ConfigError("dp_check.horizon must be >= 1");
        }
        if (jd.contains("grid_size")) {
            check.grid_size = detail::as_count(jd["grid_size"], "dp_check.grid_size");
            if (check.grid_size < 2) throw ConfigError("dp_check.grid_size must be >= 2");
        }
        if (jd.contains("tail_rule")) {
            if (!jd["tail_rule"].is_string())
                throw ConfigError("dp_check.tail_rule must be a string");
            const std::string rule = jd["tail_rule"].get<std::string>();
            if (rule == "zero")
                check.tail_rule = TailRule::zero;
            else if (rule == "exponential_bound")
                check.tail_rule = TailRule::exponential_bound;
            else
                throw ConfigError("dp_check.tail_rule must be zero or exponential_bound");
        }
        cfg.dp_check = check;
    }

    if (root.contains("one_stage_step"))
        cfg.one_stage_step = detail::positive_number(root["one_stage_step"], "one_stage_step");

    if (root.contains("injected_idles")) {
        auto idles = detail::as_number_array(root["injected_idles"], "injected_idles");
        for (double v : idles)
            if (!(v >= 0.0)) throw ConfigError("injected_idles entries must be >= 0");
        cfg.injected_idles = std::move(idles);
    }

    if (root.contains("sweep")) {
        const auto& js = root["sweep"];
        detail::check_keys(js, "sweep.", {"axis", "values"});
        if (!js.contains("axis") || !js["axis"].is_string())
            throw ConfigError("sweep needs a string axis");
        SweepSpec sweep;
        sweep.axis = js["axis"].get<std::string>();
        if (sweep.axis != "omega" && sweep.axis != "load_scale" && sweep.axis != "p_f")
            throw ConfigError("sweep.axis must be omega, load_scale or p_f");
        if (!js.contains("values")) throw ConfigError("sweep needs a values array");
        sweep.values = detail::as_number_array(js["values"], "sweep.values");
        for (double v : sweep.values) {
            if (sweep.axis == "omega" && (!(v > 0.0) || !(v < 1.0)))
                throw ConfigError("sweep omega values must lie strictly in (0, 1)");
            if (sweep.axis == "load_scale" && !(v > 0.0))
                throw ConfigError("sweep load_scale values must be positive");
            if (sweep.axis == "p_f" && (!(v >= 0.0) || !(v < 1.0)))
                throw ConfigError("sweep p_f values must lie in [0, 1)");
        }
        cfg.sweep = std::move(sweep);
    }

    if (root.contains("output")) {
        if (!root["output"].is_string()) throw ConfigError("output must be a string path or -");
        cfg.output = root["output"].get<std::string>();
    }

    if (root.contains("quadrature_points")) {
        cfg.quadrature_points = detail::as_count(root["quadrature_points"], "quadrature_points");
        if (cfg.quadrature_points < 3) throw ConfigError("quadrature_points must be >= 3");
    }

    return cfg;
}

inline RunConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
    }
    return parse_config(root);
}

/// Canonical JSON image of the effective config: every value that influences
/// the computed numbers appears, keys are sorted (nlohmann objects iterate
/// alphabetically), optionals only when set. Hashing this pins a run's
/// provenance into its output. The output path and the thread count are
/// deliberately absent: neither changes a single result byte (aggregation is
/// thread-count invariant), so runs differing only there hash identically.
inline nlohmann::json config_to_json(const RunConfig& cfg) {
    nlohmann::json j;
    j["channel"] = {{"probs", cfg.channel.off_dist.probs()},
                    {"rates", cfg.channel.off_dist.rates()},
                    {"on_rate", cfg.channel.on_rate}};
    j["cost"] = {{"c_sense", cfg.c_sense}, {"c_interf", cfg.c_interf}};
    j["omegas"] = cfg.omegas;
    j["policies"] = cfg.policies;
    nlohmann::json jo = nlohmann::json::object();
    if (cfg.overrides.periodic_interval) jo["periodic_interval"] = *cfg.overrides.periodic_interval;
    if (cfg.overrides.exponential_rate) jo["exponential_rate"] = *cfg.overrides.exponential_rate;
    if (cfg.overrides.one_stage_first) jo["one_stage_first"] = *cfg.overrides.one_stage_first;
    if (cfg.overrides.one_stage_rate) jo["one_stage_rate"] = *cfg.overrides.one_stage_rate;
    if (cfg.overrides.multishot) jo["multishot"] = *cfg.overrides.multishot;
    if (!jo.empty()) j["overrides"] = jo;
    j["trials"] = cfg.trials;
    j["seed"] = cfg.seed;
    j["flags"] = {{"sensing_error", cfg.flags.sensing_error},
                  {"delayed_occupancy", cfg.flags.delayed_occupancy},
                  {"sensing_duration", cfg.flags.sensing_duration}};
    nlohmann::json js = {{"p_detect", cfg.sensing.p_detect},
                         {"snr", cfg.sensing.snr},
                         {"sample_rate", cfg.sensing.sample_rate},
                         {"t_sense", cfg.sensing.t_sense},
                         {"busy_rate", cfg.sensing.busy_rate}};
    if (cfg.sensing.p_f_override) js["p_f_override"] = *cfg.sensing.p_f_override;
    j["sensing"] = js;
    if (cfg.dp_check) {
        j["dp_check"] = {{"horizon", cfg.dp_check->horizon},
                         {"grid_size", cfg.dp_check->grid_size},
                         {"tail_rule", cfg.dp_check->tail_rule == TailRule::zero
                                           ? "zero"
                                           : "exponential_bound"}};
    }
    j["one_stage_step"] = cfg.one_stage_step;
    if (cfg.injected_idles) j["injected_idles"] = *cfg.injected_idles;
    if (cfg.sweep) j["sweep"] = {{"axis", cfg.sweep->axis}, {"values", cfg.sweep->values}};
    j["quadrature_points"] = cfg.quadrature_points;
    return j;
}

/// FNV-1a 64-bit over the canonical config dump, as 16 hex digits.
inline std::string config_hash(const RunConfig& cfg) {
    const std::string dump = config_to_json(cfg).dump();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : dump) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

} // namespace csense
