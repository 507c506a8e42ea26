#pragma once

#include <array>
#include <cstdint>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "xfercast/errors.hpp"
#include "xfercast/evaluation.hpp"
#include "xfercast/fusion.hpp"
#include "xfercast/synth.hpp"
#include "xfercast/univariate.hpp"

namespace xfercast {

namespace detail {

inline std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
    return std::string(s.substr(b, e - b));
}

/// Flat "key = value" lines; '#' starts a comment, keys may repeat.
inline std::vector<std::pair<std::string, std::string>> parse_key_values(std::istream& in) {
    std::vector<std::pair<std::string, std::string>> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (is_blank_or_comment(line)) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
        std::string key = trim(std::string_view(line).substr(0, eq));
        std::string value = trim(std::string_view(line).substr(eq + 1));
        if (key.empty())
            throw ConfigError("line " + std::to_string(lineno) + ": empty key");
        out.emplace_back(std::move(key), std::move(value));
    }
    return out;
}

inline std::vector<std::string> split_list(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i <= s.size()) {
        const std::size_t j = std::min(s.find(sep, i), s.size());
        const std::string item = trim(s.substr(i, j - i));
        if (!item.empty()) out.push_back(item);
        i = j + 1;
    }
    return out;
}

inline std::int64_t to_int(const std::string& v, const std::string& key) {
    try {
        std::size_t pos = 0;
        const std::int64_t r = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': expected an integer, got '" + v + "'");
    }
}

inline double to_double(const std::string& v, const std::string& key) {
    try {
        std::size_t pos = 0;
        const double r = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
    }
}

inline bool to_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("key '" + key + "': expected true/false, got '" + v + "'");
}

inline std::array<double, 4> to_weights(const std::string& v, const std::string& key) {
    const auto parts = split_list(v, ',');
    if (parts.size() != 4)
        throw ConfigError("key '" + key + "': expected 4 comma-separated values");
    std::array<double, 4> out{};
    for (std::size_t i = 0; i < 4; ++i) out[i] = to_double(parts[i], key);
    return out;
}

/// "VARS:FILL[:DEGREE]", e.g. "ND:avg" or "N:lv:2".
inline FusionConfig parse_fusion_item(const std::string& item) {
    const auto parts = split_list(item, ':');
    if (parts.size() < 2 || parts.size() > 3)
        throw ConfigError("fusion spec '" + item + "': expected VARS:FILL[:DEGREE]");
    FusionConfig cfg;
    cfg.variables = parse_varset(parts[0]);
    cfg.fill = parse_fill(parts[1]);
    if (parts.size() == 3) {
        cfg.degree = static_cast<int>(to_int(parts[2], "fusion degree"));
        if (cfg.degree < 1 || cfg.degree > 4)
            throw ConfigError("fusion spec '" + item + "': degree must be in 1..4");
    }
    return cfg;
}

}  // namespace detail

/// All nine variable-set x fill combinations at degree 1, in report order.
inline std::vector<FusionConfig> default_fusion_configs() {
    std::vector<FusionConfig> out;
    for (VarSet v : {VarSet::N, VarSet::D, VarSet::ND})
        for (FillStrategy f : {FillStrategy::NoFill, FillStrategy::LastValue, FillStrategy::Avg})
            out.push_back({v, f, 1});
    return out;
}

/// Inputs and options of one evaluation/prediction run.
struct RunConfig {
    std::string transfer_log;
    std::string probe_log;
    std::string disk_log;
    std::vector<PredictorSpec> specs = default_specs();
    std::vector<FusionConfig> fusion = default_fusion_configs();
    SuiteConfig suite;
    std::string output;
};

inline RunConfig parse_run_config(std::istream& in) {
    RunConfig cfg;
    bool saw_specs = false, saw_fusion = false;
    // single-config form: variables/fill/degree keys build one fusion entry
    FusionConfig single;
    bool saw_single = false;
    for (const auto& [key, value] : detail::parse_key_values(in)) {
        if (key == "transfer_log") cfg.transfer_log = value;
        else if (key == "probe_log") cfg.probe_log = value;
        else if (key == "disk_log") cfg.disk_log = value;
        else if (key == "predictors") {
            if (!saw_specs) cfg.specs.clear();
            saw_specs = true;
            for (const auto& name : detail::split_list(value, ','))
                cfg.specs.push_back(parse_spec(name));
        } else if (key == "fusion") {
            if (!saw_fusion) cfg.fusion.clear();
            saw_fusion = true;
            for (const auto& item : detail::split_list(value, ','))
                cfg.fusion.push_back(detail::parse_fusion_item(item));
        } else if (key == "variables") {
            single.variables = parse_varset(value);
            saw_single = true;
        } else if (key == "fill") {
            single.fill = parse_fill(value);
            saw_single = true;
        } else if (key == "degree") {
            single.degree = static_cast<int>(detail::to_int(value, key));
            if (single.degree < 1 || single.degree > 4)
                throw ConfigError("key 'degree': must be in 1..4");
            saw_single = true;
        } else if (key == "training_count") {
            cfg.suite.training_count = static_cast<int>(detail::to_int(value, key));
        } else if (key == "by_class") {
            cfg.suite.by_class = detail::to_bool(value, key);
        } else if (key == "level") {
            cfg.suite.level = detail::to_double(value, key);
            if (cfg.suite.level < 0 || cfg.suite.level >= 1)
                throw ConfigError("key 'level': must be in [0, 1)");
        } else if (key == "max_gap_seconds") {
            cfg.suite.max_gap = detail::to_int(value, key);
        } else if (key == "avg_horizon_seconds") {
            cfg.suite.avg_horizon = detail::to_int(value, key);
        } else if (key == "refit_every") {
            cfg.suite.refit_every = static_cast<int>(detail::to_int(value, key));
        } else if (key == "output") {
            cfg.output = value;
        } else {
            throw ConfigError("unknown run config key '" + key + "'");
        }
    }
    if (saw_single && !saw_fusion) cfg.fusion = {single};
    return cfg;
}

inline RunConfig parse_run_config(const std::string& text) {
    std::istringstream in(text);
    return parse_run_config(in);
}

inline SynthConfig parse_synth_config(std::istream& in) {
    SynthConfig cfg;
    for (const auto& [key, value] : detail::parse_key_values(in)) {
        if (key == "seed") cfg.seed = static_cast<std::uint64_t>(detail::to_int(value, key));
        else if (key == "start_time") cfg.start_time = detail::to_int(value, key);
        else if (key == "duration_seconds") cfg.duration = detail::to_int(value, key);
        else if (key == "probe_period") cfg.probe_period = detail::to_int(value, key);
        else if (key == "disk_period") cfg.disk_period = detail::to_int(value, key);
        else if (key == "transfers_per_hour") cfg.transfers_per_hour = detail::to_double(value, key);
        else if (key == "size_mix") cfg.size_mix = detail::to_weights(value, key);
        else if (key == "model_a") cfg.model_a = detail::to_double(value, key);
        else if (key == "model_b_n") cfg.model_b_n = detail::to_double(value, key);
        else if (key == "model_b_d") cfg.model_b_d = detail::to_double(value, key);
        else if (key == "noise_stdev") cfg.noise_stdev = detail::to_double(value, key);
        else if (key == "class_intercept_offsets")
            cfg.class_intercept_offset = detail::to_weights(value, key);
        else if (key == "n_mean") cfg.n_mean = detail::to_double(value, key);
        else if (key == "n_stdev") cfg.n_stdev = detail::to_double(value, key);
        else if (key == "n_autocorr") cfg.n_autocorr = detail::to_double(value, key);
        else if (key == "d_mean") cfg.d_mean = detail::to_double(value, key);
        else if (key == "d_stdev") cfg.d_stdev = detail::to_double(value, key);
        else if (key == "d_autocorr") cfg.d_autocorr = detail::to_double(value, key);
        else throw ConfigError("unknown generator config key '" + key + "'");
    }
    validate(cfg);
    return cfg;
}

inline SynthConfig parse_synth_config(const std::string& text) {
    std::istringstream in(text);
    return parse_synth_config(in);
}

}  // namespace xfercast
