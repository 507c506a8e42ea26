#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "xfercast/errors.hpp"
#include "xfercast/traces.hpp"

namespace xfercast {

enum class PredictorFamily { Mean, Median, LastValue, AutoRegressive };

/// Portion of the history a predictor looks at: everything, the last k
/// observations, or the observations inside a trailing time window.
struct WindowSpec {
    enum class Kind { All, LastK, LastDuration };

    Kind kind = Kind::All;
    std::int64_t count = 0;    // LastK
    std::int64_t seconds = 0;  // LastDuration

    static WindowSpec all() { return {}; }
    static WindowSpec last_k(std::int64_t k) { return {Kind::LastK, k, 0}; }
    static WindowSpec last_duration(std::int64_t s) { return {Kind::LastDuration, 0, s}; }

    bool operator==(const WindowSpec&) const = default;
};

/// One (timestamp, throughput) observation drawn from a transfer record.
struct HistoryPoint {
    std::int64_t time = 0;  // epoch seconds
    double value = 0.0;     // KB/s

    bool operator==(const HistoryPoint&) const = default;
};

/// Timestamp-ordered throughput history, strictly earlier than the
/// prediction instant.
using History = std::vector<HistoryPoint>;

/// Lag-1 autoregression G' = a + b * G_last.
struct ARCoefficients {
    double a = 0.0;  // intercept, KB/s
    double b = 0.0;  // slope
};

/// Builds a History from the records that started strictly before `now`,
/// sorted by start time.
inline History history_before(std::span<const TransferRecord> records, std::int64_t now) {
    History h;
    for (const auto& r : records)
        if (r.start_time < now) h.push_back({r.start_time, static_cast<double>(r.bandwidth)});
    std::stable_sort(h.begin(), h.end(),
                     [](const HistoryPoint& a, const HistoryPoint& b) { return a.time < b.time; });
    return h;
}

namespace detail {

/// In-window slice of a sorted history. A window wider than the available
/// history silently uses all of it.
inline std::span<const HistoryPoint> window_view(const History& h, const WindowSpec& w,
                                                 std::int64_t now) {
    std::span<const HistoryPoint> all(h);
    switch (w.kind) {
        case WindowSpec::Kind::All:
            return all;
        case WindowSpec::Kind::LastK: {
            if (w.count <= 0) throw ConfigError("window count must be positive");
            const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(w.count), h.size());
            return all.subspan(h.size() - k);
        }
        case WindowSpec::Kind::LastDuration: {
            if (w.seconds <= 0) throw ConfigError("window duration must be positive");
            // inclusive bounds: [now - seconds, now]
            auto lo = std::lower_bound(h.begin(), h.end(), now - w.seconds,
                                       [](const HistoryPoint& p, std::int64_t t) { return p.time < t; });
            auto hi = std::upper_bound(lo, h.end(), now,
                                       [](std::int64_t t, const HistoryPoint& p) { return t < p.time; });
            return all.subspan(static_cast<std::size_t>(lo - h.begin()),
                               static_cast<std::size_t>(hi - lo));
        }
    }
    return all;
}

}  // namespace detail

/// Arithmetic mean of the in-window throughputs.
inline double predict_mean(const History& history, const WindowSpec& window, std::int64_t now) {
    auto v = detail::window_view(history, window, now);
    if (v.empty()) throw InsufficientDataError("no history inside the prediction window");
    double sum = 0.0;
    for (const auto& p : v) sum += p.value;
    return sum / static_cast<double>(v.size());
}

/// Median of the in-window throughputs: for t sorted values, the (t+1)/2-th
/// when t is odd, otherwise half the t/2-th plus half the (t/2+1)-th
/// (1-indexed). Temporal windows are not defined for median predictors.
inline double predict_median(const History& history, const WindowSpec& window, std::int64_t now) {
    if (window.kind == WindowSpec::Kind::LastDuration)
        throw ConfigError("median predictors take count windows only");
    auto v = detail::window_view(history, window, now);
    if (v.empty()) throw InsufficientDataError("no history inside the prediction window");
    std::vector<double> vals;
    vals.reserve(v.size());
    for (const auto& p : v) vals.push_back(p.value);
    std::sort(vals.begin(), vals.end());
    const std::size_t t = vals.size();
    if (t % 2 == 1) return vals[(t + 1) / 2 - 1];
    return 0.5 * vals[t / 2 - 1] + 0.5 * vals[t / 2];
}

/// The most recent throughput.
inline double predict_last_value(const History& history) {
    if (history.empty()) throw InsufficientDataError("empty history");
    return history.back().value;
}

/// Least-squares fit of G_i = a + b * G_{i-1} over consecutive in-window
/// pairs. Needs at least three in-window values and non-constant
/// predecessors.
inline ARCoefficients fit_ar(const History& history, const WindowSpec& window, std::int64_t now) {
    if (window.kind == WindowSpec::Kind::LastK)
        throw ConfigError("autoregression takes all-data or temporal windows only");
    auto v = detail::window_view(history, window, now);
    if (v.size() < 3)
        throw InsufficientDataError("autoregression needs at least 3 in-window values");
    const std::size_t n = v.size() - 1;  // lag pairs
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += v[i].value;
        sy += v[i + 1].value;
    }
    const double mx = sx / static_cast<double>(n);
    const double my = sy / static_cast<double>(n);
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = v[i].value - mx;
        sxx += dx * dx;
        sxy += dx * (v[i + 1].value - my);
    }
    if (sxx <= 0.0) throw DegenerateError("constant predecessor values, autoregression undefined");
    ARCoefficients c;
    c.b = sxy / sxx;
    c.a = my - c.b * mx;
    if (!std::isfinite(c.a) || !std::isfinite(c.b))
        throw DegenerateError("autoregression coefficients not finite");
    return c;
}

/// a + b * last, clamped at zero (throughput cannot be negative).
inline double predict_ar(const ARCoefficients& coeffs, double last) {
    return std::max(0.0, coeffs.a + coeffs.b * last);
}

/// One entry of the predictor catalog. `classed` restricts the history to
/// the size class of the transfer being predicted.
struct PredictorSpec {
    PredictorFamily family = PredictorFamily::Mean;
    WindowSpec window = WindowSpec::all();
    bool classed = false;

    bool operator==(const PredictorSpec&) const = default;
};

/// Structural legality: last-value means exactly LastK(1); medians take no
/// temporal window; autoregression takes no count window.
inline bool is_legal(const PredictorSpec& s) {
    switch (s.family) {
        case PredictorFamily::Mean:
            return s.window.kind != WindowSpec::Kind::LastK || s.window.count > 0;
        case PredictorFamily::Median:
            return s.window.kind == WindowSpec::Kind::All ||
                   (s.window.kind == WindowSpec::Kind::LastK && s.window.count > 0);
        case PredictorFamily::LastValue:
            return s.window == WindowSpec::last_k(1);
        case PredictorFamily::AutoRegressive:
            return s.window.kind == WindowSpec::Kind::All ||
                   (s.window.kind == WindowSpec::Kind::LastDuration && s.window.seconds > 0);
    }
    return false;
}

/// Dispatches on a (pre-built) history. Prefer run_predictor when starting
/// from transfer records.
inline double predict_from_history(const PredictorSpec& spec, const History& history,
                                   std::int64_t now) {
    if (!is_legal(spec)) throw ConfigError("illegal predictor spec");
    switch (spec.family) {
        case PredictorFamily::Mean:
            return predict_mean(history, spec.window, now);
        case PredictorFamily::Median:
            return predict_median(history, spec.window, now);
        case PredictorFamily::LastValue:
            return predict_last_value(history);
        case PredictorFamily::AutoRegressive: {
            const ARCoefficients c = fit_ar(history, spec.window, now);
            auto v = detail::window_view(history, spec.window, now);
            return predict_ar(c, v.back().value);
        }
    }
    throw ConfigError("illegal predictor spec");
}

/// Runs one catalog predictor against the raw transfer log. Only records
/// strictly before `now` are visible; a classed spec first filters them to
/// the size class of `query_size`.
inline double run_predictor(const PredictorSpec& spec, std::span<const TransferRecord> records,
                            std::int64_t now, std::int64_t query_size) {
    if (!is_legal(spec)) throw ConfigError("illegal predictor spec");
    History h;
    if (spec.classed) {
        const SizeClass cls = classify_size(query_size);
        std::vector<TransferRecord> filtered;
        for (const auto& r : records)
            if (classify_size(r.file_size) == cls) filtered.push_back(r);
        h = history_before(filtered, now);
    } else {
        h = history_before(records, now);
    }
    return predict_from_history(spec, h, now);
}

/// Canonical catalog name (AVG25, MED5, AVG15hr, AR10d, ...), with a
/// ":classed" suffix when the spec filters by size class.
inline std::string spec_name(const PredictorSpec& s) {
    std::string base;
    switch (s.family) {
        case PredictorFamily::Mean: base = "AVG"; break;
        case PredictorFamily::Median: base = "MED"; break;
        case PredictorFamily::LastValue: base = "LV"; break;
        case PredictorFamily::AutoRegressive: base = "AR"; break;
    }
    switch (s.window.kind) {
        case WindowSpec::Kind::All:
            break;
        case WindowSpec::Kind::LastK:
            if (s.family != PredictorFamily::LastValue)
                base += std::to_string(s.window.count);
            break;
        case WindowSpec::Kind::LastDuration:
            if (s.window.seconds % 86400 == 0)
                base += std::to_string(s.window.seconds / 86400) + "d";
            else
                base += std::to_string(s.window.seconds / 3600) + "hr";
            break;
    }
    if (s.classed) base += ":classed";
    return base;
}

/// Parses a canonical catalog name. Throws ConfigError for anything outside
/// the catalog.
inline PredictorSpec parse_spec(std::string_view name) {
    PredictorSpec s;
    std::string_view body = name;
    if (body.size() > 8 && body.substr(body.size() - 8) == ":classed") {
        s.classed = true;
        body = body.substr(0, body.size() - 8);
    }
    auto make = [&](PredictorFamily f, WindowSpec w) {
        s.family = f;
        s.window = w;
        return s;
    };
    if (body == "AVG") return make(PredictorFamily::Mean, WindowSpec::all());
    if (body == "MED") return make(PredictorFamily::Median, WindowSpec::all());
    if (body == "AR") return make(PredictorFamily::AutoRegressive, WindowSpec::all());
    if (body == "LV") return make(PredictorFamily::LastValue, WindowSpec::last_k(1));
    if (body == "AVG5") return make(PredictorFamily::Mean, WindowSpec::last_k(5));
    if (body == "AVG15") return make(PredictorFamily::Mean, WindowSpec::last_k(15));
    if (body == "AVG25") return make(PredictorFamily::Mean, WindowSpec::last_k(25));
    if (body == "MED5") return make(PredictorFamily::Median, WindowSpec::last_k(5));
    if (body == "MED15") return make(PredictorFamily::Median, WindowSpec::last_k(15));
    if (body == "MED25") return make(PredictorFamily::Median, WindowSpec::last_k(25));
    if (body == "AVG5hr") return make(PredictorFamily::Mean, WindowSpec::last_duration(5 * 3600));
    if (body == "AVG15hr") return make(PredictorFamily::Mean, WindowSpec::last_duration(15 * 3600));
    if (body == "AVG25hr") return make(PredictorFamily::Mean, WindowSpec::last_duration(25 * 3600));
    if (body == "AR5d") return make(PredictorFamily::AutoRegressive, WindowSpec::last_duration(5 * 86400));
    if (body == "AR10d") return make(PredictorFamily::AutoRegressive, WindowSpec::last_duration(10 * 86400));
    throw ConfigError("unknown predictor name: '" + std::string(name) + "'");
}

/// The full catalog of 15 log-only predictors, in report order.
inline std::vector<PredictorSpec> default_specs() {
    static const char* names[] = {"AVG",     "MED",     "AR",      "LV",      "AVG5",
                                  "AVG15",   "AVG25",   "MED5",    "MED15",   "MED25",
                                  "AVG5hr",  "AVG15hr", "AVG25hr", "AR5d",    "AR10d"};
    std::vector<PredictorSpec> out;
    out.reserve(std::size(names));
    for (const char* n : names) out.push_back(parse_spec(n));
    return out;
}

}  // namespace xfercast
