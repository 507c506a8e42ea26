#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "xfercast/errors.hpp"
#include "xfercast/traces.hpp"

namespace xfercast {

/// Gap-filling strategy for alignment ticks without a real transfer.
enum class FillStrategy { NoFill, LastValue, Avg };

constexpr std::string_view to_string(FillStrategy s) {
    switch (s) {
        case FillStrategy::NoFill: return "NoFill";
        case FillStrategy::LastValue: return "LV";
        case FillStrategy::Avg: return "Avg";
    }
    return "?";
}

inline FillStrategy parse_fill(std::string_view s) {
    if (s == "nofill" || s == "NoFill") return FillStrategy::NoFill;
    if (s == "lv" || s == "LV") return FillStrategy::LastValue;
    if (s == "avg" || s == "Avg") return FillStrategy::Avg;
    throw ConfigError("unknown fill strategy: '" + std::string(s) + "'");
}

/// Independent-variable subset used by a regression model.
enum class VarSet { N, D, ND };

constexpr bool uses_n(VarSet v) { return v != VarSet::D; }
constexpr bool uses_d(VarSet v) { return v != VarSet::N; }
constexpr int var_count(VarSet v) { return v == VarSet::ND ? 2 : 1; }

constexpr std::string_view to_string(VarSet v) {
    switch (v) {
        case VarSet::N: return "N";
        case VarSet::D: return "D";
        case VarSet::ND: return "ND";
    }
    return "?";
}

inline VarSet parse_varset(std::string_view s) {
    if (s == "N" || s == "n") return VarSet::N;
    if (s == "D" || s == "d") return VarSet::D;
    if (s == "ND" || s == "nd" || s == "DN") return VarSet::ND;
    throw ConfigError("unknown variable set: '" + std::string(s) + "' (want N, D or ND)");
}

/// A transfer throughput observation attached to an alignment tick.
struct GSample {
    std::int64_t time = 0;  // transfer start time
    double value = 0.0;     // KB/s
};

/// One alignment-grid entry. The grid follows the probe stream, so the
/// probe value is always present; the disk value is the nearest observation
/// within max_gap, and g is set only on ticks matched to a real transfer.
struct AlignedTuple {
    std::int64_t tick_time = 0;
    ProbeRecord n;
    std::optional<DiskRecord> d;
    std::optional<GSample> g;
};

struct MatchResult {
    std::vector<AlignedTuple> tuples;
    std::size_t unmatched_transfers = 0;  // transfers with no free tick within max_gap
};

/// Matches the three streams onto the probe grid. Each probe tick gets the
/// disk record nearest in time (within max_gap); each transfer attaches to
/// the free tick nearest its start time. On equal distance the earlier
/// timestamp wins; when two transfers contend for one tick the earlier
/// transfer keeps it and the later takes its next-nearest free tick.
inline MatchResult match_streams(std::span<const TransferRecord> transfers,
                                 std::span<const ProbeRecord> probes,
                                 std::span<const DiskRecord> disk, std::int64_t max_gap) {
    if (probes.empty()) throw InputError("empty probe stream: no alignment grid");
    MatchResult res;
    res.tuples.reserve(probes.size());

    std::size_t j = 0;
    for (const auto& p : probes) {
        AlignedTuple t;
        t.tick_time = p.timestamp;
        t.n = p;
        while (j + 1 < disk.size() &&
               std::llabs(disk[j + 1].timestamp - p.timestamp) <
                   std::llabs(disk[j].timestamp - p.timestamp))
            ++j;
        if (!disk.empty() && std::llabs(disk[j].timestamp - p.timestamp) <= max_gap) t.d = disk[j];
        res.tuples.push_back(std::move(t));
    }

    auto tick_at = [&](std::size_t i) { return res.tuples[i].tick_time; };
    for (const auto& tr : transfers) {
        const std::int64_t want = tr.start_time;
        // first tick >= want
        std::size_t hi = static_cast<std::size_t>(
            std::lower_bound(res.tuples.begin(), res.tuples.end(), want,
                             [](const AlignedTuple& t, std::int64_t v) { return t.tick_time < v; }) -
            res.tuples.begin());
        std::ptrdiff_t lo = static_cast<std::ptrdiff_t>(hi) - 1;
        // skip occupied ticks on both sides
        while (lo >= 0 && res.tuples[static_cast<std::size_t>(lo)].g) --lo;
        while (hi < res.tuples.size() && res.tuples[hi].g) ++hi;
        std::size_t pick = res.tuples.size();
        std::int64_t best = std::numeric_limits<std::int64_t>::max();
        if (lo >= 0) {
            pick = static_cast<std::size_t>(lo);
            best = want - tick_at(pick);
        }
        if (hi < res.tuples.size() && tick_at(hi) - want < best) {
            pick = hi;
            best = tick_at(hi) - want;
        }
        if (pick == res.tuples.size() || best > max_gap) {
            ++res.unmatched_transfers;
            continue;
        }
        res.tuples[pick].g = GSample{tr.start_time, static_cast<double>(tr.bandwidth)};
    }
    return res;
}

/// One fully populated row of a filled alignment series.
struct FilledPoint {
    std::int64_t tick_time = 0;
    double n = 0.0;           // probe bandwidth
    std::optional<double> d;  // disk rate, when a disk record matched the tick
    double g = 0.0;           // real or synthetic transfer throughput
};

struct FilledSeries {
    std::vector<FilledPoint> points;
    FillStrategy strategy = FillStrategy::NoFill;
    std::size_t dropped_ticks = 0;  // leading ticks with no prior transfer value
};

/// Resolves ticks without a real transfer value. NoFill keeps only real
/// ticks; LastValue copies the most recent real value; Avg takes the mean of
/// real values whose tick falls in [tick - avg_horizon, tick), falling back
/// to the last value when that window is empty so every gap still fills.
/// Ticks before the first real value are dropped under LV/Avg.
inline FilledSeries fill(const std::vector<AlignedTuple>& tuples, FillStrategy strategy,
                         std::int64_t avg_horizon = 86400) {
    FilledSeries out;
    out.strategy = strategy;
    if (strategy == FillStrategy::Avg && avg_horizon <= 0)
        throw ConfigError("avg_horizon must be positive");

    // real transfer values in tick order, with running sums for window means
    std::vector<std::int64_t> real_time;
    std::vector<double> real_prefix{0.0};
    std::size_t window_lo = 0;

    bool have_real = false;
    double last_real = 0.0;
    for (const auto& t : tuples) {
        FilledPoint p;
        p.tick_time = t.tick_time;
        p.n = t.n.bandwidth;
        if (t.d) p.d = t.d->transfer_rate;
        if (t.g) {
            p.g = t.g->value;
            have_real = true;
            last_real = p.g;
            out.points.push_back(p);
            real_time.push_back(t.tick_time);
            real_prefix.push_back(real_prefix.back() + p.g);
            continue;
        }
        if (strategy == FillStrategy::NoFill) continue;
        if (!have_real) {
            ++out.dropped_ticks;
            continue;
        }
        if (strategy == FillStrategy::LastValue) {
            p.g = last_real;
        } else {
            while (window_lo < real_time.size() &&
                   real_time[window_lo] < t.tick_time - avg_horizon)
                ++window_lo;
            const std::size_t n_in = real_time.size() - window_lo;
            p.g = n_in > 0
                      ? (real_prefix.back() - real_prefix[window_lo]) / static_cast<double>(n_in)
                      : last_real;
        }
        out.points.push_back(p);
    }
    return out;
}

/// Least-squares polynomial regression of G on the chosen variables. Each
/// variable contributes the terms v, v^2, ..., v^degree (no cross terms),
/// N block first, then D.
struct RegressionModel {
    VarSet variables = VarSet::N;
    int degree = 1;
    double intercept = 0.0;
    std::vector<double> coefficients;  // degree * var_count entries
    std::size_t fit_size = 0;

    int term_count() const { return degree * var_count(variables); }
};

/// Fits by Householder QR with column pivoting; a rank-deficient design is
/// an error rather than a pseudo-inverse fallback, so degenerate data stays
/// visible. Rows missing a requested variable are skipped.
inline RegressionModel fit_regression(const FilledSeries& series, VarSet variables, int degree) {
    if (degree < 1 || degree > 4) throw ConfigError("polynomial degree must be in 1..4");
    std::vector<const FilledPoint*> rows;
    rows.reserve(series.points.size());
    for (const auto& p : series.points) {
        if (uses_d(variables) && !p.d) continue;
        rows.push_back(&p);
    }
    const int terms = degree * var_count(variables);
    if (rows.size() < static_cast<std::size_t>(terms) + 1)
        throw InsufficientDataError("regression needs at least " + std::to_string(terms + 1) +
                                    " usable rows, have " + std::to_string(rows.size()));

    Eigen::MatrixXd design(rows.size(), terms + 1);
    Eigen::VectorXd target(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const FilledPoint& p = *rows[i];
        int c = 0;
        design(i, c++) = 1.0;
        if (uses_n(variables)) {
            double pw = 1.0;
            for (int k = 0; k < degree; ++k) {
                pw *= p.n;
                design(i, c++) = pw;
            }
        }
        if (uses_d(variables)) {
            double pw = 1.0;
            for (int k = 0; k < degree; ++k) {
                pw *= *p.d;
                design(i, c++) = pw;
            }
        }
        target(i) = p.g;
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    if (qr.rank() < terms + 1)
        throw DegenerateError("rank-deficient regression design (rank " +
                              std::to_string(qr.rank()) + " of " + std::to_string(terms + 1) + ")");
    Eigen::VectorXd beta = qr.solve(target);

    RegressionModel m;
    m.variables = variables;
    m.degree = degree;
    m.intercept = beta(0);
    m.coefficients.assign(beta.data() + 1, beta.data() + 1 + terms);
    m.fit_size = rows.size();
    if (!std::isfinite(m.intercept)) throw DegenerateError("regression intercept not finite");
    for (double b : m.coefficients)
        if (!std::isfinite(b)) throw DegenerateError("regression coefficient not finite");
    return m;
}

/// Evaluates the model; predictions are clamped at zero.
inline double predict_regression(const RegressionModel& model, std::optional<double> n,
                                 std::optional<double> d) {
    if (uses_n(model.variables) && !n) throw InputError("model requires a probe (N) value");
    if (uses_d(model.variables) && !d) throw InputError("model requires a disk (D) value");
    double acc = model.intercept;
    std::size_t c = 0;
    if (uses_n(model.variables)) {
        double pw = 1.0;
        for (int k = 0; k < model.degree; ++k) {
            pw *= *n;
            acc += model.coefficients[c++] * pw;
        }
    }
    if (uses_d(model.variables)) {
        double pw = 1.0;
        for (int k = 0; k < model.degree; ++k) {
            pw *= *d;
            acc += model.coefficients[c++] * pw;
        }
    }
    return std::max(0.0, acc);
}

/// Variable set, filling and polynomial degree of one multivariate
/// predictor, e.g. {ND, Avg, 1} == "G+N+D Avg".
struct FusionConfig {
    VarSet variables = VarSet::N;
    FillStrategy fill = FillStrategy::Avg;
    int degree = 1;
};

/// Display name in the style "G+N Avg", "G+N+D NoFill deg2".
inline std::string fusion_name(const FusionConfig& cfg) {
    std::string name = "G+";
    switch (cfg.variables) {
        case VarSet::N: name += "N"; break;
        case VarSet::D: name += "D"; break;
        case VarSet::ND: name += "N+D"; break;
    }
    name += ' ';
    name += to_string(cfg.fill);
    if (cfg.degree > 1) name += " deg" + std::to_string(cfg.degree);
    return name;
}

struct WalkForwardOptions {
    std::int64_t max_gap = 600;        // seconds
    std::int64_t avg_horizon = 86400;  // seconds
    int training_count = 15;
    int refit_every = 1;  // refit the model every k predictions
};

struct FusePrediction {
    std::size_t transfer_index = 0;  // index into the transfer list
    double predicted = 0.0;          // KB/s
    double measured = 0.0;           // KB/s
};

struct WalkForwardResult {
    std::vector<FusePrediction> predictions;
    std::size_t skipped = 0;  // transfers whose model could not be fit or fed
};

/// Walk-forward multivariate prediction: for every transfer after the
/// training prefix, align and fill using only records strictly before the
/// transfer's start, fit a model, and predict from the nearest preceding
/// probe (and disk) observations. Transfers whose model cannot be fit are
/// skipped and counted.
inline WalkForwardResult walk_forward_fuse(std::span<const TransferRecord> transfers,
                                           std::span<const ProbeRecord> probes,
                                           std::span<const DiskRecord> disk,
                                           const FusionConfig& cfg,
                                           const WalkForwardOptions& opts = {}) {
    if (opts.training_count < 0) throw ConfigError("training_count must be >= 0");
    if (opts.refit_every < 1) throw ConfigError("refit_every must be >= 1");
    WalkForwardResult res;
    std::size_t n_past = 0, d_past = 0;
    std::optional<RegressionModel> model;
    std::size_t attempts = 0;
    for (std::size_t i = static_cast<std::size_t>(opts.training_count); i < transfers.size(); ++i) {
        const std::int64_t now = transfers[i].start_time;
        while (n_past < probes.size() && probes[n_past].timestamp < now) ++n_past;
        while (d_past < disk.size() && disk[d_past].timestamp < now) ++d_past;

        // transfers strictly before now (ties with now are excluded)
        std::size_t g_past = i;
        while (g_past > 0 && transfers[g_past - 1].start_time >= now) --g_past;

        const bool refit = !model || attempts % static_cast<std::size_t>(opts.refit_every) == 0;
        ++attempts;
        if (refit) {
            model.reset();
            try {
                MatchResult mr = match_streams(transfers.subspan(0, g_past),
                                               probes.subspan(0, n_past),
                                               disk.subspan(0, d_past), opts.max_gap);
                FilledSeries fs = fill(mr.tuples, cfg.fill, opts.avg_horizon);
                model = fit_regression(fs, cfg.variables, cfg.degree);
            } catch (const Error&) {
                ++res.skipped;
                continue;
            }
        }
        std::optional<double> n_val, d_val;
        if (n_past > 0) n_val = probes[n_past - 1].bandwidth;
        if (d_past > 0) d_val = disk[d_past - 1].transfer_rate;
        if ((uses_n(cfg.variables) && !n_val) || (uses_d(cfg.variables) && !d_val)) {
            ++res.skipped;
            continue;
        }
        res.predictions.push_back(
            {i, predict_regression(*model, n_val, d_val),
             static_cast<double>(transfers[i].bandwidth)});
    }
    return res;
}

}  // namespace xfercast
