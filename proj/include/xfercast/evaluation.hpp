#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "xfercast/errors.hpp"
#include "xfercast/fusion.hpp"
#include "xfercast/traces.hpp"
#include "xfercast/univariate.hpp"

namespace xfercast {

/// Pearson correlation via the sum-of-products form:
/// (Sxy - Sx*Sy/size) / sqrt((Sxx - Sx^2/size) * (Syy - Sy^2/size)),
/// clamped to [-1, 1].
inline double correlation(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw InputError("correlation inputs differ in length");
    const std::size_t size = x.size();
    if (size < 2) throw InsufficientDataError("correlation needs at least 2 points");
    double sx = 0, sy = 0, sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < size; ++i) {
        sx += x[i];
        sy += y[i];
        sxy += x[i] * y[i];
        sxx += x[i] * x[i];
        syy += y[i] * y[i];
    }
    const double n = static_cast<double>(size);
    const double vx = sxx - sx * sx / n;
    const double vy = syy - sy * sy / n;
    if (vx <= 0.0 || vy <= 0.0) throw DegenerateError("zero variance in correlation input");
    const double r = (sxy - sx * sy / n) / std::sqrt(vx * vy);
    return std::clamp(r, -1.0, 1.0);
}

/// Ascending 1-based ranks; tied values share the mean of their positions.
inline std::vector<double> rank_transform(std::span<const double> values) {
    if (values.empty()) throw InputError("cannot rank an empty list");
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(values.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
        const double mid = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mid;
        i = j + 1;
    }
    return ranks;
}

/// Rank-order (Spearman) correlation: Pearson correlation of the ranks.
inline double rank_correlation(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw InputError("correlation inputs differ in length");
    if (x.size() < 2) throw InsufficientDataError("correlation needs at least 2 points");
    const auto rx = rank_transform(x);
    const auto ry = rank_transform(y);
    return correlation(rx, ry);
}

/// Inverse of the standard normal CDF (Wichura's PPND16 rational
/// approximations, accurate to roughly 1e-16 over (0, 1)).
inline double inverse_normal_cdf(double p) {
    if (!(p > 0.0 && p < 1.0)) throw InputError("inverse_normal_cdf needs p in (0, 1)");
    const double q = p - 0.5;
    if (std::fabs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q *
               (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
                     6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r +
                   1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
                 1.3314166789178437745e+2) * r + 3.3871328727963666080e+0) /
               (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
                     3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
                   5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
                 4.2313330701600911252e+1) * r + 1.0);
    }
    double r = q < 0.0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double z;
    if (r <= 5.0) {
        r -= 1.6;
        z = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                  2.41780725177450611770e-1) * r + 1.27045825245236838258e+0) * r +
                3.64784832476320460504e+0) * r + 5.76949722146069140550e+0) * r +
              4.63033784615654529590e+0) * r + 1.42343711074968357734e+0) /
            (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                  1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                6.89767334985100004550e-1) * r + 1.67638483018380384940e+0) * r +
              2.05319162663775882187e+0) * r + 1.0);
    } else {
        r -= 5.0;
        z = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                  1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                2.96560571828504891230e-1) * r + 1.78482653991729133580e+0) * r +
              5.46378491116411436990e+0) * r + 6.65790464350110377720e+0) /
            (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                  1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
              5.99832206555887937690e-1) * r + 1.0);
    }
    return q < 0.0 ? -z : z;
}

/// Two-sided standard-normal critical value for a confidence level,
/// e.g. 0.95 -> 1.95996...
inline double normal_critical_value(double level) {
    if (level < 0.0 || level >= 1.0) throw ConfigError("confidence level must be in [0, 1)");
    if (level == 0.0) return 0.0;
    return inverse_normal_cdf(0.5 + level / 2.0);
}

/// Correlation coefficient with its confidence interval.
struct CorrelationResult {
    double coefficient = 0.0;
    std::size_t n = 0;
    double ci_lower = -1.0;
    double ci_upper = 1.0;
    double level = 0.95;
};

/// Fisher z-interval: tanh(atanh(r) +- z / sqrt(n - 3)), clipped to [-1, 1].
/// |r| = 1 and level 0 both collapse to the degenerate interval (r, r).
inline std::pair<double, double> correlation_confidence(double coefficient, std::size_t n,
                                                        double level) {
    if (n < 4) throw InsufficientDataError("confidence interval needs at least 4 points");
    if (std::fabs(coefficient) >= 1.0) return {coefficient, coefficient};
    const double z = normal_critical_value(level);
    if (z == 0.0) return {coefficient, coefficient};
    const double h = z / std::sqrt(static_cast<double>(n) - 3.0);
    const double zr = std::atanh(coefficient);
    return {std::clamp(std::tanh(zr - h), -1.0, 1.0), std::clamp(std::tanh(zr + h), -1.0, 1.0)};
}

inline CorrelationResult rank_correlation_result(std::span<const double> x,
                                                 std::span<const double> y, double level) {
    CorrelationResult res;
    res.coefficient = rank_correlation(x, y);
    res.n = x.size();
    res.level = level;
    std::tie(res.ci_lower, res.ci_upper) = correlation_confidence(res.coefficient, res.n, level);
    return res;
}

/// Normalized percentage error of a prediction series, with optional
/// confidence half-width.
struct ErrorSummary {
    double normalized_error_pct = 0.0;
    double mean_measured = 0.0;  // KB/s
    std::size_t prediction_count = 0;
    std::optional<double> ci_half_width_pct;  // set when prediction_count >= 2
    double level = 0.95;
};

/// sum |measured_i - predicted_i| / (size * mean(measured)) * 100.
inline ErrorSummary normalized_error(std::span<const double> measured,
                                     std::span<const double> predicted) {
    if (measured.size() != predicted.size())
        throw InputError("measured and predicted differ in length");
    if (measured.empty()) throw InsufficientDataError("no predictions to evaluate");
    double sum_m = 0, sum_abs = 0;
    for (std::size_t i = 0; i < measured.size(); ++i) {
        sum_m += measured[i];
        sum_abs += std::fabs(measured[i] - predicted[i]);
    }
    const double n = static_cast<double>(measured.size());
    const double mean = sum_m / n;
    if (mean <= 0.0) throw DegenerateError("mean measured throughput is not positive");
    ErrorSummary s;
    s.normalized_error_pct = sum_abs / (n * mean) * 100.0;
    s.mean_measured = mean;
    s.prediction_count = measured.size();
    return s;
}

/// Normal-approximation half-width of the error rate:
/// z * stdev(e_i) / sqrt(size) over per-prediction normalized errors
/// e_i = |m_i - p_i| / mean(measured) * 100 (sample standard deviation).
inline double error_confidence(std::span<const double> measured,
                               std::span<const double> predicted, double level) {
    if (measured.size() != predicted.size())
        throw InputError("measured and predicted differ in length");
    if (measured.size() < 2)
        throw InsufficientDataError("error confidence needs at least 2 predictions");
    double sum_m = 0;
    for (double m : measured) sum_m += m;
    const double n = static_cast<double>(measured.size());
    const double mean = sum_m / n;
    if (mean <= 0.0) throw DegenerateError("mean measured throughput is not positive");
    std::vector<double> e(measured.size());
    double sum_e = 0;
    for (std::size_t i = 0; i < measured.size(); ++i) {
        e[i] = std::fabs(measured[i] - predicted[i]) / mean * 100.0;
        sum_e += e[i];
    }
    const double mean_e = sum_e / n;
    double ss = 0;
    for (double v : e) ss += (v - mean_e) * (v - mean_e);
    const double stdev = std::sqrt(ss / (n - 1.0));
    return normal_critical_value(level) * stdev / std::sqrt(n);
}

inline ErrorSummary make_error_summary(std::span<const double> measured,
                                       std::span<const double> predicted, double level) {
    ErrorSummary s = normalized_error(measured, predicted);
    s.level = level;
    if (measured.size() >= 2) s.ci_half_width_pct = error_confidence(measured, predicted, level);
    return s;
}

/// [predicted throughput, average past error %, confidence limit %].
/// The confidence limit is absent when the history is too small to
/// estimate one.
struct AccuracyTriplet {
    double predicted_throughput = 0.0;  // KB/s
    double error_pct = 0.0;
    std::optional<double> confidence_limit_pct;
};

inline AccuracyTriplet accuracy_triplet(double next_prediction,
                                        std::span<const double> measured_history,
                                        std::span<const double> predicted_history, double level) {
    AccuracyTriplet t;
    t.predicted_throughput = next_prediction;
    t.error_pct = normalized_error(measured_history, predicted_history).normalized_error_pct;
    if (measured_history.size() >= 2)
        t.confidence_limit_pct = error_confidence(measured_history, predicted_history, level);
    return t;
}

/// Per-predictor best/worst counts over a set of transfers. Ties split the
/// credit equally, so best and worst shares each sum to one per transfer.
struct RankingSummary {
    std::size_t transfer_count = 0;
    std::vector<double> best_share;   // fractional transfer counts, one per predictor
    std::vector<double> worst_share;

    double best_pct(std::size_t i) const {
        return best_share[i] / static_cast<double>(transfer_count) * 100.0;
    }
    double worst_pct(std::size_t i) const {
        return worst_share[i] / static_cast<double>(transfer_count) * 100.0;
    }
};

/// rows[t][p] is the absolute prediction error of predictor p on transfer t.
inline RankingSummary rank_predictors(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) throw InsufficientDataError("ranking needs at least one transfer");
    const std::size_t np = rows.front().size();
    if (np < 2) throw InputError("ranking needs at least two predictors");
    RankingSummary s;
    s.transfer_count = rows.size();
    s.best_share.assign(np, 0.0);
    s.worst_share.assign(np, 0.0);
    for (const auto& row : rows) {
        if (row.size() != np) throw InputError("ragged ranking matrix");
        const double lo = *std::min_element(row.begin(), row.end());
        const double hi = *std::max_element(row.begin(), row.end());
        std::size_t n_lo = 0, n_hi = 0;
        for (double v : row) {
            if (v == lo) ++n_lo;
            if (v == hi) ++n_hi;
        }
        for (std::size_t p = 0; p < np; ++p) {
            if (row[p] == lo) s.best_share[p] += 1.0 / static_cast<double>(n_lo);
            if (row[p] == hi) s.worst_share[p] += 1.0 / static_cast<double>(n_hi);
        }
    }
    return s;
}

struct TraceSet {
    std::vector<TransferRecord> transfers;
    std::vector<ProbeRecord> probes;
    std::vector<DiskRecord> disk;
};

struct SuiteConfig {
    int training_count = 15;
    bool by_class = false;
    double level = 0.95;
    std::int64_t max_gap = 600;        // seconds
    std::int64_t avg_horizon = 86400;  // seconds
    int refit_every = 1;
};

/// One predictor's row of an evaluation report.
struct PredictorReport {
    std::string name;
    std::optional<ErrorSummary> overall;  // headline; mean across classes when by_class
    std::vector<std::pair<SizeClass, ErrorSummary>> per_class;
    std::size_t predictions = 0;
    std::size_t skipped = 0;
    std::optional<AccuracyTriplet> triplet;
    std::optional<double> best_pct;
    std::optional<double> worst_pct;
};

struct EvaluationReport {
    SuiteConfig config;
    std::vector<PredictorReport> rows;
    std::size_t ranked_transfers = 0;
};

namespace detail {

struct SeriesOutcome {
    std::vector<double> measured;
    std::vector<double> predicted;
    std::vector<std::size_t> transfer_index;  // into the series transfer list
    std::size_t skipped = 0;
};

/// Walk-forward evaluation of one univariate spec over one transfer series.
inline SeriesOutcome run_univariate_series(const PredictorSpec& spec,
                                           const std::vector<TransferRecord>& transfers,
                                           int training_count) {
    SeriesOutcome out;
    for (std::size_t i = static_cast<std::size_t>(std::max(training_count, 0));
         i < transfers.size(); ++i) {
        const auto& tr = transfers[i];
        try {
            const double p = run_predictor(spec, transfers, tr.start_time, tr.file_size);
            out.predicted.push_back(p);
            out.measured.push_back(static_cast<double>(tr.bandwidth));
            out.transfer_index.push_back(i);
        } catch (const Error&) {
            ++out.skipped;
        }
    }
    return out;
}

inline SeriesOutcome run_fusion_series(const FusionConfig& cfg,
                                       const std::vector<TransferRecord>& transfers,
                                       const TraceSet& traces, const SuiteConfig& sc) {
    WalkForwardOptions opts;
    opts.max_gap = sc.max_gap;
    opts.avg_horizon = sc.avg_horizon;
    opts.training_count = sc.training_count;
    opts.refit_every = sc.refit_every;
    WalkForwardResult wf = walk_forward_fuse(transfers, traces.probes, traces.disk, cfg, opts);
    SeriesOutcome out;
    out.skipped = wf.skipped;
    for (const auto& p : wf.predictions) {
        out.measured.push_back(p.measured);
        out.predicted.push_back(p.predicted);
        out.transfer_index.push_back(p.transfer_index);
    }
    return out;
}

}  // namespace detail

/// Runs the full walk-forward comparison: every univariate spec and fusion
/// config over the trace (per size class when by_class, averaging the class
/// errors into the headline number). Per-predictor failures are recorded as
/// skip counts, never fatal.
inline EvaluationReport evaluate_suite(const TraceSet& traces,
                                       const std::vector<PredictorSpec>& specs,
                                       const std::vector<FusionConfig>& fusion_configs,
                                       const SuiteConfig& config = {}) {
    EvaluationReport report;
    report.config = config;

    std::vector<TransferRecord> sorted = traces.transfers;
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const TransferRecord& a, const TransferRecord& b) {
                         return a.start_time < b.start_time;
                     });

    // evaluation series: the whole trace, or one series per size class
    std::vector<std::pair<std::optional<SizeClass>, std::vector<TransferRecord>>> series;
    if (config.by_class) {
        for (SizeClass c : kAllSizeClasses) {
            auto sub = filter_by_class(sorted, c);
            if (!sub.empty()) series.emplace_back(c, std::move(sub));
        }
    } else {
        series.emplace_back(std::nullopt, sorted);
    }

    const std::size_t n_predictors = specs.size() + fusion_configs.size();
    std::vector<PredictorReport> rows(n_predictors);
    // (series, transfer) -> per-predictor absolute error, for the ranking
    std::map<std::pair<std::size_t, std::size_t>, std::vector<std::optional<double>>> abs_errors;
    // chronologically last prediction per predictor, for the triplet
    std::vector<std::pair<std::int64_t, double>> last_pred(
        n_predictors, {std::numeric_limits<std::int64_t>::min(), 0.0});

    for (std::size_t p = 0; p < n_predictors; ++p) {
        PredictorReport& row = rows[p];
        row.name = p < specs.size() ? spec_name(specs[p])
                                    : fusion_name(fusion_configs[p - specs.size()]);
        double err_sum = 0, ci_sum = 0, measured_sum = 0;
        std::size_t err_n = 0, ci_n = 0;
        for (std::size_t s = 0; s < series.size(); ++s) {
            const auto& [cls, transfers] = series[s];
            detail::SeriesOutcome oc =
                p < specs.size()
                    ? detail::run_univariate_series(specs[p], transfers, config.training_count)
                    : detail::run_fusion_series(fusion_configs[p - specs.size()], transfers,
                                                traces, config);
            row.skipped += oc.skipped;
            row.predictions += oc.measured.size();
            for (std::size_t k = 0; k < oc.measured.size(); ++k) {
                auto& cell = abs_errors[{s, oc.transfer_index[k]}];
                cell.resize(n_predictors);
                cell[p] = std::fabs(oc.measured[k] - oc.predicted[k]);
                const std::int64_t when = transfers[oc.transfer_index[k]].start_time;
                if (when >= last_pred[p].first) last_pred[p] = {when, oc.predicted[k]};
                measured_sum += oc.measured[k];
            }
            if (!oc.measured.empty()) {
                ErrorSummary es = make_error_summary(oc.measured, oc.predicted, config.level);
                if (cls) row.per_class.emplace_back(*cls, es);
                err_sum += es.normalized_error_pct;
                ++err_n;
                if (es.ci_half_width_pct) {
                    ci_sum += *es.ci_half_width_pct;
                    ++ci_n;
                }
                if (!config.by_class) row.overall = es;
            }
        }
        if (config.by_class && err_n > 0) {
            ErrorSummary headline;
            headline.normalized_error_pct = err_sum / static_cast<double>(err_n);
            headline.mean_measured = measured_sum / static_cast<double>(row.predictions);
            headline.prediction_count = row.predictions;
            headline.level = config.level;
            if (ci_n > 0) headline.ci_half_width_pct = ci_sum / static_cast<double>(ci_n);
            row.overall = headline;
        }
        if (row.overall) {
            AccuracyTriplet t;
            t.predicted_throughput = last_pred[p].second;
            t.error_pct = row.overall->normalized_error_pct;
            t.confidence_limit_pct = row.overall->ci_half_width_pct;
            row.triplet = t;
        }
    }

    // rank over transfers where every predictor produced a prediction
    if (n_predictors >= 2) {
        std::vector<std::vector<double>> matrix;
        for (const auto& [key, cell] : abs_errors) {
            bool complete = true;
            for (const auto& v : cell)
                if (!v) {
                    complete = false;
                    break;
                }
            if (!complete) continue;
            std::vector<double> r;
            r.reserve(n_predictors);
            for (const auto& v : cell) r.push_back(*v);
            matrix.push_back(std::move(r));
        }
        if (!matrix.empty()) {
            RankingSummary rs = rank_predictors(matrix);
            report.ranked_transfers = rs.transfer_count;
            for (std::size_t p = 0; p < n_predictors; ++p) {
                rows[p].best_pct = rs.best_pct(p);
                rows[p].worst_pct = rs.worst_pct(p);
            }
        }
    }

    report.rows = std::move(rows);
    return report;
}

namespace detail {

inline std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

inline std::string kv_name(std::string name) {
    for (char& c : name)
        if (c == ' ' || c == '\t') c = '_';
    return name;
}

}  // namespace detail

/// Renders the report as delimited text: a predictor x error table, a
/// best/worst ranking table, and a machine-readable key-value section.
/// Identical reports render byte-identically.
inline std::string render_report(const EvaluationReport& report) {
    std::string out;
    const auto& cfg = report.config;
    out += "# xfercast evaluation report\n";
    out += "# level=" + detail::fixed(cfg.level, 2) +
           " training_count=" + std::to_string(cfg.training_count) +
           " by_class=" + (cfg.by_class ? "true" : "false") +
           " max_gap=" + std::to_string(cfg.max_gap) +
           " avg_horizon=" + std::to_string(cfg.avg_horizon) + "\n";
    out += "# error: normalized percent; ci: normal-approximation half-width\n";
    out += "predictor\terror_pct\tci_pct\tpredictions\tskipped";
    if (cfg.by_class)
        for (SizeClass c : kAllSizeClasses) out += "\t" + std::string(to_string(c));
    out += '\n';
    for (const auto& row : report.rows) {
        out += row.name;
        out += '\t';
        out += row.overall ? detail::fixed(row.overall->normalized_error_pct, 4) : "-";
        out += '\t';
        out += row.overall && row.overall->ci_half_width_pct
                   ? detail::fixed(*row.overall->ci_half_width_pct, 4)
                   : "-";
        out += '\t' + std::to_string(row.predictions) + '\t' + std::to_string(row.skipped);
        if (cfg.by_class) {
            for (SizeClass c : kAllSizeClasses) {
                out += '\t';
                auto it = std::find_if(row.per_class.begin(), row.per_class.end(),
                                       [&](const auto& pc) { return pc.first == c; });
                out += it != row.per_class.end() ? detail::fixed(it->second.normalized_error_pct, 4)
                                                 : "-";
            }
        }
        out += '\n';
    }
    if (report.ranked_transfers > 0) {
        out += "# ranking over " + std::to_string(report.ranked_transfers) + " transfers\n";
        out += "predictor\tbest_pct\tworst_pct\n";
        for (const auto& row : report.rows) {
            out += row.name;
            out += '\t';
            out += row.best_pct ? detail::fixed(*row.best_pct, 2) : "-";
            out += '\t';
            out += row.worst_pct ? detail::fixed(*row.worst_pct, 2) : "-";
            out += '\n';
        }
    }
    out += "# triplets\n";
    for (const auto& row : report.rows) {
        const std::string key = detail::kv_name(row.name);
        if (row.triplet) {
            out += key + ".predicted_kbps\t" +
                   detail::fixed(row.triplet->predicted_throughput, 3) + '\n';
            out += key + ".error_pct\t" + detail::fixed(row.triplet->error_pct, 4) + '\n';
            out += key + ".confidence_pct\t" +
                   (row.triplet->confidence_limit_pct
                        ? detail::fixed(*row.triplet->confidence_limit_pct, 4)
                        : "insufficient-data") +
                   '\n';
        }
        out += key + ".predictions\t" + std::to_string(row.predictions) + '\n';
        out += key + ".skipped\t" + std::to_string(row.skipped) + '\n';
    }
    return out;
}

}  // namespace xfercast
