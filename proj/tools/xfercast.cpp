// Command-line front end: validate/generate/predict/evaluate/correlate.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "xfercast/xfercast.hpp"

namespace xc = xfercast;

namespace {

// 0 success, 2 usage/config, 3 data/validation, 4 insufficient data
int exit_code_for(const xc::Error& e) {
    if (dynamic_cast<const xc::ConfigError*>(&e)) return 2;
    if (dynamic_cast<const xc::InsufficientDataError*>(&e)) return 4;
    return 3;
}

const char* error_class(const xc::Error& e) {
    if (dynamic_cast<const xc::ParseError*>(&e)) return "parse";
    if (dynamic_cast<const xc::ValidationError*>(&e)) return "validation";
    if (dynamic_cast<const xc::ConfigError*>(&e)) return "config";
    if (dynamic_cast<const xc::InsufficientDataError*>(&e)) return "insufficient data";
    if (dynamic_cast<const xc::DegenerateError*>(&e)) return "degenerate fit";
    return "input";
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw xc::ConfigError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw xc::ConfigError("cannot write '" + path + "'");
    out << content;
}

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

void sort_by_start(std::vector<xc::TransferRecord>& transfers) {
    std::stable_sort(transfers.begin(), transfers.end(),
                     [](const xc::TransferRecord& a, const xc::TransferRecord& b) {
                         return a.start_time < b.start_time;
                     });
}

xc::TraceSet load_traces(const xc::RunConfig& cfg) {
    if (cfg.transfer_log.empty()) throw xc::ConfigError("config is missing 'transfer_log'");
    xc::TraceSet set;
    set.transfers = xc::parse_transfer_log(read_file(cfg.transfer_log));
    if (!cfg.probe_log.empty()) set.probes = xc::parse_probe_log(read_file(cfg.probe_log));
    if (!cfg.disk_log.empty()) set.disk = xc::parse_disk_log(read_file(cfg.disk_log));
    sort_by_start(set.transfers);
    return set;
}

struct StreamCheck {
    std::size_t records = 0;
    std::vector<std::string> violations;
};

template <typename ParseLine>
StreamCheck check_stream(const std::string& text, ParseLine&& parse_line) {
    StreamCheck res;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (xc::detail::is_blank_or_comment(line)) continue;
        try {
            parse_line(line, lineno);
            ++res.records;
        } catch (const xc::Error& e) {
            res.violations.push_back(e.what());
        }
    }
    return res;
}

int report_check(const char* kind, const std::string& path, const StreamCheck& res) {
    std::cout << kind << ": " << res.records << " records, " << res.violations.size()
              << " violations (" << path << ")\n";
    for (const auto& v : res.violations) std::cout << "  " << v << '\n';
    return res.violations.empty() ? 0 : 3;
}

int cmd_validate(const std::string& transfers, const std::string& probes,
                 const std::string& disk) {
    if (transfers.empty() && probes.empty() && disk.empty())
        throw xc::ConfigError("nothing to validate: give --transfers, --probes or --disk");
    int rc = 0;
    if (!transfers.empty()) {
        auto res = check_stream(read_file(transfers), [](const std::string& l, std::size_t n) {
            xc::parse_transfer_line(l, n);
        });
        rc = std::max(rc, report_check("transfers", transfers, res));
    }
    if (!probes.empty()) {
        std::int64_t last = std::numeric_limits<std::int64_t>::min();
        auto res = check_stream(read_file(probes), [&](const std::string& l, std::size_t n) {
            auto r = xc::parse_probe_line(l, n);
            if (r.timestamp < last)
                throw xc::ValidationError("line " + std::to_string(n) + ": timestamps out of order");
            last = r.timestamp;
        });
        rc = std::max(rc, report_check("probes", probes, res));
    }
    if (!disk.empty()) {
        std::int64_t last = std::numeric_limits<std::int64_t>::min();
        auto res = check_stream(read_file(disk), [&](const std::string& l, std::size_t n) {
            auto r = xc::parse_disk_line(l, n);
            if (r.timestamp < last)
                throw xc::ValidationError("line " + std::to_string(n) + ": timestamps out of order");
            last = r.timestamp;
        });
        rc = std::max(rc, report_check("disk", disk, res));
    }
    return rc;
}

int cmd_generate(const xc::SynthConfig& cfg, const std::string& out_dir) {
    const xc::SynthTraces traces = xc::generate_traces(cfg);
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const std::string t = (fs::path(out_dir) / "transfers.log").string();
    const std::string p = (fs::path(out_dir) / "probes.log").string();
    const std::string d = (fs::path(out_dir) / "disk.log").string();
    write_file(t, traces.transfer_log);
    write_file(p, traces.probe_log);
    write_file(d, traces.disk_log);
    const xc::TraceSet set = xc::generate_trace_set(cfg);
    std::cout << "wrote " << set.transfers.size() << " transfers to " << t << '\n'
              << "wrote " << set.probes.size() << " probes to " << p << '\n'
              << "wrote " << set.disk.size() << " disk records to " << d << '\n';
    return 0;
}

int cmd_evaluate(const xc::RunConfig& cfg) {
    const xc::TraceSet traces = load_traces(cfg);
    const xc::EvaluationReport report =
        xc::evaluate_suite(traces, cfg.specs, cfg.fusion, cfg.suite);
    const std::string text = xc::render_report(report);
    if (cfg.output.empty())
        std::cout << text;
    else {
        write_file(cfg.output, text);
        std::cout << "wrote report to " << cfg.output << '\n';
    }
    return 0;
}

int cmd_predict(const xc::RunConfig& cfg, std::int64_t query_size) {
    if (query_size <= 0) throw xc::ConfigError("--size must be positive");
    const xc::TraceSet traces = load_traces(cfg);
    if (traces.transfers.empty()) throw xc::InsufficientDataError("transfer log is empty");
    const std::int64_t now = traces.transfers.back().start_time + 1;

    std::cout << "# next-transfer forecast for " << query_size << " bytes (class "
              << xc::to_string(xc::classify_size(query_size)) << ")\n";
    std::cout << "predictor\tpredicted_kbps\tavg_error_pct\tconfidence_pct\n";

    std::size_t ok = 0;
    std::optional<int> first_failure;
    auto emit = [&](const std::string& name, const xc::AccuracyTriplet& t) {
        std::cout << name << '\t' << fixed(t.predicted_throughput, 3) << '\t'
                  << fixed(t.error_pct, 4) << '\t'
                  << (t.confidence_limit_pct ? fixed(*t.confidence_limit_pct, 4)
                                             : std::string("insufficient-data"))
                  << '\n';
        ++ok;
    };
    auto fail = [&](const std::string& name, const xc::Error& e) {
        std::cout << name << "\t-\t-\t- (" << error_class(e) << ": " << e.what() << ")\n";
        if (!first_failure) first_failure = exit_code_for(e);
    };

    for (const auto& spec : cfg.specs) {
        const std::string name = xc::spec_name(spec);
        try {
            auto oc = xc::detail::run_univariate_series(spec, traces.transfers,
                                                        cfg.suite.training_count);
            const double next =
                xc::run_predictor(spec, traces.transfers, now, query_size);
            emit(name, xc::accuracy_triplet(next, oc.measured, oc.predicted, cfg.suite.level));
        } catch (const xc::Error& e) {
            fail(name, e);
        }
    }
    for (const auto& fc : cfg.fusion) {
        const std::string name = xc::fusion_name(fc);
        try {
            auto oc = xc::detail::run_fusion_series(fc, traces.transfers, traces, cfg.suite);
            xc::MatchResult mr = xc::match_streams(traces.transfers, traces.probes, traces.disk,
                                                   cfg.suite.max_gap);
            xc::FilledSeries fs = xc::fill(mr.tuples, fc.fill, cfg.suite.avg_horizon);
            xc::RegressionModel model = xc::fit_regression(fs, fc.variables, fc.degree);
            std::optional<double> n_val, d_val;
            if (!traces.probes.empty()) n_val = traces.probes.back().bandwidth;
            if (!traces.disk.empty()) d_val = traces.disk.back().transfer_rate;
            const double next = xc::predict_regression(model, n_val, d_val);
            emit(name, xc::accuracy_triplet(next, oc.measured, oc.predicted, cfg.suite.level));
        } catch (const xc::Error& e) {
            fail(name, e);
        }
    }
    if (ok == 0 && first_failure) return *first_failure;
    return 0;
}

int cmd_correlate(const xc::RunConfig& cfg) {
    const xc::TraceSet traces = load_traces(cfg);
    if (traces.probes.empty()) throw xc::InsufficientDataError("probe log is empty or missing");
    const xc::MatchResult mr =
        xc::match_streams(traces.transfers, traces.probes, traces.disk, cfg.suite.max_gap);

    std::vector<double> gn_g, gn_n, gd_g, gd_d;
    for (const auto& t : mr.tuples) {
        if (!t.g) continue;
        gn_g.push_back(t.g->value);
        gn_n.push_back(t.n.bandwidth);
        if (t.d) {
            gd_g.push_back(t.g->value);
            gd_d.push_back(t.d->transfer_rate);
        }
    }
    std::cout << "# rank-order correlation, " << fixed(cfg.suite.level * 100, 0)
              << "% confidence\n";
    std::cout << "pair\tcoefficient\tupper\tlower\tpairs\n";
    auto emit = [&](const char* pair, const std::vector<double>& g, const std::vector<double>& x) {
        try {
            const xc::CorrelationResult r = xc::rank_correlation_result(g, x, cfg.suite.level);
            std::cout << pair << '\t' << fixed(r.coefficient, 4) << '\t' << fixed(r.ci_upper, 4)
                      << '\t' << fixed(r.ci_lower, 4) << '\t' << r.n << '\n';
            return 0;
        } catch (const xc::Error& e) {
            std::cout << pair << "\t-\t-\t-\t" << g.size() << " (" << error_class(e) << ": "
                      << e.what() << ")\n";
            return exit_code_for(e);
        }
    };
    int rc = emit("G~N", gn_g, gn_n);
    if (!traces.disk.empty()) rc = std::max(rc, emit("G~D", gd_g, gd_d));
    if (mr.unmatched_transfers > 0)
        std::cout << "# " << mr.unmatched_transfers << " transfers had no tick within max_gap\n";
    return rc;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"xfercast: wide-area transfer throughput forecasting workbench"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path, output_path;
    double level = 0.95;
    std::int64_t seed = 0;
    app.add_option("--config", config_path, "key = value configuration file");
    app.add_option("--output", output_path, "output file or directory");
    app.add_option("--level", level, "confidence level (default 0.95)");
    app.add_option("--seed", seed, "generator seed override");

    auto* validate = app.add_subcommand("validate", "parse trace files and report violations");
    std::string v_transfers, v_probes, v_disk;
    validate->add_option("--transfers", v_transfers, "transfer log path");
    validate->add_option("--probes", v_probes, "probe log path");
    validate->add_option("--disk", v_disk, "disk log path");

    auto* generate = app.add_subcommand("generate", "write seeded synthetic trace files");
    auto* predict = app.add_subcommand("predict", "forecast the next transfer of a given size");
    std::int64_t query_size = 0;
    predict->add_option("--size", query_size, "file size in bytes")->required();
    auto* evaluate = app.add_subcommand("evaluate", "walk-forward comparison of all predictors");
    auto* correlate = app.add_subcommand("correlate", "rank correlation between the streams");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Error& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (validate->parsed()) {
            if (v_transfers.empty() && v_probes.empty() && v_disk.empty() &&
                !config_path.empty()) {
                const xc::RunConfig cfg = xc::parse_run_config(read_file(config_path));
                return cmd_validate(cfg.transfer_log, cfg.probe_log, cfg.disk_log);
            }
            return cmd_validate(v_transfers, v_probes, v_disk);
        }
        if (generate->parsed()) {
            xc::SynthConfig cfg;
            if (!config_path.empty()) cfg = xc::parse_synth_config(read_file(config_path));
            if (app.count("--seed") > 0) cfg.seed = static_cast<std::uint64_t>(seed);
            return cmd_generate(cfg, output_path.empty() ? "." : output_path);
        }
        // remaining subcommands run off a RunConfig
        if (config_path.empty()) throw xc::ConfigError("--config is required");
        xc::RunConfig cfg = xc::parse_run_config(read_file(config_path));
        if (app.count("--level") > 0) {
            if (level < 0 || level >= 1) throw xc::ConfigError("--level must be in [0, 1)");
            cfg.suite.level = level;
        }
        if (app.count("--output") > 0) cfg.output = output_path;
        if (predict->parsed()) return cmd_predict(cfg, query_size);
        if (evaluate->parsed()) return cmd_evaluate(cfg);
        if (correlate->parsed()) return cmd_correlate(cfg);
    } catch (const xc::Error& e) {
        std::cerr << "error: " << error_class(e) << ": " << e.what() << '\n';
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 2;
}
