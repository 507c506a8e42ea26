#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "xfercast/errors.hpp"
#include "xfercast/evaluation.hpp"
#include "xfercast/traces.hpp"

namespace xfercast {

/// Parameters of the seeded trace generator. The probe and disk streams are
/// lag-1 autocorrelated positive processes on periodic grids; transfers
/// arrive at random times and draw their throughput from
/// G = a + offset(class) + b_n * N + b_d * D + noise, using the most recent
/// grid values at the transfer start. The same seed always produces
/// byte-identical logs.
struct SynthConfig {
    std::uint64_t seed = 1;
    std::int64_t start_time = 1'000'000'000;  // epoch seconds
    std::int64_t duration = 14 * 86400;       // seconds
    std::int64_t probe_period = 300;          // seconds
    std::int64_t disk_period = 300;           // seconds
    double transfers_per_hour = 4.0;
    std::array<double, 4> size_mix{0.15, 0.35, 0.30, 0.20};  // weights per SizeClass

    // throughput model, KB/s
    double model_a = 1500.0;
    double model_b_n = 500.0;  // KB/s per MB/s of probe bandwidth
    double model_b_d = 60.0;   // KB/s per disk transfer/second
    double noise_stdev = 500.0;
    std::array<double, 4> class_intercept_offset{0, 0, 0, 0};

    // probe (N) process, MB/s
    double n_mean = 8.0;
    double n_stdev = 2.0;
    double n_autocorr = 0.97;

    // disk (D) process, transfers/s
    double d_mean = 40.0;
    double d_stdev = 10.0;
    double d_autocorr = 0.97;
};

struct SynthTraces {
    std::string transfer_log;
    std::string probe_log;
    std::string disk_log;
};

namespace detail {

/// Deterministic draws independent of the standard library's distribution
/// implementations, so identical seeds give identical traces everywhere.
class SynthRng {
public:
    explicit SynthRng(std::uint64_t seed) : gen_(seed) {}

    double uniform() {  // [0, 1)
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    double normal() {  // Box-Muller
        const double u1 = 1.0 - uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    double exponential(double mean) { return -std::log(1.0 - uniform()) * mean; }

    std::size_t weighted_pick(const std::array<double, 4>& w) {
        double total = 0;
        for (double v : w) total += v;
        double u = uniform() * total;
        for (std::size_t i = 0; i < w.size(); ++i) {
            u -= w[i];
            if (u < 0) return i;
        }
        return w.size() - 1;
    }

    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {  // inclusive
        return lo + static_cast<std::int64_t>(uniform() * static_cast<double>(hi - lo + 1));
    }

private:
    std::mt19937_64 gen_;
};

inline std::vector<double> ar1_series(SynthRng& rng, std::size_t count, double mean, double stdev,
                                      double rho) {
    std::vector<double> out;
    out.reserve(count);
    double x = mean + stdev * rng.normal();
    const double innov = stdev * std::sqrt(std::max(0.0, 1.0 - rho * rho));
    for (std::size_t i = 0; i < count; ++i) {
        x = std::max(0.0, x);
        out.push_back(x);
        x = mean + rho * (x - mean) + innov * rng.normal();
    }
    return out;
}

// file-size draw ranges per class, bytes
inline constexpr std::int64_t kClassLo[4] = {10 * kBytesPerMB, 50 * kBytesPerMB,
                                             250 * kBytesPerMB, 750 * kBytesPerMB};
inline constexpr std::int64_t kClassHi[4] = {50 * kBytesPerMB - 1, 250 * kBytesPerMB - 1,
                                             750 * kBytesPerMB - 1, 1024 * kBytesPerMB};

}  // namespace detail

inline void validate(const SynthConfig& cfg) {
    if (cfg.duration <= 0) throw ConfigError("duration must be positive");
    if (cfg.probe_period <= 0 || cfg.disk_period <= 0)
        throw ConfigError("probe/disk periods must be positive");
    if (cfg.transfers_per_hour <= 0) throw ConfigError("transfers_per_hour must be positive");
    if (cfg.noise_stdev < 0) throw ConfigError("noise_stdev must be >= 0");
    double mix = 0;
    for (double w : cfg.size_mix) {
        if (w < 0) throw ConfigError("size_mix weights must be >= 0");
        mix += w;
    }
    if (mix <= 0) throw ConfigError("size_mix weights must not all be zero");
    if (cfg.n_stdev < 0 || cfg.d_stdev < 0) throw ConfigError("process stdev must be >= 0");
    if (std::fabs(cfg.n_autocorr) >= 1.0 || std::fabs(cfg.d_autocorr) >= 1.0)
        throw ConfigError("autocorrelation must be in (-1, 1)");
}

/// Generates the three streams as in-memory records.
inline TraceSet generate_trace_set(const SynthConfig& cfg) {
    validate(cfg);
    detail::SynthRng rng(cfg.seed);
    TraceSet out;

    const std::size_t n_probes = static_cast<std::size_t>((cfg.duration + cfg.probe_period - 1) /
                                                          cfg.probe_period);
    const std::size_t n_disk = static_cast<std::size_t>((cfg.duration + cfg.disk_period - 1) /
                                                        cfg.disk_period);
    const auto n_vals = detail::ar1_series(rng, n_probes, cfg.n_mean, cfg.n_stdev, cfg.n_autocorr);
    const auto d_vals = detail::ar1_series(rng, n_disk, cfg.d_mean, cfg.d_stdev, cfg.d_autocorr);

    out.probes.reserve(n_probes);
    for (std::size_t i = 0; i < n_probes; ++i)
        out.probes.push_back({cfg.start_time + static_cast<std::int64_t>(i) * cfg.probe_period,
                              n_vals[i], kDefaultProbeSize});
    out.disk.reserve(n_disk);
    for (std::size_t i = 0; i < n_disk; ++i)
        out.disk.push_back({cfg.start_time + static_cast<std::int64_t>(i) * cfg.disk_period,
                            d_vals[i]});

    const double mean_gap = 3600.0 / cfg.transfers_per_hour;
    double at = static_cast<double>(cfg.start_time) + rng.exponential(mean_gap);
    std::int64_t prev_start = cfg.start_time;
    std::size_t k = 0;
    while (at < static_cast<double>(cfg.start_time + cfg.duration)) {
        std::int64_t start = static_cast<std::int64_t>(at);
        if (start <= prev_start) start = prev_start + 1;
        if (start >= cfg.start_time + cfg.duration) break;
        prev_start = start;

        const std::size_t cls = rng.weighted_pick(cfg.size_mix);
        const std::int64_t size = rng.uniform_int(detail::kClassLo[cls], detail::kClassHi[cls]);

        // most recent grid values at the transfer start
        const std::size_t ni = std::min<std::size_t>(
            static_cast<std::size_t>((start - cfg.start_time) / cfg.probe_period), n_probes - 1);
        const std::size_t di = std::min<std::size_t>(
            static_cast<std::size_t>((start - cfg.start_time) / cfg.disk_period), n_disk - 1);
        double g = cfg.model_a + cfg.class_intercept_offset[cls] + cfg.model_b_n * n_vals[ni] +
                   cfg.model_b_d * d_vals[di] + cfg.noise_stdev * rng.normal();
        g = std::max(g, 1.0);

        TransferRecord r;
        r.source_id = "10.0.0.1";
        r.file_name = "/data/synth/file-" + std::to_string(k++);
        r.file_size = size;
        r.volume = "/data";
        r.start_time = start;
        r.duration = std::max<std::int64_t>(
            1, static_cast<std::int64_t>(std::llround(static_cast<double>(size) / (g * 1000.0))));
        r.end_time = r.start_time + r.duration;
        r.bandwidth = compute_bandwidth(r.file_size, r.duration);
        r.direction = Direction::Read;
        r.streams = 8;
        r.tcp_buffer = 1'000'000;
        out.transfers.push_back(std::move(r));

        at += rng.exponential(mean_gap);
    }
    return out;
}

/// Generates the three streams in their file formats.
inline SynthTraces generate_traces(const SynthConfig& cfg) {
    const TraceSet set = generate_trace_set(cfg);
    SynthTraces t;
    t.transfer_log = serialize_transfer_log(set.transfers);
    t.probe_log = serialize_probe_log(set.probes);
    t.disk_log = serialize_disk_log(set.disk);
    return t;
}

}  // namespace xfercast
