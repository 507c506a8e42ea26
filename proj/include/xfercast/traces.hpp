#pragma once

#include <charconv>
#include <cstdint>
#include <istream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "xfercast/errors.hpp"

namespace xfercast {

inline constexpr std::int64_t kBytesPerMB = 1'000'000;  // decimal megabyte
inline constexpr std::int64_t kDefaultProbeSize = 65536; // bytes per network probe

enum class Direction { Read, Write };

/// One logged end-to-end file transfer (the G stream).
///
/// bandwidth is in kilobytes/second with 1 KB = 1000 bytes and is always
/// floor(file_size / duration / 1000); the parser recomputes and rejects
/// rows where the logged value disagrees.
struct TransferRecord {
    std::string source_id;
    std::string file_name;
    std::int64_t file_size = 0;   // bytes, > 0
    std::string volume;
    std::int64_t start_time = 0;  // epoch seconds
    std::int64_t end_time = 0;    // epoch seconds
    std::int64_t duration = 0;    // seconds, == end_time - start_time, >= 1
    std::int64_t bandwidth = 0;   // KB/s
    Direction direction = Direction::Read;
    std::int64_t streams = 0;
    std::int64_t tcp_buffer = 0;  // bytes

    bool operator==(const TransferRecord&) const = default;
};

/// One periodic network-probe observation (the N stream).
struct ProbeRecord {
    std::int64_t timestamp = 0;   // epoch seconds
    double bandwidth = 0.0;       // MB/s, >= 0
    std::int64_t probe_size = kDefaultProbeSize;  // bytes

    bool operator==(const ProbeRecord&) const = default;
};

/// One periodic disk-throughput observation (the D stream).
struct DiskRecord {
    std::int64_t timestamp = 0;   // epoch seconds
    double transfer_rate = 0.0;   // transfers/second, >= 0

    bool operator==(const DiskRecord&) const = default;
};

/// File-size classes over half-open intervals; a boundary size belongs to
/// the upper class. 1 MB = 10^6 bytes.
enum class SizeClass { C10M, C100M, C500M, C1G };

inline constexpr SizeClass kAllSizeClasses[] = {SizeClass::C10M, SizeClass::C100M,
                                                SizeClass::C500M, SizeClass::C1G};

constexpr SizeClass classify_size(std::int64_t file_size) {
    if (file_size < 50 * kBytesPerMB) return SizeClass::C10M;
    if (file_size < 250 * kBytesPerMB) return SizeClass::C100M;
    if (file_size < 750 * kBytesPerMB) return SizeClass::C500M;
    return SizeClass::C1G;
}

constexpr std::string_view to_string(SizeClass c) {
    switch (c) {
        case SizeClass::C10M: return "C10M";
        case SizeClass::C100M: return "C100M";
        case SizeClass::C500M: return "C500M";
        case SizeClass::C1G: return "C1G";
    }
    return "?";
}

/// floor(file_size / duration / 1000): end-to-end throughput in KB/s.
inline std::int64_t compute_bandwidth(std::int64_t file_size, std::int64_t duration) {
    if (duration <= 0) throw ValidationError("zero-duration transfer");
    if (file_size <= 0) throw ValidationError("file size must be positive");
    return file_size / duration / 1000;
}

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

inline bool is_blank_or_comment(std::string_view line) {
    for (char c : line) {
        if (c == ' ' || c == '\t' || c == '\r') continue;
        return c == '#';
    }
    return true;
}

inline std::int64_t parse_int_field(std::string_view tok, std::size_t lineno, const char* field) {
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || p != tok.data() + tok.size())
        throw ParseError("line " + std::to_string(lineno) + ": field '" + field +
                         "' is not an integer: '" + std::string(tok) + "'");
    return v;
}

inline double parse_double_field(std::string_view tok, std::size_t lineno, const char* field) {
    double v = 0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || p != tok.data() + tok.size())
        throw ParseError("line " + std::to_string(lineno) + ": field '" + field +
                         "' is not a number: '" + std::string(tok) + "'");
    return v;
}

/// Shortest round-trip decimal form of a double.
inline std::string format_double(double v) {
    char buf[40];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

}  // namespace detail

/// Parses one transfer-log data line (11 whitespace-separated fields) and
/// checks every record invariant. Throws ParseError / ValidationError with
/// the line number.
inline TransferRecord parse_transfer_line(std::string_view line, std::size_t lineno) {
    auto f = detail::split_fields(line);
    if (f.size() != 11)
        throw ParseError("line " + std::to_string(lineno) + ": expected 11 fields, got " +
                         std::to_string(f.size()));
    TransferRecord r;
    r.source_id = std::string(f[0]);
    r.file_name = std::string(f[1]);
    r.file_size = detail::parse_int_field(f[2], lineno, "file_size");
    r.volume = std::string(f[3]);
    r.start_time = detail::parse_int_field(f[4], lineno, "start_time");
    r.end_time = detail::parse_int_field(f[5], lineno, "end_time");
    r.duration = detail::parse_int_field(f[6], lineno, "duration");
    r.bandwidth = detail::parse_int_field(f[7], lineno, "bandwidth");
    if (f[8] == "Read")
        r.direction = Direction::Read;
    else if (f[8] == "Write")
        r.direction = Direction::Write;
    else
        throw ParseError("line " + std::to_string(lineno) +
                         ": field 'direction' must be Read or Write, got '" + std::string(f[8]) + "'");
    r.streams = detail::parse_int_field(f[9], lineno, "streams");
    r.tcp_buffer = detail::parse_int_field(f[10], lineno, "tcp_buffer");

    const std::string at = "line " + std::to_string(lineno) + ": ";
    if (r.file_size <= 0) throw ValidationError(at + "file_size must be > 0");
    if (r.end_time < r.start_time) throw ValidationError(at + "end_time precedes start_time");
    if (r.duration != r.end_time - r.start_time)
        throw ValidationError(at + "duration " + std::to_string(r.duration) +
                              " != end_time - start_time = " +
                              std::to_string(r.end_time - r.start_time));
    if (r.duration < 1) throw ValidationError(at + "duration must be >= 1 second");
    if (r.streams < 0) throw ValidationError(at + "streams must be >= 0");
    if (r.tcp_buffer < 0) throw ValidationError(at + "tcp_buffer must be >= 0");
    const std::int64_t expect = compute_bandwidth(r.file_size, r.duration);
    if (r.bandwidth != expect)
        throw ValidationError(at + "bandwidth " + std::to_string(r.bandwidth) +
                              " != file_size/duration/1000 = " + std::to_string(expect));
    return r;
}

/// Reads a whole transfer log. Lines starting with '#' and blank lines are
/// skipped; any malformed or invariant-violating line aborts the parse.
inline std::vector<TransferRecord> parse_transfer_log(std::istream& in) {
    std::vector<TransferRecord> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::is_blank_or_comment(line)) continue;
        out.push_back(parse_transfer_line(line, lineno));
    }
    return out;
}

inline std::vector<TransferRecord> parse_transfer_log(const std::string& text) {
    std::istringstream in(text);
    return parse_transfer_log(in);
}

inline ProbeRecord parse_probe_line(std::string_view line, std::size_t lineno) {
    auto f = detail::split_fields(line);
    if (f.size() != 2 && f.size() != 3)
        throw ParseError("line " + std::to_string(lineno) + ": expected 'timestamp value', got " +
                         std::to_string(f.size()) + " fields");
    ProbeRecord r;
    r.timestamp = detail::parse_int_field(f[0], lineno, "timestamp");
    r.bandwidth = detail::parse_double_field(f[1], lineno, "bandwidth");
    if (f.size() == 3) r.probe_size = detail::parse_int_field(f[2], lineno, "probe_size");
    if (r.bandwidth < 0)
        throw ValidationError("line " + std::to_string(lineno) + ": negative probe bandwidth");
    if (r.probe_size <= 0)
        throw ValidationError("line " + std::to_string(lineno) + ": probe_size must be > 0");
    return r;
}

inline DiskRecord parse_disk_line(std::string_view line, std::size_t lineno) {
    auto f = detail::split_fields(line);
    if (f.size() != 2)
        throw ParseError("line " + std::to_string(lineno) + ": expected 'timestamp value', got " +
                         std::to_string(f.size()) + " fields");
    DiskRecord r;
    r.timestamp = detail::parse_int_field(f[0], lineno, "timestamp");
    r.transfer_rate = detail::parse_double_field(f[1], lineno, "transfer_rate");
    if (r.transfer_rate < 0)
        throw ValidationError("line " + std::to_string(lineno) + ": negative disk transfer rate");
    return r;
}

/// Probe and disk streams must arrive timestamp-sorted; the parsers reject
/// out-of-order data instead of re-sorting so collection problems surface
/// at ingestion.
inline std::vector<ProbeRecord> parse_probe_log(std::istream& in) {
    std::vector<ProbeRecord> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::is_blank_or_comment(line)) continue;
        ProbeRecord r = parse_probe_line(line, lineno);
        if (!out.empty() && r.timestamp < out.back().timestamp)
            throw ValidationError("line " + std::to_string(lineno) +
                                  ": timestamps out of order");
        out.push_back(r);
    }
    return out;
}

inline std::vector<ProbeRecord> parse_probe_log(const std::string& text) {
    std::istringstream in(text);
    return parse_probe_log(in);
}

inline std::vector<DiskRecord> parse_disk_log(std::istream& in) {
    std::vector<DiskRecord> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::is_blank_or_comment(line)) continue;
        DiskRecord r = parse_disk_line(line, lineno);
        if (!out.empty() && r.timestamp < out.back().timestamp)
            throw ValidationError("line " + std::to_string(lineno) +
                                  ": timestamps out of order");
        out.push_back(r);
    }
    return out;
}

inline std::vector<DiskRecord> parse_disk_log(const std::string& text) {
    std::istringstream in(text);
    return parse_disk_log(in);
}

inline void serialize(const TransferRecord& r, std::string& out) {
    out += r.source_id;
    out += ' ';
    out += r.file_name;
    out += ' ';
    out += std::to_string(r.file_size);
    out += ' ';
    out += r.volume;
    out += ' ';
    out += std::to_string(r.start_time);
    out += ' ';
    out += std::to_string(r.end_time);
    out += ' ';
    out += std::to_string(r.duration);
    out += ' ';
    out += std::to_string(r.bandwidth);
    out += r.direction == Direction::Read ? " Read " : " Write ";
    out += std::to_string(r.streams);
    out += ' ';
    out += std::to_string(r.tcp_buffer);
    out += '\n';
}

inline std::string serialize_transfer_log(const std::vector<TransferRecord>& records) {
    std::string out;
    for (const auto& r : records) serialize(r, out);
    return out;
}

inline std::string serialize_probe_log(const std::vector<ProbeRecord>& records) {
    std::string out;
    for (const auto& r : records) {
        out += std::to_string(r.timestamp);
        out += ' ';
        out += detail::format_double(r.bandwidth);
        if (r.probe_size != kDefaultProbeSize) {
            out += ' ';
            out += std::to_string(r.probe_size);
        }
        out += '\n';
    }
    return out;
}

inline std::string serialize_disk_log(const std::vector<DiskRecord>& records) {
    std::string out;
    for (const auto& r : records) {
        out += std::to_string(r.timestamp);
        out += ' ';
        out += detail::format_double(r.transfer_rate);
        out += '\n';
    }
    return out;
}

/// Order-preserving subsequence of records in the given size class.
inline std::vector<TransferRecord> filter_by_class(const std::vector<TransferRecord>& records,
                                                   SizeClass cls) {
    std::vector<TransferRecord> out;
    for (const auto& r : records)
        if (classify_size(r.file_size) == cls) out.push_back(r);
    return out;
}

}  // namespace xfercast
