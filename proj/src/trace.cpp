#include "voxwarp/trace.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace voxwarp {

const char* to_string(MemLevel level) {
    return level == MemLevel::Dram ? "dram" : "sram";
}

const char* to_string(AccessKind kind) {
    switch (kind) {
        case AccessKind::Feature: return "feature";
        case AccessKind::Rit: return "rit";
        case AccessKind::Weights: return "weights";
    }
    return "?";
}

const char* to_string(AccessTag tag) {
    switch (tag) {
        case AccessTag::Unclassified: return "unclassified";
        case AccessTag::Streaming: return "streaming";
        case AccessTag::Random: return "random";
    }
    return "?";
}

int64_t AccessTrace::add(MemLevel level, AccessKind kind, uint64_t address, int64_t size) {
    if (size <= 0) throw std::invalid_argument("trace: event size must be positive");
    AccessEvent e;
    e.seq = events.empty() ? 0 : events.back().seq + 1;
    e.level = level;
    e.kind = kind;
    e.address = address;
    e.size = size;
    events.push_back(e);
    return e.seq;
}

void AccessTrace::append(const AccessTrace& other) {
    events.reserve(events.size() + other.events.size());
    for (AccessEvent e : other.events) {
        e.seq = events.empty() ? 0 : events.back().seq + 1;
        events.push_back(e);
    }
}

AccessTrace filter_trace(const AccessTrace& trace, std::optional<MemLevel> level,
                         std::optional<AccessKind> kind) {
    AccessTrace out;
    for (const AccessEvent& e : trace.events) {
        if (level && e.level != *level) continue;
        if (kind && e.kind != *kind) continue;
        out.events.push_back(e);
    }
    return out;
}

TraceStats classify_trace(AccessTrace& trace, int64_t burst_bytes) {
    if (burst_bytes <= 0) throw std::invalid_argument("classify_trace: burst_bytes must be positive");
    TraceStats stats;
    stats.events = trace.size();

    std::vector<std::pair<uint64_t, uint64_t>> intervals;
    intervals.reserve(trace.events.size());

    int64_t streaming = 0;
    int64_t counted = 0;
    const uint64_t burst = static_cast<uint64_t>(burst_bytes);
    for (size_t i = 0; i < trace.events.size(); ++i) {
        AccessEvent& e = trace.events[i];
        stats.bytes_total += e.size;
        intervals.emplace_back(e.address, e.address + static_cast<uint64_t>(e.size));
        if (i == 0) {
            e.tag = AccessTag::Streaming;
            continue;
        }
        const AccessEvent& p = trace.events[i - 1];
        const uint64_t prev_end = p.address + static_cast<uint64_t>(p.size);
        const bool stream = e.address / burst == prev_end / burst;
        e.tag = stream ? AccessTag::Streaming : AccessTag::Random;
        ++counted;
        if (stream) ++streaming;
    }

    std::sort(intervals.begin(), intervals.end());
    uint64_t unique = 0;
    uint64_t cur_lo = 0, cur_hi = 0;
    bool open = false;
    for (const auto& [lo, hi] : intervals) {
        if (!open) {
            cur_lo = lo;
            cur_hi = hi;
            open = true;
        } else if (lo <= cur_hi) {
            cur_hi = std::max(cur_hi, hi);
        } else {
            unique += cur_hi - cur_lo;
            cur_lo = lo;
            cur_hi = hi;
        }
    }
    if (open) unique += cur_hi - cur_lo;

    stats.unique_bytes = static_cast<int64_t>(unique);
    stats.streaming_fraction = counted > 0 ? static_cast<double>(streaming) / counted : 1.0;
    stats.redundancy_ratio =
        unique > 0 ? static_cast<double>(stats.bytes_total) / static_cast<double>(unique) : 1.0;
    return stats;
}

void classify_event_streams(AccessTrace& trace, int64_t burst_bytes) {
    if (burst_bytes <= 0)
        throw std::invalid_argument("classify_event_streams: burst_bytes must be positive");
    const uint64_t burst = static_cast<uint64_t>(burst_bytes);
    std::optional<uint64_t> prev_end[2][3];
    for (AccessEvent& e : trace.events) {
        const int li = e.level == MemLevel::Dram ? 0 : 1;
        const int ki = static_cast<int>(e.kind);
        std::optional<uint64_t>& pe = prev_end[li][ki];
        e.tag = !pe || e.address / burst == *pe / burst ? AccessTag::Streaming : AccessTag::Random;
        pe = e.address + static_cast<uint64_t>(e.size);
    }
}

std::string trace_csv_string(const AccessTrace& trace) {
    std::string out = "seq,level,kind,address,size,tag\n";
    char line[128];
    for (const AccessEvent& e : trace.events) {
        std::snprintf(line, sizeof line, "%lld,%s,%s,%llu,%lld,%s\n",
                      static_cast<long long>(e.seq), to_string(e.level), to_string(e.kind),
                      static_cast<unsigned long long>(e.address), static_cast<long long>(e.size),
                      to_string(e.tag));
        out += line;
    }
    return out;
}

void write_trace_csv(const AccessTrace& trace, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    const std::string s = trace_csv_string(trace);
    f.write(s.data(), static_cast<std::streamsize>(s.size()));
    if (!f) throw std::runtime_error("short write: " + path);
}

}  // namespace voxwarp
