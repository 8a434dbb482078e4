#pragma once
// Ordered DRAM/SRAM access-event logs and the streaming/redundancy
// classifier consumed by the cache and energy models.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace voxwarp {

enum class MemLevel { Dram, Sram };
enum class AccessKind { Feature, Rit, Weights };
enum class AccessTag { Unclassified, Streaming, Random };

const char* to_string(MemLevel level);
const char* to_string(AccessKind kind);
const char* to_string(AccessTag tag);

struct AccessEvent {
    int64_t seq = 0;
    MemLevel level = MemLevel::Dram;
    AccessKind kind = AccessKind::Feature;
    uint64_t address = 0;  // byte address
    int64_t size = 0;      // bytes, > 0
    AccessTag tag = AccessTag::Unclassified;
};

// Append-only event log. add() stamps a monotonically increasing seq
// (continuing past the last event); filtered copies keep the original
// seq so rows stay correlatable with the full trace.
struct AccessTrace {
    std::vector<AccessEvent> events;

    int64_t add(MemLevel level, AccessKind kind, uint64_t address, int64_t size);
    // Concatenates other's events after ours, re-stamping their seq to
    // keep this trace monotonic. Tags are preserved.
    void append(const AccessTrace& other);
    bool empty() const { return events.empty(); }
    int64_t size() const { return static_cast<int64_t>(events.size()); }
};

struct TraceStats {
    double streaming_fraction = 1.0;
    int64_t bytes_total = 0;
    int64_t unique_bytes = 0;
    double redundancy_ratio = 1.0;
    int64_t events = 0;
};

// Keeps events matching every given criterion (unset = match all).
AccessTrace filter_trace(const AccessTrace& trace, std::optional<MemLevel> level,
                         std::optional<AccessKind> kind = std::nullopt);

// Tags each event streaming or random and returns aggregate stats.
// An event streams when its start address lands in the same burst-aligned
// window as the previous event's end (exact continuation included); the
// first event has no predecessor, is tagged streaming, and is excluded
// from the fraction's denominator. unique_bytes merges [address, address
// + size) intervals; redundancy_ratio = bytes_total / unique_bytes.
// Traces with fewer than two events report streaming_fraction = 1.0 and
// redundancy_ratio = 1.0.
TraceStats classify_trace(AccessTrace& trace, int64_t burst_bytes = 64);

// Tags every event by classifying each (level, kind) subsequence with its
// own cursor, using the same burst-window rule as classify_trace. Use this
// on interleaved traces before energy accounting: rit and feature reads
// are independent sequential streams, and a single-cursor pass over their
// interleaving would tag both random.
void classify_event_streams(AccessTrace& trace, int64_t burst_bytes = 64);

// CSV with columns seq,level,kind,address,size,tag.
std::string trace_csv_string(const AccessTrace& trace);
void write_trace_csv(const AccessTrace& trace, const std::string& path);

}  // namespace voxwarp
