#pragma once
// Trace-driven hardware models: SRAM bank layouts and conflict simulation,
// the Gathering-Unit cycle model with double-buffered MVoxel streaming, a
// fully associative cache (LRU and Belady), and the DRAM/SRAM/wireless
// energy model.

#include <cstdint>
#include <vector>

#include "voxwarp/memsim.hpp"
#include "voxwarp/scene.hpp"
#include "voxwarp/trace.hpp"

namespace voxwarp {

// ---- Cache ------------------------------------------------------------------

enum class CachePolicy { Lru, Belady };

struct CacheReport {
    int64_t accesses = 0;  // line touches (events expand to the lines they cover)
    int64_t misses = 0;
    double miss_rate = 0.0;
};

// Fully associative line cache over the trace's byte ranges. Belady evicts
// the line with the farthest next use (future knowledge from the full
// trace); its miss rate lower-bounds every other policy.
CacheReport simulate_cache(const AccessTrace& trace, int64_t capacity_bytes, int64_t line_bytes,
                           CachePolicy policy);

// ---- SRAM banking -----------------------------------------------------------

enum class BankMode { FeatureMajor, ChannelMajor };

// Word-addressed bank map for one resident MVoxel block; a word is one fp16
// channel value. Feature-major keeps a vertex's whole feature vector in its
// home bank; channel-major spreads channel c of every vertex into bank
// c mod banks (the storing sequence restarts at bank 0 when c reaches the
// bank count).
struct BankLayout {
    BankMode mode = BankMode::ChannelMajor;
    int banks = 32;
    int64_t bank_bytes = 1024;
    int64_t slots_per_block = 512;
    int channels = 32;

    int64_t words_per_bank() const { return bank_bytes / 2; }
    int bank_of(int64_t slot, int channel) const;
    int64_t row_of(int64_t slot, int channel) const;
    void validate() const;
};

// One cycle of concurrent vector reads: slots[i] is the vertex slot lane i
// gathers (all channels of that vertex).
struct GatherBatch {
    std::vector<int64_t> slots;
};

struct BankConflictReport {
    int64_t total_requests = 0;
    int64_t conflicting_requests = 0;  // per cycle, per bank: requests beyond the ports
    int64_t stall_cycles = 0;          // extra serialization cycles beyond 1 per batch
    double conflict_rate = 0.0;
};

// Feature-major: lane i's vector read is one request to its vertex's home
// bank, so two lanes on one bank collide. Channel-major: lane i is pinned
// to bank i and reads channel i across the batch's samples, so per cycle
// each bank sees at most one request regardless of the slots requested
// (lanes must not exceed the bank count).
BankConflictReport simulate_bank_conflicts(const std::vector<GatherBatch>& schedule,
                                           const BankLayout& layout, int lanes, int ports = 1);

// Packs the 8 vertex reads of each entry, in entry order, into batches of
// `lanes` concurrent requests against block mid's resident layout.
std::vector<GatherBatch> schedule_from_rit(const std::vector<RitEntry>& entries,
                                           const MVoxelGrid& mgrid, int64_t mid, int lanes);

// ---- Gathering Unit ---------------------------------------------------------

struct GuConfig {
    int banks = 32;
    int ports = 2;  // ray samples gathered in parallel
    int mac_rows = 24;
    int mac_cols = 24;
    int64_t vft_bytes = 32768;  // on-chip vertex feature table
    int64_t bank_bytes = 1024;
    int rit_entries_per_buffer = 128;
    int64_t bus_bytes_per_cycle = 16;  // DRAM-to-VFT fill rate

    void validate() const;  // requires banks * bank_bytes == vft_bytes
};

struct GuReport {
    int64_t gather_cycles = 0;      // sum of per-MVoxel compute phases
    int64_t mvoxel_load_cycles = 0; // sum of per-MVoxel DRAM fill phases
    int64_t total_cycles = 0;       // double-buffered pipeline total
    int64_t mvoxels_fetched = 0;
};

// Per fetched (non-empty) MVoxel i with S_i resident samples:
//   compute_i = 8 * ceil(channels/banks) * ceil(S_i/ports)
//   load_i    = ceil(block_bytes / bus_bytes_per_cycle)
// The double buffer overlaps load of MVoxel i+1 with compute of i:
//   total = load_0 + sum_i max(compute_i, load_{i+1})
// RIT bytes ride the DRAM energy model, not the GU fill pipeline.
GuReport simulate_gu(const RayIndexTable& rit, const MVoxelGrid& mgrid, const GuConfig& gcfg);

// MAC-array roofline for MLP decode: one mac_rows x mac_cols tile per cycle
// per sample, per layer (bias add and activation not charged).
int64_t mac_cycles(int64_t samples, const MlpWeights& mlp, const GuConfig& gcfg);

// ---- Energy -----------------------------------------------------------------

// All DRAM/SRAM rates are per byte; defaults keep the random:streaming and
// random:SRAM ratios exactly 3:1 and 25:1.
struct EnergyModel {
    double e_sram = 3.0;
    double e_dram_stream = 25.0;
    double e_dram_random = 75.0;
    double wireless_nj_per_byte = 100.0;
    double wireless_bytes_per_second = 1.0e7;

    void validate() const;
};

struct EnergyReport {
    int64_t dram_stream_bytes = 0;
    int64_t dram_random_bytes = 0;
    int64_t sram_bytes = 0;
    double dram_energy = 0.0;
    double sram_energy = 0.0;
    double total_energy = 0.0;
    int64_t cycles = 0;
};

// Charges bytes at the model rates. DRAM events must carry streaming or
// random tags (classify_event_streams / classify_trace); SRAM bytes are
// rate-uniform so their tags are not consulted. cycles passes through for
// reporting.
EnergyReport energy_report(const AccessTrace& trace, int64_t cycles, const EnergyModel& em);

// DRAM saving split between moving fewer bytes and converting the remaining
// bytes to cheaper (more streaming) access, priced at the baseline's and
// candidate's mean DRAM energy per byte:
//   traffic_component    = (baseline_bytes - candidate_bytes) * mean_baseline
//   conversion_component = candidate_bytes * (mean_baseline - mean_candidate)
// The two sum to dram_savings. SRAM and total deltas are reported alongside.
struct SavingsAttribution {
    double traffic_component = 0.0;
    double conversion_component = 0.0;
    double dram_savings = 0.0;
    double sram_delta = 0.0;
    double total_savings = 0.0;
};

SavingsAttribution attribute_savings(const EnergyReport& baseline, const EnergyReport& candidate);

struct RemoteCost {
    double tx_latency_s = 0.0;
    double tx_energy_j = 0.0;
};

// Wireless transfer cost of shipping ref_bytes to the device.
RemoteCost remote_model(int64_t ref_bytes, const EnergyModel& em);

}  // namespace voxwarp
