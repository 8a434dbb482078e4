#include "voxwarp/hwmodel.hpp"

#include <algorithm>
#include <limits>
#include <list>
#include <set>
#include <stdexcept>
#include <unordered_map>

namespace voxwarp {

// ---- Cache ------------------------------------------------------------------

namespace {

std::vector<uint64_t> expand_lines(const AccessTrace& trace, int64_t line_bytes) {
    std::vector<uint64_t> lines;
    for (const AccessEvent& e : trace.events) {
        const uint64_t first = e.address / static_cast<uint64_t>(line_bytes);
        const uint64_t last =
            (e.address + static_cast<uint64_t>(e.size) - 1) / static_cast<uint64_t>(line_bytes);
        for (uint64_t l = first; l <= last; ++l) lines.push_back(l);
    }
    return lines;
}

CacheReport run_lru(const std::vector<uint64_t>& lines, int64_t capacity_lines) {
    CacheReport rep;
    rep.accesses = static_cast<int64_t>(lines.size());
    std::list<uint64_t> order;  // front = most recent
    std::unordered_map<uint64_t, std::list<uint64_t>::iterator> where;
    for (const uint64_t l : lines) {
        const auto it = where.find(l);
        if (it != where.end()) {
            order.splice(order.begin(), order, it->second);
            continue;
        }
        ++rep.misses;
        if (static_cast<int64_t>(order.size()) == capacity_lines) {
            where.erase(order.back());
            order.pop_back();
        }
        order.push_front(l);
        where[l] = order.begin();
    }
    return rep;
}

CacheReport run_belady(const std::vector<uint64_t>& lines, int64_t capacity_lines) {
    CacheReport rep;
    rep.accesses = static_cast<int64_t>(lines.size());
    const int64_t n = rep.accesses;
    constexpr int64_t kNever = std::numeric_limits<int64_t>::max();
    std::vector<int64_t> next_use(static_cast<size_t>(n), kNever);
    {
        std::unordered_map<uint64_t, int64_t> seen;
        for (int64_t i = n - 1; i >= 0; --i) {
            const auto it = seen.find(lines[static_cast<size_t>(i)]);
            if (it != seen.end()) next_use[static_cast<size_t>(i)] = it->second;
            seen[lines[static_cast<size_t>(i)]] = i;
        }
    }
    // Resident lines keyed by their next use; evict the farthest.
    std::set<std::pair<int64_t, uint64_t>> by_next;
    std::unordered_map<uint64_t, int64_t> resident;  // line -> key in by_next
    for (int64_t i = 0; i < n; ++i) {
        const uint64_t l = lines[static_cast<size_t>(i)];
        const auto it = resident.find(l);
        if (it != resident.end()) {
            by_next.erase({it->second, l});
        } else {
            ++rep.misses;
            if (static_cast<int64_t>(resident.size()) == capacity_lines) {
                const auto victim = std::prev(by_next.end());
                resident.erase(victim->second);
                by_next.erase(victim);
            }
        }
        resident[l] = next_use[static_cast<size_t>(i)];
        by_next.insert({next_use[static_cast<size_t>(i)], l});
    }
    return rep;
}

}  // namespace

CacheReport simulate_cache(const AccessTrace& trace, int64_t capacity_bytes, int64_t line_bytes,
                           CachePolicy policy) {
    if (line_bytes <= 0) throw std::invalid_argument("simulate_cache: line_bytes must be positive");
    if (capacity_bytes < line_bytes)
        throw std::invalid_argument("simulate_cache: capacity below one line");
    const int64_t capacity_lines = capacity_bytes / line_bytes;
    const std::vector<uint64_t> lines = expand_lines(trace, line_bytes);
    CacheReport rep =
        policy == CachePolicy::Lru ? run_lru(lines, capacity_lines) : run_belady(lines, capacity_lines);
    rep.miss_rate =
        rep.accesses > 0 ? static_cast<double>(rep.misses) / static_cast<double>(rep.accesses) : 0.0;
    return rep;
}

// ---- SRAM banking -----------------------------------------------------------

int BankLayout::bank_of(int64_t slot, int channel) const {
    if (mode == BankMode::FeatureMajor) return static_cast<int>(slot % banks);
    return channel % banks;
}

int64_t BankLayout::row_of(int64_t slot, int channel) const {
    if (mode == BankMode::FeatureMajor) return (slot / banks) * channels + channel;
    return slot + static_cast<int64_t>(channel / banks) * slots_per_block;
}

void BankLayout::validate() const {
    if (banks <= 0 || channels <= 0 || slots_per_block <= 0 || bank_bytes <= 0 ||
        bank_bytes % 2 != 0)
        throw std::invalid_argument("bank layout: invalid geometry");
    if (row_of(slots_per_block - 1, channels - 1) >= words_per_bank())
        throw std::invalid_argument("bank layout: block does not fit the banks");
}

BankConflictReport simulate_bank_conflicts(const std::vector<GatherBatch>& schedule,
                                           const BankLayout& layout, int lanes, int ports) {
    layout.validate();
    if (lanes <= 0) throw std::invalid_argument("simulate_bank_conflicts: lanes must be positive");
    if (ports <= 0) throw std::invalid_argument("simulate_bank_conflicts: ports must be positive");
    if (layout.mode == BankMode::ChannelMajor && lanes > layout.banks)
        throw std::invalid_argument(
            "simulate_bank_conflicts: channel-major pins each lane to a bank; lanes exceed banks");

    BankConflictReport rep;
    std::vector<int64_t> per_bank(static_cast<size_t>(layout.banks));
    for (const GatherBatch& batch : schedule) {
        if (static_cast<int>(batch.slots.size()) > lanes)
            throw std::invalid_argument("simulate_bank_conflicts: batch wider than the lane count");
        std::fill(per_bank.begin(), per_bank.end(), 0);
        for (size_t i = 0; i < batch.slots.size(); ++i) {
            const int bank = layout.mode == BankMode::FeatureMajor
                                 ? layout.bank_of(batch.slots[i], 0)
                                 : layout.bank_of(batch.slots[i], static_cast<int>(i));
            ++per_bank[static_cast<size_t>(bank)];
        }
        int64_t worst = 0;
        for (const int64_t r : per_bank) {
            if (r > ports) rep.conflicting_requests += r - ports;
            worst = std::max(worst, (r + ports - 1) / ports);
        }
        rep.total_requests += static_cast<int64_t>(batch.slots.size());
        if (worst > 1) rep.stall_cycles += worst - 1;
    }
    rep.conflict_rate = rep.total_requests > 0 ? static_cast<double>(rep.conflicting_requests) /
                                                     static_cast<double>(rep.total_requests)
                                               : 0.0;
    return rep;
}

std::vector<GatherBatch> schedule_from_rit(const std::vector<RitEntry>& entries,
                                           const MVoxelGrid& mgrid, int64_t mid, int lanes) {
    if (lanes <= 0) throw std::invalid_argument("schedule_from_rit: lanes must be positive");
    const int64_t nx = mgrid.parent_dims[0];
    const int64_t ny = mgrid.parent_dims[1];
    std::vector<GatherBatch> schedule;
    GatherBatch cur;
    cur.slots.reserve(static_cast<size_t>(lanes));
    for (const RitEntry& e : entries) {
        for (int k = 0; k < 8; ++k) {
            const int64_t vid = e.vids[k];
            const int vx = static_cast<int>(vid % nx);
            const int vy = static_cast<int>((vid / nx) % ny);
            const int vz = static_cast<int>(vid / (nx * ny));
            cur.slots.push_back(mgrid.slot_in_block(mid, vx, vy, vz));
            if (static_cast<int>(cur.slots.size()) == lanes) {
                schedule.push_back(std::move(cur));
                cur = GatherBatch{};
                cur.slots.reserve(static_cast<size_t>(lanes));
            }
        }
    }
    if (!cur.slots.empty()) schedule.push_back(std::move(cur));
    return schedule;
}

// ---- Gathering Unit ---------------------------------------------------------

void GuConfig::validate() const {
    if (banks <= 0 || ports <= 0 || mac_rows <= 0 || mac_cols <= 0 || vft_bytes <= 0 ||
        bank_bytes <= 0 || rit_entries_per_buffer <= 0 || bus_bytes_per_cycle <= 0)
        throw std::invalid_argument("gu config: all sizes must be positive");
    if (static_cast<int64_t>(banks) * bank_bytes != vft_bytes)
        throw std::invalid_argument("gu config: banks * bank_bytes must equal vft_bytes");
}

GuReport simulate_gu(const RayIndexTable& rit, const MVoxelGrid& mgrid, const GuConfig& gcfg) {
    gcfg.validate();
    if (mgrid.block_bytes > gcfg.vft_bytes)
        throw std::invalid_argument("simulate_gu: MVoxel block exceeds the feature table");

    const int64_t load =
        (mgrid.block_bytes + gcfg.bus_bytes_per_cycle - 1) / gcfg.bus_bytes_per_cycle;
    const int64_t passes = (mgrid.channels + gcfg.banks - 1) / gcfg.banks;

    std::vector<int64_t> computes;
    for (const std::vector<RitEntry>& entries : rit.per_mvoxel) {
        if (entries.empty()) continue;
        const int64_t s = static_cast<int64_t>(entries.size());
        computes.push_back(8 * passes * ((s + gcfg.ports - 1) / gcfg.ports));
    }

    GuReport rep;
    rep.mvoxels_fetched = static_cast<int64_t>(computes.size());
    if (computes.empty()) return rep;
    rep.mvoxel_load_cycles = load * rep.mvoxels_fetched;
    rep.total_cycles = load;
    for (size_t i = 0; i < computes.size(); ++i) {
        rep.gather_cycles += computes[i];
        const int64_t next_load = i + 1 < computes.size() ? load : 0;
        rep.total_cycles += std::max(computes[i], next_load);
    }
    return rep;
}

int64_t mac_cycles(int64_t samples, const MlpWeights& mlp, const GuConfig& gcfg) {
    gcfg.validate();
    if (samples < 0) throw std::invalid_argument("mac_cycles: negative sample count");
    mlp.validate();
    auto tiles = [&](int64_t in, int64_t out) {
        return ((in + gcfg.mac_rows - 1) / gcfg.mac_rows) * ((out + gcfg.mac_cols - 1) / gcfg.mac_cols);
    };
    return samples * (tiles(mlp.in_dim, mlp.hidden) + tiles(mlp.hidden, 4));
}

// ---- Energy -----------------------------------------------------------------

void EnergyModel::validate() const {
    if (e_sram <= 0 || e_dram_stream <= 0 || e_dram_random <= 0 || wireless_nj_per_byte < 0 ||
        wireless_bytes_per_second <= 0)
        throw std::invalid_argument("energy model: rates must be positive");
}

EnergyReport energy_report(const AccessTrace& trace, int64_t cycles, const EnergyModel& em) {
    em.validate();
    EnergyReport rep;
    rep.cycles = cycles;
    for (const AccessEvent& e : trace.events) {
        if (e.level == MemLevel::Sram) {
            rep.sram_bytes += e.size;
            continue;
        }
        switch (e.tag) {
            case AccessTag::Streaming: rep.dram_stream_bytes += e.size; break;
            case AccessTag::Random: rep.dram_random_bytes += e.size; break;
            case AccessTag::Unclassified:
                throw std::invalid_argument("energy_report: DRAM events must be classified first");
        }
    }
    rep.dram_energy = static_cast<double>(rep.dram_random_bytes) * em.e_dram_random +
                      static_cast<double>(rep.dram_stream_bytes) * em.e_dram_stream;
    rep.sram_energy = static_cast<double>(rep.sram_bytes) * em.e_sram;
    rep.total_energy = rep.dram_energy + rep.sram_energy;
    return rep;
}

SavingsAttribution attribute_savings(const EnergyReport& baseline, const EnergyReport& candidate) {
    const double bytes_b =
        static_cast<double>(baseline.dram_stream_bytes + baseline.dram_random_bytes);
    const double bytes_c =
        static_cast<double>(candidate.dram_stream_bytes + candidate.dram_random_bytes);
    const double mean_b = bytes_b > 0 ? baseline.dram_energy / bytes_b : 0.0;
    const double mean_c = bytes_c > 0 ? candidate.dram_energy / bytes_c : 0.0;
    SavingsAttribution sa;
    sa.traffic_component = (bytes_b - bytes_c) * mean_b;
    sa.conversion_component = bytes_c * (mean_b - mean_c);
    sa.dram_savings = baseline.dram_energy - candidate.dram_energy;
    sa.sram_delta = candidate.sram_energy - baseline.sram_energy;
    sa.total_savings = baseline.total_energy - candidate.total_energy;
    return sa;
}

RemoteCost remote_model(int64_t ref_bytes, const EnergyModel& em) {
    em.validate();
    if (ref_bytes < 0) throw std::invalid_argument("remote_model: negative byte count");
    RemoteCost rc;
    rc.tx_latency_s = static_cast<double>(ref_bytes) / em.wireless_bytes_per_second;
    rc.tx_energy_j = static_cast<double>(ref_bytes) * em.wireless_nj_per_byte / 1.0e9;
    return rc;
}

}  // namespace voxwarp
