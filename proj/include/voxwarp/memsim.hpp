#pragma once
// Memory-centric (fully streaming) rendering: the ray index table that
// regroups ray samples by the MVoxel holding their features, the streaming
// renderer that walks MVoxels in DRAM address order, and the pixel-centric
// trace generator used as the baseline for the same DRAM address map.

#include <cstdint>
#include <utility>
#include <vector>

#include "voxwarp/renderer.hpp"
#include "voxwarp/scene.hpp"
#include "voxwarp/trace.hpp"

namespace voxwarp {

inline constexpr int kRitEntryBytes = 48;

// One ray sample resident in an MVoxel: its eight global vertex ids and
// trilinear weights. The wire format is 8 4-byte vertex ids followed by 8
// fp16 weights (48 bytes); ray_id/sample_index address the in-memory sample
// record and are not serialized. The fp16 weights feed the timing/energy
// models only; the functional renderer recomputes fp32 weights so its
// output stays bit-identical to the pixel-centric path.
struct RitEntry {
    int64_t ray_id = 0;
    int sample_index = 0;
    uint32_t vids[8] = {0, 0, 0, 0, 0, 0, 0, 0};
    uint16_t weight_bits[8] = {0, 0, 0, 0, 0, 0, 0, 0};
};

void serialize_rit_entry(const RitEntry& e, uint8_t out[kRitEntryBytes]);

// Per-MVoxel entry lists, ordered by (ray_id, sample_index) within each
// MVoxel. The union of entries over all MVoxels is exactly the multiset of
// in-bbox ray samples.
struct RayIndexTable {
    std::vector<std::vector<RitEntry>> per_mvoxel;
    int64_t total_entries = 0;

    int64_t bytes() const { return total_entries * kRitEntryBytes; }
};

// Samples of one frame, one vector per ray (sample_ray output).
using FrameSamples = std::vector<std::vector<RaySample>>;

FrameSamples sample_frame_rays(const std::vector<Ray>& rays, const FeatureGrid& grid,
                               const RenderConfig& cfg);

// Each in-bbox sample is assigned to the MVoxel owning its voxel's
// min-corner vertex; halo layouts keep all 8 corner vertices resident
// there. Requires a halo layout matching the grid.
RayIndexTable build_rit(const FrameSamples& samples, const FeatureGrid& grid,
                        const MVoxelGrid& mgrid);
RayIndexTable build_rit(const std::vector<Ray>& rays, const FeatureGrid& grid,
                        const MVoxelGrid& mgrid, const RenderConfig& cfg);

struct MemoryCentricResult {
    std::vector<PixelOut> pixels;
    AccessTrace trace;
    RenderStats stats;
};

// Streams MVoxels once each in ascending DRAM address order, shading every
// resident sample while its block is on chip, then composites each ray in
// sample-index order. Pixels are bit-identical to render_rays. The trace
// holds, per non-empty MVoxel, one DRAM rit read, one DRAM feature-block
// read, and 8 SRAM feature reads per entry (vertex granularity: channel-0
// word address inside the block, 2*channels bytes).
MemoryCentricResult render_memory_centric_rays(const FeatureGrid& grid, const MlpWeights& mlp,
                                               const MVoxelGrid& mgrid,
                                               const std::vector<Ray>& rays,
                                               const std::vector<double>& dir_cam_z,
                                               const RenderConfig& cfg);

struct MemoryCentricFrame {
    Frame frame;
    AccessTrace trace;
    RenderStats stats;
};

MemoryCentricFrame render_memory_centric(const FeatureGrid& grid, const MlpWeights& mlp,
                                         const MVoxelGrid& mgrid, const Pose& pose,
                                         const CameraIntrinsics& intr, const RenderConfig& cfg);

// DRAM feature reads a pixel-centric renderer performs: ray-major,
// sample-major, 8 vertex reads per shaded sample (honoring early
// termination), addressed through the same MVoxel DRAM map at vertex
// granularity (home block channel-0 address, 2*channels bytes).
AccessTrace trace_pixel_centric(const FeatureGrid& grid, const MlpWeights& mlp,
                                const MVoxelGrid& mgrid, const std::vector<Ray>& rays,
                                const RenderConfig& cfg);

}  // namespace voxwarp
