#include "voxwarp/memsim.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace voxwarp {

namespace {

void require_halo_layout(const FeatureGrid& grid, const MVoxelGrid& mgrid) {
    if (!mgrid.halo)
        throw std::invalid_argument(
            "memsim: needs a halo MVoxel layout (straddling voxels must be resident)");
    if (mgrid.parent_dims != grid.dims || mgrid.channels != grid.channels)
        throw std::invalid_argument("memsim: MVoxel layout does not match the grid");
}

struct CornerSlots {
    int64_t slot[8];
};

// Resident slots of a cell's 8 corners inside its owning block.
CornerSlots corner_slots(const MVoxelGrid& mgrid, int64_t mid, const std::array<int, 3>& cell) {
    CornerSlots s;
    for (int k = 0; k < 8; ++k) {
        const int vx = cell[0] + ((k >> 0) & 1);
        const int vy = cell[1] + ((k >> 1) & 1);
        const int vz = cell[2] + ((k >> 2) & 1);
        s.slot[k] = mgrid.slot_in_block(mid, vx, vy, vz);
    }
    return s;
}

}  // namespace

void serialize_rit_entry(const RitEntry& e, uint8_t out[kRitEntryBytes]) {
    uint8_t* p = out;
    for (int k = 0; k < 8; ++k) {
        const uint32_t v = e.vids[k];
        p[0] = static_cast<uint8_t>(v);
        p[1] = static_cast<uint8_t>(v >> 8);
        p[2] = static_cast<uint8_t>(v >> 16);
        p[3] = static_cast<uint8_t>(v >> 24);
        p += 4;
    }
    for (int k = 0; k < 8; ++k) {
        const uint16_t w = e.weight_bits[k];
        p[0] = static_cast<uint8_t>(w);
        p[1] = static_cast<uint8_t>(w >> 8);
        p += 2;
    }
}

FrameSamples sample_frame_rays(const std::vector<Ray>& rays, const FeatureGrid& grid,
                               const RenderConfig& cfg) {
    FrameSamples out;
    out.reserve(rays.size());
    for (size_t r = 0; r < rays.size(); ++r)
        out.push_back(sample_ray(rays[r], static_cast<int64_t>(r), grid, cfg));
    return out;
}

RayIndexTable build_rit(const FrameSamples& samples, const FeatureGrid& grid,
                        const MVoxelGrid& mgrid) {
    require_halo_layout(grid, mgrid);
    if (grid.vertex_count() > static_cast<int64_t>(std::numeric_limits<uint32_t>::max()) + 1)
        throw std::invalid_argument("build_rit: vertex ids exceed the 32-bit entry format");
    RayIndexTable rit;
    rit.per_mvoxel.resize(static_cast<size_t>(mgrid.mvoxel_count()));
    float w[8];
    for (const std::vector<RaySample>& ray_samples : samples) {
        for (const RaySample& s : ray_samples) {
            if (s.skipped) continue;
            const int64_t mid = mgrid.mvoxel_of_cell(s.voxel.cell);
            RitEntry e;
            e.ray_id = s.ray_id;
            e.sample_index = s.sample_index;
            corner_weights(s.voxel.frac, w);
            for (int k = 0; k < 8; ++k) {
                const int vx = s.voxel.cell[0] + ((k >> 0) & 1);
                const int vy = s.voxel.cell[1] + ((k >> 1) & 1);
                const int vz = s.voxel.cell[2] + ((k >> 2) & 1);
                e.vids[k] = static_cast<uint32_t>(grid.vertex_id(vx, vy, vz));
                e.weight_bits[k] = float_to_half(w[k]);
            }
            rit.per_mvoxel[static_cast<size_t>(mid)].push_back(e);
            ++rit.total_entries;
        }
    }
    return rit;
}

RayIndexTable build_rit(const std::vector<Ray>& rays, const FeatureGrid& grid,
                        const MVoxelGrid& mgrid, const RenderConfig& cfg) {
    return build_rit(sample_frame_rays(rays, grid, cfg), grid, mgrid);
}

MemoryCentricResult render_memory_centric_rays(const FeatureGrid& grid, const MlpWeights& mlp,
                                               const MVoxelGrid& mgrid,
                                               const std::vector<Ray>& rays,
                                               const std::vector<double>& dir_cam_z,
                                               const RenderConfig& cfg) {
    require_halo_layout(grid, mgrid);
    mlp.validate();
    if (mlp.in_dim != grid.channels)
        throw std::invalid_argument("memsim: mlp input width does not match grid channels");
    if (rays.size() != dir_cam_z.size())
        throw std::invalid_argument("memsim: rays and dir_cam_z size mismatch");

    const FrameSamples samples = sample_frame_rays(rays, grid, cfg);
    const RayIndexTable rit = build_rit(samples, grid, mgrid);

    MemoryCentricResult res;
    const int C = grid.channels;

    // Dense per-ray contribution buffers; sample_index == -1 marks holes so
    // compositing can walk rays in sample-index order after the block sweep.
    std::vector<std::vector<SampleContrib>> contribs(rays.size());
    for (auto& v : contribs) {
        v.resize(static_cast<size_t>(cfg.n_samples));
        for (auto& c : v) c.sample_index = -1;
    }

    std::vector<uint16_t> resident;
    std::vector<float> scratch(static_cast<size_t>(9) * C);
    float w[8];
    uint64_t rit_cursor = mgrid.rit_base();
    int64_t shaded = 0;
    for (int64_t mid = 0; mid < mgrid.mvoxel_count(); ++mid) {
        const std::vector<RitEntry>& entries = rit.per_mvoxel[static_cast<size_t>(mid)];
        if (entries.empty()) continue;
        const int64_t rit_bytes = static_cast<int64_t>(entries.size()) * kRitEntryBytes;
        res.trace.add(MemLevel::Dram, AccessKind::Rit, rit_cursor, rit_bytes);
        rit_cursor += static_cast<uint64_t>(rit_bytes);
        res.trace.add(MemLevel::Dram, AccessKind::Feature, mgrid.block_address(mid),
                      mgrid.block_bytes);
        mgrid.copy_block(grid, mid, resident);
        for (const RitEntry& e : entries) {
            const RaySample& s = samples[static_cast<size_t>(e.ray_id)][
                static_cast<size_t>(e.sample_index)];
            const CornerSlots slots = corner_slots(mgrid, mid, s.voxel.cell);
            for (int k = 0; k < 8; ++k)
                res.trace.add(MemLevel::Sram, AccessKind::Feature,
                              static_cast<uint64_t>(slots.slot[k]) * 2, 2 * C);
            corner_weights(s.voxel.frac, w);
            const SampleResult sr = shade_from_bits(
                [&](int k, int c) {
                    return resident[static_cast<size_t>(c) * mgrid.slots_per_block +
                                    slots.slot[k]];
                },
                w, mlp, C, scratch.data());
            ++shaded;
            SampleContrib& c =
                contribs[static_cast<size_t>(e.ray_id)][static_cast<size_t>(e.sample_index)];
            c.sample_index = e.sample_index;
            c.sigma = sr.sigma;
            c.rgb = sr.rgb;
            c.t = static_cast<float>(s.t);
            c.delta = static_cast<float>(s.delta);
        }
    }

    res.pixels.resize(rays.size());
    std::vector<SampleContrib> ray_contribs;
    for (size_t r = 0; r < rays.size(); ++r) {
        ray_contribs.clear();
        for (const SampleContrib& c : contribs[r])
            if (c.sample_index >= 0) ray_contribs.push_back(c);
        const PixelComposite px = composite(ray_contribs, cfg.termination_tau, cfg.early_term);
        res.pixels[r] = finalize_pixel(px, cfg.background, dir_cam_z[r]);
    }
    res.stats.pixels_rendered = static_cast<int64_t>(rays.size());
    res.stats.samples_shaded = shaded;
    return res;
}

MemoryCentricFrame render_memory_centric(const FeatureGrid& grid, const MlpWeights& mlp,
                                         const MVoxelGrid& mgrid, const Pose& pose,
                                         const CameraIntrinsics& intr, const RenderConfig& cfg) {
    intr.validate();
    pose.validate();
    std::vector<Ray> rays;
    std::vector<double> dir_cam_z;
    frame_rays(pose, intr, rays, dir_cam_z);
    MemoryCentricResult res = render_memory_centric_rays(grid, mlp, mgrid, rays, dir_cam_z, cfg);

    MemoryCentricFrame out;
    out.frame.pose = pose;
    out.frame.intr = intr;
    out.frame.color = Image3f(intr.width, intr.height);
    out.frame.depth = make_infinite_depth(intr.width, intr.height);
    out.frame.opacity = Image1f(intr.width, intr.height);
    for (int y = 0; y < intr.height; ++y)
        for (int x = 0; x < intr.width; ++x) {
            const PixelOut& px = res.pixels[static_cast<size_t>(y) * intr.width + x];
            out.frame.color.at(x, y) = px.color;
            out.frame.depth.at(x, y) = px.depth_z;
            out.frame.opacity.at(x, y) = px.opacity;
        }
    out.trace = std::move(res.trace);
    out.stats = res.stats;
    return out;
}

AccessTrace trace_pixel_centric(const FeatureGrid& grid, const MlpWeights& mlp,
                                const MVoxelGrid& mgrid, const std::vector<Ray>& rays,
                                const RenderConfig& cfg) {
    require_halo_layout(grid, mgrid);
    mlp.validate();
    if (mlp.in_dim != grid.channels)
        throw std::invalid_argument("memsim: mlp input width does not match grid channels");
    AccessTrace trace;
    const int C = grid.channels;
    std::vector<float> scratch(static_cast<size_t>(9) * C);
    float w[8];
    for (size_t r = 0; r < rays.size(); ++r) {
        const std::vector<RaySample> samples =
            sample_ray(rays[r], static_cast<int64_t>(r), grid, cfg);
        float T = 1.0f;
        for (const RaySample& s : samples) {
            if (T < cfg.early_term) break;
            if (s.skipped) continue;
            corner_weights(s.voxel.frac, w);
            const int cx = s.voxel.cell[0], cy = s.voxel.cell[1], cz = s.voxel.cell[2];
            for (int k = 0; k < 8; ++k) {
                const int vx = cx + ((k >> 0) & 1);
                const int vy = cy + ((k >> 1) & 1);
                const int vz = cz + ((k >> 2) & 1);
                trace.add(MemLevel::Dram, AccessKind::Feature,
                          mgrid.vertex_home_address(vx, vy, vz, 0), 2 * C);
            }
            const SampleResult sr = shade_from_bits(
                [&](int k, int c) {
                    const int vx = cx + ((k >> 0) & 1);
                    const int vy = cy + ((k >> 1) & 1);
                    const int vz = cz + ((k >> 2) & 1);
                    return grid.feature_bits(grid.vertex_id(vx, vy, vz), c);
                },
                w, mlp, C, scratch.data());
            const float alpha = 1.0f - std::exp(-sr.sigma * static_cast<float>(s.delta));
            T *= 1.0f - alpha;
        }
    }
    return trace;
}

}  // namespace voxwarp
