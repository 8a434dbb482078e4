#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "voxwarp/geometry.hpp"
#include "voxwarp/half.hpp"
#include "voxwarp/image.hpp"
#include "voxwarp/math.hpp"

namespace voxwarp {

struct Box3 {
    Vec3 min{-1, -1, -1};
    Vec3 max{1, 1, 1};
};

// Dense voxel grid of per-vertex feature vectors. Storage is fp16; all
// arithmetic on gathered features runs in fp32. Vertex (x, y, z) has linear
// id x + Nx*(y + Ny*z); its features occupy [id*C, (id+1)*C).
struct FeatureGrid {
    std::array<int, 3> dims{0, 0, 0};  // vertices per axis, each >= 2
    int channels = 0;                  // >= 4
    Box3 bbox;
    std::vector<uint16_t> features;  // fp16 bits, vertex-major

    void validate() const;
    int64_t vertex_count() const {
        return static_cast<int64_t>(dims[0]) * dims[1] * dims[2];
    }
    int64_t vertex_id(int x, int y, int z) const {
        return x + static_cast<int64_t>(dims[0]) * (y + static_cast<int64_t>(dims[1]) * z);
    }
    uint16_t feature_bits(int64_t vid, int c) const {
        return features[static_cast<size_t>(vid) * channels + c];
    }
    float feature(int64_t vid, int c) const { return half_to_float(feature_bits(vid, c)); }
    Vec3 cell_size() const {
        return {(bbox.max.x - bbox.min.x) / (dims[0] - 1),
                (bbox.max.y - bbox.min.y) / (dims[1] - 1),
                (bbox.max.z - bbox.min.z) / (dims[2] - 1)};
    }
    bool contains(const Vec3& p) const {
        return p.x >= bbox.min.x && p.x <= bbox.max.x && p.y >= bbox.min.y &&
               p.y <= bbox.max.y && p.z >= bbox.min.z && p.z <= bbox.max.z;
    }
};

// Cell coordinates plus fractional position of a point inside its cell.
// The point reconstructs as bbox.min + (cell + frac) * cell_size.
struct VoxelCoord {
    std::array<int, 3> cell{0, 0, 0};
    Vec3 frac;
    int64_t linear = 0;  // cell linear id over the (N-1)^3 cell lattice
};

// Locate the cell containing p. Floor semantics at cell boundaries (a point
// exactly on a boundary belongs to the upper cell, i.e. frac 0), clamped to
// the last cell at the top faces. Throws std::invalid_argument outside bbox.
VoxelCoord voxel_id(const Vec3& p, const FeatureGrid& grid);

// Decoder layers stay small enough for stack scratch buffers.
inline constexpr int kMaxMlpHidden = 128;

// Two-layer MLP decoding a feature vector into (density logit, rgb logits):
//   hidden = relu(w1 * F + b1);  out = w2 * hidden + b2
// w1 is hidden x in (row-major), w2 is 4 x hidden.
struct MlpWeights {
    int in_dim = 0;
    int hidden = 0;
    std::vector<float> w1, b1, w2, b2;

    void validate() const;
};

// MLP that reproduces the first four feature channels exactly: paired
// +/- ReLU rows subtract back to the input, so out = (F0, F1, F2, F3).
MlpWeights identity_mlp(int in_dim);
MlpWeights random_mlp(int in_dim, int hidden, uint64_t seed);

// Partition of the vertex lattice into MVoxels (fixed-shape blocks) with a
// contiguous DRAM address map, block after block in mvoxel-id order. Blocks
// are padded to a uniform byte size.
//
// Plain mode tiles vertices: block b owns vertices [b*m, (b+1)*m) per axis,
// one slot per owned vertex.
//
// Halo mode tiles cells: block b covers cells [b*m, (b+1)*m) per axis and
// owns their min-corner vertices (the last block also absorbs the top
// vertex plane). The resident copy replicates the one-vertex halo on the
// high faces, so every covered cell has all 8 corners resident and every
// block covers at least one cell. The base shape is shrunk until the
// halo-inclusive resident block fits the buffer budget.
struct MVoxelGrid {
    std::array<int, 3> parent_dims{0, 0, 0};
    int channels = 0;
    std::array<int, 3> mshape{8, 8, 8};    // owned vertices per axis
    std::array<int, 3> capacity{8, 8, 8};  // resident slots per axis (mshape, +1 with halo)
    std::array<int, 3> mdims{0, 0, 0};     // MVoxels per axis
    bool halo = false;
    uint64_t dram_base = 0;
    int64_t slots_per_block = 0;
    int64_t block_bytes = 0;

    int64_t mvoxel_count() const {
        return static_cast<int64_t>(mdims[0]) * mdims[1] * mdims[2];
    }
    int64_t feature_bytes_total() const { return mvoxel_count() * block_bytes; }
    uint64_t block_address(int64_t mid) const { return dram_base + mid * block_bytes; }
    // Address range immediately after the feature blocks; ray-index-table
    // payloads are mapped there by the memory simulator.
    uint64_t rit_base() const { return dram_base + feature_bytes_total(); }

    int64_t mvoxel_linear(int bx, int by, int bz) const {
        return bx + static_cast<int64_t>(mdims[0]) * (by + static_cast<int64_t>(mdims[1]) * bz);
    }
    // Home MVoxel of a vertex (every vertex has exactly one). In halo mode
    // the top vertex plane belongs to the last block along its axis.
    int64_t mvoxel_of_vertex(int vx, int vy, int vz) const {
        int b[3];
        const int v[3] = {vx, vy, vz};
        for (int a = 0; a < 3; ++a) {
            b[a] = v[a] / mshape[a];
            if (b[a] > mdims[a] - 1) b[a] = mdims[a] - 1;
        }
        return mvoxel_linear(b[0], b[1], b[2]);
    }
    // MVoxel a cell is assigned to: the home of its min-corner vertex.
    int64_t mvoxel_of_cell(const std::array<int, 3>& cell) const {
        return mvoxel_of_vertex(cell[0], cell[1], cell[2]);
    }
    // Slot of a vertex inside a block's resident layout. The vertex must be
    // resident there (owned, or halo in halo mode).
    int64_t slot_in_block(int64_t mid, int vx, int vy, int vz) const;
    // (home mvoxel, home slot) for a vertex; the map is a bijection onto
    // owned slots.
    std::pair<int64_t, int64_t> vertex_home(int vx, int vy, int vz) const;
    // DRAM byte address of (vertex, channel) in its home block.
    // Channel-major within the block: all channel-0 values, then channel-1...
    uint64_t vertex_home_address(int vx, int vy, int vz, int channel) const;

    // Copy one block's resident fp16 payload out of the parent grid
    // (channel-major, padding slots zeroed). This is what a streaming fetch
    // delivers into the on-chip feature table.
    void copy_block(const FeatureGrid& grid, int64_t mid, std::vector<uint16_t>& out) const;
};

// Split a grid into MVoxels whose (resident) block fits buffer_bytes,
// starting from an 8x8x8 base shape and shrinking the largest axis first.
// Throws std::runtime_error if even a 2x2x2 base does not fit.
MVoxelGrid partition_mvoxels(const FeatureGrid& grid, int64_t buffer_bytes, bool halo = false,
                             uint64_t dram_base = 0);

// ---- Synthetic scenes ------------------------------------------------------

struct Primitive {
    enum class Kind { Sphere, Box } kind = Kind::Sphere;
    Vec3 center;        // sphere
    double radius = 0;  // sphere
    Box3 box;           // box
    Vec3f albedo{0.5f, 0.5f, 0.5f};

    bool contains(const Vec3& p) const;
    // Camera-independent ray hit: smallest t > 0 with origin + t*dir on the
    // surface, or +infinity. dir need not be unit length.
    double ray_hit(const Vec3& origin, const Vec3& dir) const;
};

struct SceneSpec {
    std::array<int, 3> dims{64, 64, 64};
    int channels = 32;
    Box3 bbox;
    std::vector<Primitive> primitives;
    Vec3f background{0, 0, 0};
    // Density logits rasterized into channel 0; steep so surfaces resolve
    // within a fraction of a cell after trilinear smoothing.
    float logit_inside = 400.0f;
    float logit_outside = -400.0f;
    // Smooth positional albedo field (mean 0.5) rasterized at every vertex
    // instead of per-primitive constants; gives surfaces gradual texture
    // with no color step at the surface itself.
    bool textured_albedo = false;
    double texture_freq = 3.0;
    double texture_amp = 0.3;  // must stay below 0.5
    bool identity_decode = true;
    int mlp_hidden = 16;       // random-decode only
    uint64_t seed = 1;         // extra-channel fill and random decode
};

// The positional albedo field used when textured_albedo is set.
Vec3f texture_albedo(const SceneSpec& spec, const Vec3& p);

// A renderable grid plus the closed-form geometry it was rasterized from.
struct SyntheticScene {
    FeatureGrid grid;
    MlpWeights mlp;
    SceneSpec spec;

    // Exact projected depth (camera-space Z) of the primitive set; +infinity
    // where no primitive is hit. This is the geometry proxy used to separate
    // disoccluded pixels from true background during warping.
    Image1f analytic_depth(const Pose& pose, const CameraIntrinsics& intr) const;
    double analytic_depth_at(const Pose& pose, const CameraIntrinsics& intr,
                             const Vec2& px) const;
};

// Rasterize spec primitives into a feature grid with an exact-decode MLP
// (or a seeded random one). Throws std::invalid_argument on bad dims/channels.
SyntheticScene build_synthetic_scene(const SceneSpec& spec);

// Parse the key:value scene description (dims/channels/bbox/mlp/background
// plus one "sphere:" or "box:" line per primitive).
SceneSpec parse_scene_spec(const std::string& text);
SceneSpec load_scene_spec(const std::string& path);

// Random feature grid for randomized equivalence tests: bounded density and
// color logits, deterministic in the seed.
FeatureGrid random_feature_grid(std::array<int, 3> dims, int channels, const Box3& bbox,
                                uint64_t seed);

// ---- Scene container -------------------------------------------------------
// Text header (key: value lines, payload offset and CRC32 included) followed
// by the fp16 little-endian payload: grid features, then MLP weights.

void save_scene(const std::string& path, const FeatureGrid& grid, const MlpWeights& mlp);
struct LoadedScene {
    FeatureGrid grid;
    MlpWeights mlp;
};
LoadedScene load_scene(const std::string& path);

}  // namespace voxwarp
