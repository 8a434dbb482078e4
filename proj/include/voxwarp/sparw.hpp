#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "voxwarp/renderer.hpp"
#include "voxwarp/scene.hpp"

namespace voxwarp {

struct WarpConfig {
    int window = 16;  // target frames served by one reference
    // Warped pixels whose ray-angle difference reaches phi are re-rendered.
    // phi = 0 disables warping entirely; phi = infinity disables the check.
    double phi = std::numeric_limits<double>::infinity();
    double frame_interval = 1.0 / 30.0;  // seconds between trajectory poses
};

enum class PixelKind : uint8_t { Warped = 0, Disoccluded = 1, Void = 2 };

// Forward-warp output. Pixels a splat landed on are Warped and carry the
// splat's color, target-camera depth, source opacity, and ray angle. The
// rest start Void (depth +infinity) until classify_holes splits them into
// Disoccluded (geometry present, needs rendering) and Void.
struct WarpResult {
    int width = 0, height = 0;
    Image3f color;
    Image1f depth;    // target camera-space Z of the winning splat
    Image1f opacity;  // source-pixel opacity carried through the splat
    std::vector<PixelKind> kind;
    std::vector<float> angle;  // radians; NaN where no splat landed
    int64_t splat_count = 0;   // splats that landed in bounds
    int64_t dropped = 0;       // splats behind z_near or out of bounds

    bool valid(int x, int y) const {
        return kind[static_cast<size_t>(y) * width + x] == PixelKind::Warped;
    }
};

struct HoleCounts {
    int64_t warped = 0;
    int64_t disoccluded = 0;
    int64_t voids = 0;
};

// One splat candidate: a reference pixel landing on target pixel (x, y).
struct SplatPoint {
    int x = 0, y = 0;
    double depth = 0.0;  // target camera-space Z, > 0
    Vec3f color;
    float opacity = 0.0f;
    float angle = 0.0f;
    int64_t source_linear = 0;  // reference pixel linear index, the tie key
};

// Z-buffer resolution of splat candidates: per pixel the nearest depth wins;
// candidates within 1e-6 relative of the minimum tie, and the smallest
// source_linear among them is taken. Independent of input order.
WarpResult splat_points(const std::vector<SplatPoint>& splats, int width, int height);

// Splat every finite-depth reference pixel into the target view: unproject
// with the reference depth, apply the ref-to-target rigid transform, project,
// round to the containing pixel, and resolve with splat_points.
WarpResult warp(const Frame& ref, const Pose& tgt_pose, const CameraIntrinsics& intr);

// Split non-warped pixels by the target-view projected depth of the scene
// geometry: finite depth means the pixel is disoccluded and needs rendering,
// infinite depth means empty space (background, no work). Returns the
// resulting per-kind pixel counts.
HoleCounts classify_holes(WarpResult& w, const Image1f& tgt_depth_proj);

// Demote warped pixels whose ray angle reaches phi to Disoccluded. Returns
// the number demoted.
int64_t apply_phi(WarpResult& w, double phi);

struct TargetFrame {
    Frame frame;
    int64_t warped_px = 0;
    int64_t sparse_px = 0;  // rendered by the sparse pass
    int64_t void_px = 0;
    int64_t demoted_px = 0;        // warped pixels re-rendered due to phi
    double rendered_fraction = 0;  // sparse_px / (W*H)
};

// Produce one target frame from a reference: warp, classify holes against
// the scene's projected depth, apply phi, render exactly the disoccluded
// pixels, and compose. Void pixels take the render config's background.
TargetFrame render_target(const Frame& ref, const Pose& tgt_pose, const CameraIntrinsics& intr,
                          const SyntheticScene& scene, const WarpConfig& wcfg,
                          const RenderConfig& rcfg, RenderStats* stats = nullptr);

// Predict where the camera will be half a window ahead of T2, given the two
// most recent poses: position T2 + (T2 - T1) * (window/2), orientation
// advanced by the T1->T2 relative rotation scaled via its axis-angle form.
Pose extrapolate_reference_pose(const Pose& t1, const Pose& t2, const WarpConfig& cfg);

enum class SequenceMode {
    SpaRW,     // references rendered at extrapolated poses
    TempWarp,  // reference = previously produced output frame (errors compound)
};

struct SequenceConfig {
    WarpConfig warp;
    RenderConfig render;
    SequenceMode mode = SequenceMode::SpaRW;
    // Render every target pose in full as well and record PSNR against it.
    bool compute_psnr = true;
};

struct ScheduleEntry {
    enum class Kind { Reference, Target } kind = Kind::Target;
    int frame = -1;          // trajectory index; -1 for off-trajectory references
    int reference_id = -1;   // reference used (targets) or own id (references)
    int concurrent_with = -1;  // reference rendered while this frame is produced
    Pose pose;
};

struct LedgerRow {
    int frame = 0;  // trajectory index; references use their first served frame
    std::string kind;  // "reference" or "target"
    int64_t warped_px = 0;
    int64_t sparse_px = 0;  // full renders report W*H here
    int64_t void_px = 0;
    double psnr_vs_full = std::numeric_limits<double>::infinity();
};

struct SequenceResult {
    std::vector<Frame> frames;  // one displayed frame per trajectory pose
    std::vector<ScheduleEntry> schedule;
    std::vector<LedgerRow> ledger;
    int reference_renders = 0;     // full renders performed (bootstrap included)
    int64_t sparse_pixels = 0;     // total sparse-rendered pixels
    int64_t full_render_pixels = 0;  // total pixels rendered by full passes
};

// Render a trajectory with windowed warping. Frame 0 is always a full render
// and displays as itself. Each window of `window` targets gets a reference:
// in SpaRW mode a full render at a pose extrapolated from the two trajectory
// poses preceding the window (the first window uses poses 0 and 1), in
// TempWarp mode the output frame just before the window. Throws
// std::invalid_argument for trajectories shorter than 2 poses.
SequenceResult run_sequence(const std::vector<Pose>& trajectory, const SyntheticScene& scene,
                            const CameraIntrinsics& intr, const SequenceConfig& cfg);

// CSV with header frame,kind,warped_px,sparse_px,void_px,psnr_vs_full.
void write_ledger_csv(const std::string& path, const std::vector<LedgerRow>& rows);
std::string ledger_csv_string(const std::vector<LedgerRow>& rows);

// Trajectory file: one pose per line, 12 numbers, row-major 3x4 [R | t].
// Blank lines and lines starting with '#' are skipped.
std::vector<Pose> load_trajectory(const std::string& path);
void save_trajectory(const std::string& path, const std::vector<Pose>& poses);

}  // namespace voxwarp
