#pragma once
// Experiment orchestration: builtin scenes and trajectories, image metrics,
// the half-resolution baseline, and the report writer behind the CLI.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "voxwarp/hwmodel.hpp"
#include "voxwarp/memsim.hpp"
#include "voxwarp/renderer.hpp"
#include "voxwarp/sparw.hpp"

namespace voxwarp {

enum class RunMode { PixelCentric, MemoryCentric, Sparw, TempWarp, Downsample2 };

const char* to_string(RunMode mode);
RunMode parse_run_mode(const std::string& name);

struct ExperimentConfig {
    std::string scene_path;                    // scene spec file; overrides builtin_scene
    std::string builtin_scene = "toy";         // slab | sphere | toy | occluder | empty
    std::string trajectory_path;               // pose file; overrides builtin_trajectory
    std::string builtin_trajectory = "orbit";  // orbit | lateral
    int frames = 17;
    int width = 64;
    int height = 64;
    double orbit_deg_per_frame = 1.5;
    double lateral_step = 0.05;
    RunMode mode = RunMode::Sparw;
    RenderConfig render;
    WarpConfig warp;
    GuConfig gu;
    EnergyModel energy;
    int64_t buffer_bytes = 32768;
    int64_t burst_bytes = 64;
    int64_t cache_capacity_bytes = 2 * 1024 * 1024;
    int64_t cache_line_bytes = 64;
    int conflict_banks = 16;
    int conflict_lanes = 16;
    bool compute_psnr = true;
    uint64_t seed = 1;
    std::string out_dir = "report";

    void validate() const;
};

// key: value lines, '#' comments, unknown keys rejected. Keys mirror the
// config fields; see the README for the full list.
ExperimentConfig parse_experiment_config(const std::string& text);
ExperimentConfig load_experiment_config(const std::string& path);

// Pinhole through the image center, f = width (about 53 degrees horizontal).
CameraIntrinsics default_intrinsics(int width, int height);

SceneSpec builtin_scene_spec(const std::string& name, uint64_t seed);

// orbit: circles the point (0,0,3) at its distance from the origin, one
// step per frame. lateral: slides along +x by lateral_step per frame.
std::vector<Pose> builtin_trajectory(const std::string& name, int frames,
                                     double orbit_deg_per_frame, double lateral_step);

// Percentage of target pixels with finite tgt_depth that receive at least
// one splat from ref whose depth agrees with tgt_depth within 5% relative.
// The depth gate keeps back-surface splats (in-frustum but occluded in the
// target view) from counting as coverage.
double overlap_percentage(const Frame& ref, const Pose& tgt_pose, const CameraIntrinsics& intr,
                          const Image1f& tgt_depth);

// Half-resolution baseline: renders with f, cx, cy and the image size
// halved, then upsamples color bilinearly (depth and opacity by nearest
// neighbor). Requires even width and height. NeRF work is a quarter of the
// full-resolution pixel count.
Frame downsample2_render(const FeatureGrid& grid, const MlpWeights& mlp, const Pose& pose,
                         const CameraIntrinsics& intr, const RenderConfig& cfg,
                         RenderStats* stats = nullptr);

struct ExperimentResult {
    std::string out_dir;
    int frames_written = 0;
    // Numeric rows of summary.csv, in file order.
    std::vector<std::pair<std::string, double>> summary;

    double summary_value(const std::string& key) const;  // throws if absent
};

// Renders the trajectory in the configured mode and writes, under
// cfg.out_dir: frames/frame_NNN.{ppm,pfm}, ledger.csv, trace_metrics.csv,
// cycles_energy.csv, and summary.csv. The memory-system analysis (traces,
// cache, bank, GU, energy) always runs on the first trajectory pose.
// Deterministic: identical config and seed give byte-identical CSVs.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

}  // namespace voxwarp
