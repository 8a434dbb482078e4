#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "voxwarp/harness.hpp"

using namespace voxwarp;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return std::string(std::istreambuf_iterator<char>(in), {});
}

fs::path fresh_dir(const std::string& leaf) {
    const fs::path p = fs::temp_directory_path() / leaf;
    fs::remove_all(p);
    return p;
}

}  // namespace

TEST_CASE("run mode names round trip") {
    for (const char* name :
         {"pixel-centric", "memory-centric", "sparw", "temp-warp", "downsample-2"})
        CHECK(std::string(to_string(parse_run_mode(name))) == name);
    CHECK_THROWS_AS(parse_run_mode("raster"), std::invalid_argument);
}

TEST_CASE("empty config text gives the documented defaults") {
    const ExperimentConfig cfg = parse_experiment_config("");
    CHECK(cfg.builtin_scene == "toy");
    CHECK(cfg.builtin_trajectory == "orbit");
    CHECK(cfg.frames == 17);
    CHECK(cfg.width == 64);
    CHECK(cfg.height == 64);
    CHECK(cfg.mode == RunMode::Sparw);
    CHECK(cfg.render.n_samples == 128);
    CHECK(cfg.warp.window == 16);
    CHECK(std::isinf(cfg.warp.phi));
    CHECK(cfg.buffer_bytes == 32768);
    CHECK(cfg.compute_psnr);
    CHECK(cfg.out_dir == "report");
    cfg.validate();
}

TEST_CASE("config text sets every field it names") {
    const std::string text =
        "# experiment\n"
        "builtin_scene: slab\n"
        "builtin_trajectory: lateral\n"
        "frames: 5\n"
        "width: 48\n"
        "height: 32\n"
        "orbit_deg_per_frame: 2\n"
        "lateral_step: 0.125\n"
        "mode: memory-centric\n"
        "samples: 96\n"
        "near: 0.5\n"
        "far: 5.5\n"
        "workers: 3\n"
        "background: 0.1 0.2 0.3\n"
        "window: 8\n"
        "phi: 0.04\n"
        "frame_interval: 0.02\n"
        "buffer_bytes: 16384\n"
        "burst_bytes: 128\n"
        "cache_capacity_bytes: 65536\n"
        "cache_line_bytes: 32\n"
        "conflict_banks: 8\n"
        "conflict_lanes: 8\n"
        "gu_banks: 16\n"
        "gu_ports: 4\n"
        "mac_rows: 12\n"
        "mac_cols: 12\n"
        "vft_bytes: 16384\n"
        "gu_bank_bytes: 1024\n"
        "bus_bytes_per_cycle: 32\n"
        "e_sram: 2\n"
        "e_dram_stream: 20\n"
        "e_dram_random: 60\n"
        "compute_psnr: 0\n"
        "seed: 9\n"
        "out_dir: /tmp/voxwarp_cfg\n";
    const ExperimentConfig cfg = parse_experiment_config(text);
    CHECK(cfg.builtin_scene == "slab");
    CHECK(cfg.builtin_trajectory == "lateral");
    CHECK(cfg.frames == 5);
    CHECK(cfg.width == 48);
    CHECK(cfg.height == 32);
    CHECK(cfg.orbit_deg_per_frame == 2.0);
    CHECK(cfg.lateral_step == 0.125);
    CHECK(cfg.mode == RunMode::MemoryCentric);
    CHECK(cfg.render.n_samples == 96);
    CHECK(cfg.render.near == 0.5);
    CHECK(cfg.render.far == 5.5);
    CHECK(cfg.render.workers == 3);
    CHECK(cfg.render.background.x == 0.1f);
    CHECK(cfg.render.background.y == 0.2f);
    CHECK(cfg.render.background.z == 0.3f);
    CHECK(cfg.warp.window == 8);
    CHECK(cfg.warp.phi == 0.04);
    CHECK(cfg.warp.frame_interval == 0.02);
    CHECK(cfg.buffer_bytes == 16384);
    CHECK(cfg.burst_bytes == 128);
    CHECK(cfg.cache_capacity_bytes == 65536);
    CHECK(cfg.cache_line_bytes == 32);
    CHECK(cfg.conflict_banks == 8);
    CHECK(cfg.conflict_lanes == 8);
    CHECK(cfg.gu.banks == 16);
    CHECK(cfg.gu.ports == 4);
    CHECK(cfg.gu.mac_rows == 12);
    CHECK(cfg.gu.mac_cols == 12);
    CHECK(cfg.gu.vft_bytes == 16384);
    CHECK(cfg.gu.bank_bytes == 1024);
    CHECK(cfg.gu.bus_bytes_per_cycle == 32);
    CHECK(cfg.energy.e_sram == 2.0);
    CHECK(cfg.energy.e_dram_stream == 20.0);
    CHECK(cfg.energy.e_dram_random == 60.0);
    CHECK_FALSE(cfg.compute_psnr);
    CHECK(cfg.seed == 9);
    CHECK(cfg.out_dir == "/tmp/voxwarp_cfg");
    cfg.validate();
}

TEST_CASE("config parser reports the offending line") {
    CHECK_THROWS_AS(parse_experiment_config("bogus_key: 1\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_experiment_config("frames\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_experiment_config("frames: many\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_experiment_config("background: 0.5 0.5\n"), std::invalid_argument);
    const ExperimentConfig cfg = parse_experiment_config("phi: inf\n");
    CHECK(std::isinf(cfg.warp.phi));
}

TEST_CASE("config validation rejects incoherent setups") {
    ExperimentConfig cfg;
    cfg.width = 8;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = ExperimentConfig{};
    cfg.mode = RunMode::Downsample2;
    cfg.width = 33;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = ExperimentConfig{};
    cfg.mode = RunMode::Sparw;
    cfg.frames = 1;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = ExperimentConfig{};
    cfg.conflict_lanes = 32;
    cfg.conflict_banks = 16;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = ExperimentConfig{};
    cfg.render.near = 2.0;
    cfg.render.far = 1.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = ExperimentConfig{};
    cfg.out_dir.clear();
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("default intrinsics center the image at one-width focal length") {
    const CameraIntrinsics intr = default_intrinsics(128, 96);
    CHECK(intr.f == 128.0);
    CHECK(intr.cx == 64.0);
    CHECK(intr.cy == 48.0);
    CHECK(intr.width == 128);
    CHECK(intr.height == 96);
}

TEST_CASE("builtin orbit starts at the identity and keeps its radius") {
    const auto poses = builtin_trajectory("orbit", 9, 3.0, 0.05);
    REQUIRE(poses.size() == 9);
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c)
            CHECK(poses[0].rotation(r, c) == (r == c ? 1.0 : 0.0));
    CHECK(poses[0].translation.x == 0.0);
    CHECK(poses[0].translation.y == 0.0);
    CHECK(poses[0].translation.z == 0.0);
    for (const Pose& p : poses) {
        const Vec3 d{p.translation.x - 0.0, p.translation.y - 0.0, p.translation.z - 3.0};
        CHECK(norm(d) == doctest::Approx(3.0).epsilon(1e-12));
    }
}

TEST_CASE("builtin lateral slides along x with identity rotation") {
    const auto poses = builtin_trajectory("lateral", 4, 1.0, 0.25);
    REQUIRE(poses.size() == 4);
    for (int k = 0; k < 4; ++k) {
        CHECK(poses[k].translation.x == doctest::Approx(0.25 * k));
        CHECK(poses[k].translation.y == 0.0);
        CHECK(poses[k].translation.z == 0.0);
        CHECK(poses[k].rotation(0, 0) == 1.0);
        CHECK(poses[k].rotation(1, 1) == 1.0);
        CHECK(poses[k].rotation(2, 2) == 1.0);
    }
    CHECK_THROWS_AS(builtin_trajectory("spiral", 4, 1.0, 0.25), std::invalid_argument);
}

TEST_CASE("builtin scene specs build and keep their advertised content") {
    for (const char* name : {"slab", "sphere", "toy", "occluder", "empty"}) {
        const SceneSpec spec = builtin_scene_spec(name, 1);
        const SyntheticScene scene = build_synthetic_scene(spec);
        CHECK(scene.grid.dims[0] == spec.dims[0]);
        CHECK(scene.grid.channels == spec.channels);
    }
    CHECK(builtin_scene_spec("empty", 1).primitives.empty());
    CHECK(builtin_scene_spec("toy", 1).textured_albedo);
    CHECK_FALSE(builtin_scene_spec("sphere", 1).textured_albedo);
    CHECK(builtin_scene_spec("occluder", 1).primitives.size() == 2);
    CHECK_THROWS_AS(builtin_scene_spec("alien", 1), std::invalid_argument);
}

TEST_CASE("overlap against the same pose is exactly total") {
    SceneSpec spec = builtin_scene_spec("sphere", 1);
    spec.dims = {32, 32, 32};
    const SyntheticScene scene = build_synthetic_scene(spec);
    const CameraIntrinsics intr = default_intrinsics(32, 32);
    const Pose pose = builtin_trajectory("orbit", 1, 1.0, 0.05)[0];
    RenderConfig rcfg;
    rcfg.n_samples = 64;
    rcfg.near = 1.0;
    rcfg.far = 5.0;
    rcfg.background = scene.spec.background;
    const Frame ref = render_frame(scene.grid, scene.mlp, pose, intr, rcfg);
    // Identity case: every finite-depth pixel splats onto itself with its own
    // depth, so coverage of the frame's own depth map is total.
    CHECK(overlap_percentage(ref, pose, intr, ref.depth) == 100.0);
}

TEST_CASE("half-resolution upsampling is exact on a constant empty scene") {
    SceneSpec spec = builtin_scene_spec("empty", 1);
    spec.dims = {16, 16, 16};
    const SyntheticScene scene = build_synthetic_scene(spec);
    const CameraIntrinsics intr = default_intrinsics(32, 32);
    const Pose pose;
    RenderConfig rcfg;
    rcfg.n_samples = 32;
    rcfg.near = 1.0;
    rcfg.far = 5.0;
    rcfg.background = scene.spec.background;
    RenderStats stats;
    const Frame half = downsample2_render(scene.grid, scene.mlp, pose, intr, rcfg, &stats);
    const Frame full = render_frame(scene.grid, scene.mlp, pose, intr, rcfg);
    CHECK(stats.pixels_rendered == 32 * 32 / 4);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) {
            CHECK(half.color.at(x, y).x == full.color.at(x, y).x);
            CHECK(half.color.at(x, y).y == full.color.at(x, y).y);
            CHECK(half.color.at(x, y).z == full.color.at(x, y).z);
            CHECK(std::isinf(half.depth.at(x, y)));
        }
    const CameraIntrinsics odd = default_intrinsics(31, 32);
    CHECK_THROWS_AS(downsample2_render(scene.grid, scene.mlp, pose, odd, rcfg, nullptr),
                    std::invalid_argument);
}

TEST_CASE("experiments write the full report and are deterministic") {
    ExperimentConfig cfg;
    cfg.builtin_scene = "sphere";
    cfg.builtin_trajectory = "orbit";
    cfg.frames = 2;
    cfg.width = 32;
    cfg.height = 32;
    cfg.orbit_deg_per_frame = 1.0;
    cfg.mode = RunMode::Sparw;
    cfg.warp.window = 4;
    cfg.render.n_samples = 32;
    cfg.render.near = 1.0;
    cfg.render.far = 5.0;
    cfg.out_dir = fresh_dir("voxwarp_harness_a").string();
    const ExperimentResult res = run_experiment(cfg);
    CHECK(res.frames_written == 2);
    const fs::path out(res.out_dir);
    for (const char* leaf : {"ledger.csv", "trace_metrics.csv", "cycles_energy.csv",
                             "summary.csv"})
        CHECK(fs::exists(out / leaf));
    CHECK(fs::exists(out / "frames" / "frame_000.ppm"));
    CHECK(fs::exists(out / "frames" / "frame_001.pfm"));
    for (const char* key :
         {"frames", "width", "height", "mean_psnr_db", "overlap_percent", "nerf_pixel_fraction",
          "mem_feature_redundancy_ratio", "pixel_streaming_fraction", "lru_miss_rate",
          "belady_miss_rate", "feature_major_conflict_rate", "channel_major_conflict_rate",
          "gu_total_cycles", "mac_cycles", "mem_total_energy", "pixel_total_energy",
          "total_savings", "remote_latency_s"})
        CHECK(std::isfinite(res.summary_value(key)));
    CHECK(res.summary_value("frames") == 2.0);
    CHECK(res.summary_value("nerf_pixel_fraction") <= 1.0);
    CHECK_THROWS_AS(res.summary_value("not_a_key"), std::out_of_range);

    ExperimentConfig cfg2 = cfg;
    cfg2.out_dir = fresh_dir("voxwarp_harness_b").string();
    run_experiment(cfg2);
    for (const char* leaf : {"summary.csv", "ledger.csv", "trace_metrics.csv",
                             "cycles_energy.csv"})
        CHECK(slurp(out / leaf) == slurp(fs::path(cfg2.out_dir) / leaf));
}

TEST_CASE("every run mode completes on a small scene") {
    for (RunMode mode : {RunMode::PixelCentric, RunMode::MemoryCentric, RunMode::TempWarp,
                         RunMode::Downsample2}) {
        ExperimentConfig cfg;
        cfg.builtin_scene = "empty";
        cfg.builtin_trajectory = "lateral";
        cfg.frames = 2;
        cfg.width = 16;
        cfg.height = 16;
        cfg.mode = mode;
        cfg.warp.window = 2;
        cfg.render.n_samples = 16;
        cfg.render.near = 1.0;
        cfg.render.far = 5.0;
        cfg.compute_psnr = false;
        cfg.out_dir =
            fresh_dir(std::string("voxwarp_harness_mode_") + to_string(mode)).string();
        const ExperimentResult res = run_experiment(cfg);
        CHECK(res.frames_written == 2);
        CHECK(fs::exists(fs::path(res.out_dir) / "summary.csv"));
    }
}
