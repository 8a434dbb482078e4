#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "voxwarp/harness.hpp"
#include "voxwarp/sparw.hpp"

using namespace voxwarp;

namespace {

SyntheticScene toy_scene() {
    return build_synthetic_scene(builtin_scene_spec("toy", 1));
}

SyntheticScene occluder_scene() {
    return build_synthetic_scene(builtin_scene_spec("occluder", 1));
}

RenderConfig fast_render(const SyntheticScene& scene, int samples = 48) {
    RenderConfig cfg;
    cfg.n_samples = samples;
    cfg.background = scene.spec.background;
    cfg.workers = 2;
    return cfg;
}

}  // namespace

TEST_CASE("splat resolution is independent of input order") {
    std::vector<SplatPoint> splats;
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int i = 0; i < 500; ++i) {
        SplatPoint s;
        s.x = static_cast<int>(unif(gen) * 16);
        s.y = static_cast<int>(unif(gen) * 16);
        s.depth = 1.0 + unif(gen);
        s.color = {static_cast<float>(unif(gen)), 0.5f, 0.5f};
        s.opacity = 1.0f;
        s.angle = static_cast<float>(unif(gen));
        s.source_linear = i;
        splats.push_back(s);
    }
    const WarpResult a = splat_points(splats, 16, 16);
    std::shuffle(splats.begin(), splats.end(), gen);
    const WarpResult b = splat_points(splats, 16, 16);
    CHECK(a.color.pixels == b.color.pixels);
    CHECK(a.kind == b.kind);
    CHECK(a.splat_count == b.splat_count);
    for (size_t i = 0; i < a.depth.pixels.size(); ++i) {
        CHECK(a.depth.pixels[i] == b.depth.pixels[i]);
        CHECK(a.opacity.pixels[i] == b.opacity.pixels[i]);
    }
}

TEST_CASE("nearest depth wins and ties break on source index") {
    SplatPoint near;
    near.x = 3;
    near.y = 3;
    near.depth = 1.0;
    near.color = {1, 0, 0};
    near.source_linear = 9;
    SplatPoint far = near;
    far.depth = 2.0;
    far.color = {0, 1, 0};
    far.source_linear = 1;
    WarpResult w = splat_points({far, near}, 8, 8);
    CHECK(w.color.at(3, 3).x == 1.0f);
    SplatPoint tie = near;
    tie.color = {0, 0, 1};
    tie.source_linear = 4;
    w = splat_points({near, tie}, 8, 8);
    CHECK(w.color.at(3, 3).z == 1.0f);
}

TEST_CASE("warping a frame onto its own pose reproduces it bit-exactly") {
    const SyntheticScene scene = toy_scene();
    const CameraIntrinsics intr = default_intrinsics(48, 48);
    const RenderConfig rcfg = fast_render(scene);
    const Frame ref = render_frame(scene.grid, scene.mlp, Pose{}, intr, rcfg);
    const WarpResult w = warp(ref, ref.pose, intr);
    CHECK(w.dropped == 0);
    int finite = 0;
    for (int y = 0; y < 48; ++y) {
        for (int x = 0; x < 48; ++x) {
            if (std::isinf(ref.depth.at(x, y))) continue;
            ++finite;
            REQUIRE(w.valid(x, y));
            CHECK(w.color.at(x, y) == ref.color.at(x, y));
            CHECK(w.depth.at(x, y) == ref.depth.at(x, y));
            // acos near 1 bottoms out around 1.5e-8, not exactly 0.
            CHECK(w.angle[static_cast<size_t>(y) * 48 + x] < 1e-6f);
        }
    }
    CHECK(finite > 100);
    CHECK(w.splat_count == finite);
}

TEST_CASE("hole classification splits by projected geometry and conserves pixels") {
    const SyntheticScene scene = occluder_scene();
    const CameraIntrinsics intr = default_intrinsics(48, 48);
    const RenderConfig rcfg = fast_render(scene);
    const std::vector<Pose> traj = builtin_trajectory("orbit", 2, 6.0, 0.05);
    const Frame ref = render_frame(scene.grid, scene.mlp, traj[0], intr, rcfg);
    WarpResult w = warp(ref, traj[1], intr);
    const Image1f proj = scene.analytic_depth(traj[1], intr);
    const HoleCounts counts = classify_holes(w, proj);
    CHECK(counts.warped + counts.disoccluded + counts.voids == 48 * 48);
    CHECK(counts.warped > 0);
    CHECK(counts.voids > 0);
    for (int y = 0; y < 48; ++y)
        for (int x = 0; x < 48; ++x) {
            const PixelKind k = w.kind[static_cast<size_t>(y) * 48 + x];
            if (k == PixelKind::Disoccluded) CHECK(!std::isinf(proj.at(x, y)));
            if (k == PixelKind::Void) CHECK(std::isinf(proj.at(x, y)));
        }
}

TEST_CASE("phi demotion is monotone in the threshold") {
    const SyntheticScene scene = toy_scene();
    const CameraIntrinsics intr = default_intrinsics(48, 48);
    const RenderConfig rcfg = fast_render(scene);
    const std::vector<Pose> traj = builtin_trajectory("orbit", 2, 3.0, 0.05);
    const Frame ref = render_frame(scene.grid, scene.mlp, traj[0], intr, rcfg);

    auto demoted_at = [&](double phi) {
        WarpResult w = warp(ref, traj[1], intr);
        classify_holes(w, scene.analytic_depth(traj[1], intr));
        return apply_phi(w, phi);
    };
    const int64_t none = demoted_at(std::numeric_limits<double>::infinity());
    const int64_t strict = demoted_at(1e-6);
    const int64_t all = demoted_at(0.0);
    WarpResult w = warp(ref, traj[1], intr);
    const HoleCounts counts = classify_holes(w, scene.analytic_depth(traj[1], intr));
    CHECK(none == 0);
    CHECK(strict <= all);
    CHECK(all == counts.warped);
    CHECK(strict > 0);
}

TEST_CASE("a zero phi threshold collapses the target to the full render") {
    const SyntheticScene scene = toy_scene();
    const CameraIntrinsics intr = default_intrinsics(32, 32);
    const RenderConfig rcfg = fast_render(scene, 32);
    const std::vector<Pose> traj = builtin_trajectory("orbit", 2, 1.5, 0.05);
    const Frame ref = render_frame(scene.grid, scene.mlp, traj[0], intr, rcfg);
    WarpConfig wcfg;
    wcfg.phi = 0.0;
    const TargetFrame tgt = render_target(ref, traj[1], intr, scene, wcfg, rcfg);
    const Frame full = render_frame(scene.grid, scene.mlp, traj[1], intr, rcfg);
    CHECK(tgt.warped_px == 0);
    CHECK(tgt.frame.color.pixels == full.color.pixels);
    for (size_t i = 0; i < full.depth.pixels.size(); ++i) {
        const bool both_inf =
            std::isinf(tgt.frame.depth.pixels[i]) && std::isinf(full.depth.pixels[i]);
        CHECK((both_inf || tgt.frame.depth.pixels[i] == full.depth.pixels[i]));
    }
}

TEST_CASE("reference pose extrapolation advances translation linearly") {
    Pose t1;
    t1.translation = {0, 0, 0};
    Pose t2;
    t2.translation = {0.1, 0, 0};
    WarpConfig cfg;
    cfg.window = 16;
    const Pose r = extrapolate_reference_pose(t1, t2, cfg);
    CHECK(r.translation.x == doctest::Approx(0.1 + 0.1 * 8).epsilon(1e-12));
    CHECK(r.translation.y == 0.0);
}

TEST_CASE("reference pose extrapolation scales the relative rotation") {
    const double step = 2.0 * std::acos(0.0) / 90.0;  // 2 degrees
    Pose t1;
    Pose t2;
    t2.rotation = axis_angle_rotation({0, 1, 0}, step);
    WarpConfig cfg;
    cfg.window = 16;
    const Pose r = extrapolate_reference_pose(t1, t2, cfg);
    const Mat3 want = axis_angle_rotation({0, 1, 0}, step * 9.0);
    for (int k = 0; k < 9; ++k) CHECK(r.rotation.m[k] == doctest::Approx(want.m[k]).epsilon(1e-9));
}

TEST_CASE("run_sequence schedules one reference per window plus the bootstrap") {
    const SyntheticScene scene = toy_scene();
    const CameraIntrinsics intr = default_intrinsics(32, 32);
    SequenceConfig cfg;
    cfg.render = fast_render(scene, 32);
    cfg.warp.window = 16;
    cfg.compute_psnr = false;
    const std::vector<Pose> traj = builtin_trajectory("orbit", 33, 1.0, 0.05);
    const SequenceResult res = run_sequence(traj, scene, intr, cfg);
    CHECK(res.frames.size() == 33);
    CHECK(res.reference_renders == 3);
    int targets = 0;
    for (const LedgerRow& row : res.ledger) {
        if (row.kind != "target") continue;
        ++targets;
        CHECK(row.warped_px + row.sparse_px + row.void_px == 32 * 32);
    }
    CHECK(targets == 32);
}

TEST_CASE("temp-warp mode reuses outputs instead of rendering references") {
    const SyntheticScene scene = toy_scene();
    const CameraIntrinsics intr = default_intrinsics(32, 32);
    SequenceConfig cfg;
    cfg.render = fast_render(scene, 32);
    cfg.warp.window = 4;
    cfg.mode = SequenceMode::TempWarp;
    cfg.compute_psnr = false;
    const std::vector<Pose> traj = builtin_trajectory("orbit", 9, 1.5, 0.05);
    const SequenceResult res = run_sequence(traj, scene, intr, cfg);
    CHECK(res.frames.size() == 9);
    CHECK(res.reference_renders == 1);
    CHECK(res.sparse_pixels > 0);
}

TEST_CASE("sequences shorter than two poses are rejected") {
    const SyntheticScene scene = toy_scene();
    SequenceConfig cfg;
    cfg.render = fast_render(scene, 16);
    CHECK_THROWS_AS(
        run_sequence({Pose{}}, scene, default_intrinsics(32, 32), cfg),
        std::invalid_argument);
}

TEST_CASE("ledger csv has one row per entry with stable formatting") {
    std::vector<LedgerRow> rows;
    rows.push_back({0, "reference", 0, 1024, 0, std::numeric_limits<double>::infinity()});
    rows.push_back({1, "target", 900, 100, 24, 41.25});
    const std::string csv = ledger_csv_string(rows);
    CHECK(csv.find("frame,kind,warped_px,sparse_px,void_px,psnr_vs_full\n") == 0);
    CHECK(csv.find("0,reference,0,1024,0,inf\n") != std::string::npos);
    CHECK(csv.find("1,target,900,100,24,41.250000\n") != std::string::npos);
}

TEST_CASE("trajectories round trip through disk") {
    const std::vector<Pose> traj = builtin_trajectory("orbit", 5, 2.0, 0.05);
    const std::string path = "/tmp/voxwarp_traj_test.txt";
    save_trajectory(path, traj);
    const std::vector<Pose> back = load_trajectory(path);
    REQUIRE(back.size() == traj.size());
    for (size_t i = 0; i < traj.size(); ++i) {
        for (int k = 0; k < 9; ++k)
            CHECK(back[i].rotation.m[k] == doctest::Approx(traj[i].rotation.m[k]).epsilon(1e-15));
        CHECK(back[i].translation.x == doctest::Approx(traj[i].translation.x).epsilon(1e-15));
        CHECK(back[i].translation.z == doctest::Approx(traj[i].translation.z).epsilon(1e-15));
    }
    std::remove(path.c_str());
}
