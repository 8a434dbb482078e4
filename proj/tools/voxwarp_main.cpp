#include <algorithm>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "voxwarp/harness.hpp"
#include "voxwarp/image.hpp"
#include "voxwarp/trace.hpp"

namespace {

using namespace voxwarp;

// One bound field set per subcommand. Precedence: built-in defaults, then the
// config file, then explicit command-line flags.
struct CliOptions {
    CLI::App* sub = nullptr;
    std::string config_path;
    ExperimentConfig flags;
    std::string mode_name;
    std::vector<double> background;

    void attach(CLI::App* s) {
        sub = s;
        s->add_option("--config", config_path, "experiment config file (key: value lines)");
        s->add_option("--scene", flags.scene_path, "scene spec file");
        s->add_option("--builtin-scene", flags.builtin_scene,
                      "slab | sphere | toy | occluder | empty");
        s->add_option("--trajectory", flags.trajectory_path, "pose file (12 numbers per row)");
        s->add_option("--builtin-trajectory", flags.builtin_trajectory, "orbit | lateral");
        s->add_option("--frames", flags.frames, "trajectory length");
        s->add_option("--width", flags.width, "frame width");
        s->add_option("--height", flags.height, "frame height");
        s->add_option("--samples", flags.render.n_samples, "ray samples");
        s->add_option("--near", flags.render.near, "near plane");
        s->add_option("--far", flags.render.far, "far plane");
        s->add_option("--workers", flags.render.workers, "render worker threads");
        s->add_option("--background", background, "background color r g b")->expected(3);
        s->add_option("--window", flags.warp.window, "targets per reference");
        s->add_option("--phi", flags.warp.phi, "ray-angle re-render threshold (radians)");
        s->add_option("--mode", mode_name,
                      "pixel-centric | memory-centric | sparw | temp-warp | downsample-2");
        s->add_option("--buffer-bytes", flags.buffer_bytes, "on-chip MVoxel buffer size");
        s->add_option("--burst-bytes", flags.burst_bytes, "DRAM burst window");
        s->add_option("--cache-capacity", flags.cache_capacity_bytes, "cache capacity bytes");
        s->add_option("--cache-line", flags.cache_line_bytes, "cache line bytes");
        s->add_option("--conflict-banks", flags.conflict_banks, "bank-conflict experiment banks");
        s->add_option("--conflict-lanes", flags.conflict_lanes, "bank-conflict experiment lanes");
        s->add_option("--orbit-deg", flags.orbit_deg_per_frame, "orbit degrees per frame");
        s->add_option("--lateral-step", flags.lateral_step, "lateral slide per frame");
        s->add_flag("--no-psnr", "skip full renders used only for PSNR");
        s->add_option("--seed", flags.seed, "RNG seed");
        s->add_option("--out", flags.out_dir, "output directory");
    }

    ExperimentConfig resolve() const {
        ExperimentConfig cfg;
        if (sub->count("--config") > 0) cfg = load_experiment_config(config_path);
        auto on = [&](const char* name) { return sub->count(name) > 0; };
        if (on("--scene")) cfg.scene_path = flags.scene_path;
        if (on("--builtin-scene")) cfg.builtin_scene = flags.builtin_scene;
        if (on("--trajectory")) cfg.trajectory_path = flags.trajectory_path;
        if (on("--builtin-trajectory")) cfg.builtin_trajectory = flags.builtin_trajectory;
        if (on("--frames")) cfg.frames = flags.frames;
        if (on("--width")) cfg.width = flags.width;
        if (on("--height")) cfg.height = flags.height;
        if (on("--samples")) cfg.render.n_samples = flags.render.n_samples;
        if (on("--near")) cfg.render.near = flags.render.near;
        if (on("--far")) cfg.render.far = flags.render.far;
        if (on("--workers")) cfg.render.workers = flags.render.workers;
        if (on("--background"))
            cfg.render.background = {static_cast<float>(background[0]),
                                     static_cast<float>(background[1]),
                                     static_cast<float>(background[2])};
        if (on("--window")) cfg.warp.window = flags.warp.window;
        if (on("--phi")) cfg.warp.phi = flags.warp.phi;
        if (on("--mode")) cfg.mode = parse_run_mode(mode_name);
        if (on("--buffer-bytes")) cfg.buffer_bytes = flags.buffer_bytes;
        if (on("--burst-bytes")) cfg.burst_bytes = flags.burst_bytes;
        if (on("--cache-capacity")) cfg.cache_capacity_bytes = flags.cache_capacity_bytes;
        if (on("--cache-line")) cfg.cache_line_bytes = flags.cache_line_bytes;
        if (on("--conflict-banks")) cfg.conflict_banks = flags.conflict_banks;
        if (on("--conflict-lanes")) cfg.conflict_lanes = flags.conflict_lanes;
        if (on("--orbit-deg")) cfg.orbit_deg_per_frame = flags.orbit_deg_per_frame;
        if (on("--lateral-step")) cfg.lateral_step = flags.lateral_step;
        if (on("--no-psnr")) cfg.compute_psnr = false;
        if (on("--seed")) cfg.seed = flags.seed;
        if (on("--out")) cfg.out_dir = flags.out_dir;
        return cfg;
    }
};

SyntheticScene scene_from(const ExperimentConfig& cfg) {
    const SceneSpec spec = cfg.scene_path.empty()
                               ? builtin_scene_spec(cfg.builtin_scene, cfg.seed)
                               : load_scene_spec(cfg.scene_path);
    return build_synthetic_scene(spec);
}

std::vector<Pose> trajectory_from(const ExperimentConfig& cfg) {
    return cfg.trajectory_path.empty()
               ? builtin_trajectory(cfg.builtin_trajectory, cfg.frames, cfg.orbit_deg_per_frame,
                                    cfg.lateral_step)
               : load_trajectory(cfg.trajectory_path);
}

int run_render(const CliOptions& opt, int frame_index) {
    ExperimentConfig cfg = opt.resolve();
    if (cfg.mode == RunMode::Sparw || cfg.mode == RunMode::TempWarp) cfg.mode = RunMode::PixelCentric;
    cfg.frames = std::max(cfg.frames, frame_index + 1);
    cfg.validate();
    const SyntheticScene scene = scene_from(cfg);
    RenderConfig rcfg = cfg.render;
    rcfg.background = scene.spec.background;
    const std::vector<Pose> traj = trajectory_from(cfg);
    if (frame_index < 0 || frame_index >= static_cast<int>(traj.size()))
        throw std::invalid_argument("frame index out of range");
    const CameraIntrinsics intr = default_intrinsics(cfg.width, cfg.height);

    Frame frame;
    switch (cfg.mode) {
        case RunMode::MemoryCentric: {
            const MVoxelGrid mgrid = partition_mvoxels(scene.grid, cfg.buffer_bytes, true);
            frame = render_memory_centric(scene.grid, scene.mlp, mgrid, traj[frame_index], intr,
                                          rcfg).frame;
            break;
        }
        case RunMode::Downsample2:
            frame = downsample2_render(scene.grid, scene.mlp, traj[frame_index], intr, rcfg);
            break;
        default:
            frame = render_frame(scene.grid, scene.mlp, traj[frame_index], intr, rcfg);
            break;
    }
    std::filesystem::create_directories(cfg.out_dir);
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%03d", frame_index);
    const std::string base = cfg.out_dir + "/" + name;
    write_ppm(base + ".ppm", frame.color);
    write_pfm(base + ".pfm", frame.depth);
    std::printf("wrote %s.ppm and %s.pfm\n", base.c_str(), base.c_str());
    return 0;
}

int run_report(const CliOptions& opt, RunMode* forced_default) {
    ExperimentConfig cfg = opt.resolve();
    if (forced_default && opt.sub->count("--mode") == 0) cfg.mode = *forced_default;
    const ExperimentResult res = run_experiment(cfg);
    std::printf("report written to %s (%d frames)\n", res.out_dir.c_str(), res.frames_written);
    for (const auto& [key, value] : res.summary) std::printf("%s %.17g\n", key.c_str(), value);
    return 0;
}

int run_memsim(const CliOptions& opt, bool write_traces) {
    ExperimentConfig cfg = opt.resolve();
    if (opt.sub->count("--frames") == 0) cfg.frames = 1;
    if (opt.sub->count("--mode") == 0) cfg.mode = RunMode::MemoryCentric;
    const ExperimentResult res = run_experiment(cfg);
    if (write_traces) {
        const SyntheticScene scene = scene_from(cfg);
        RenderConfig rcfg = cfg.render;
        rcfg.background = scene.spec.background;
        const std::vector<Pose> traj = trajectory_from(cfg);
        const CameraIntrinsics intr = default_intrinsics(cfg.width, cfg.height);
        const MVoxelGrid mgrid = partition_mvoxels(scene.grid, cfg.buffer_bytes, true);
        std::vector<Ray> rays;
        std::vector<double> dir_cam_z;
        frame_rays(traj[0], intr, rays, dir_cam_z);
        AccessTrace pixel = trace_pixel_centric(scene.grid, scene.mlp, mgrid, rays, rcfg);
        classify_trace(pixel, cfg.burst_bytes);
        MemoryCentricResult mem =
            render_memory_centric_rays(scene.grid, scene.mlp, mgrid, rays, dir_cam_z, rcfg);
        classify_event_streams(mem.trace, cfg.burst_bytes);
        write_trace_csv(pixel, cfg.out_dir + "/pixel_trace.csv");
        write_trace_csv(mem.trace, cfg.out_dir + "/memory_trace.csv");
        std::printf("wrote %s/pixel_trace.csv and %s/memory_trace.csv\n", cfg.out_dir.c_str(),
                    cfg.out_dir.c_str());
    }
    for (const auto& [key, value] : res.summary) std::printf("%s %.17g\n", key.c_str(), value);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"voxel-grid NeRF renderer with sparse radiance warping and a "
                 "trace-driven memory-system simulator"};
    app.require_subcommand(1);

    CliOptions render_opt, warp_opt, memsim_opt, report_opt;
    int frame_index = 0;
    bool write_traces = false;

    CLI::App* render = app.add_subcommand("render", "render one frame to PPM/PFM");
    render_opt.attach(render);
    render->add_option("--frame-index", frame_index, "trajectory pose to render");

    CLI::App* warpseq = app.add_subcommand("warp-seq", "render a warped trajectory with ledger");
    warp_opt.attach(warpseq);

    CLI::App* memsim = app.add_subcommand("memsim", "memory traces and simulators on one frame");
    memsim_opt.attach(memsim);
    memsim->add_flag("--write-traces", write_traces, "also dump full access traces as CSV");

    CLI::App* report = app.add_subcommand("report", "full experiment report");
    report_opt.attach(report);

    CLI11_PARSE(app, argc, argv);

    try {
        if (render->parsed()) return run_render(render_opt, frame_index);
        if (warpseq->parsed()) {
            RunMode def = RunMode::Sparw;
            return run_report(warp_opt, &def);
        }
        if (memsim->parsed()) return run_memsim(memsim_opt, write_traces);
        if (report->parsed()) return run_report(report_opt, nullptr);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
