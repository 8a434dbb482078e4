#include "voxwarp/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "voxwarp/image.hpp"
#include "voxwarp/trace.hpp"

namespace voxwarp {

const char* to_string(RunMode mode) {
    switch (mode) {
        case RunMode::PixelCentric: return "pixel-centric";
        case RunMode::MemoryCentric: return "memory-centric";
        case RunMode::Sparw: return "sparw";
        case RunMode::TempWarp: return "temp-warp";
        case RunMode::Downsample2: return "downsample-2";
    }
    throw std::invalid_argument("unknown run mode");
}

RunMode parse_run_mode(const std::string& name) {
    if (name == "pixel-centric") return RunMode::PixelCentric;
    if (name == "memory-centric") return RunMode::MemoryCentric;
    if (name == "sparw") return RunMode::Sparw;
    if (name == "temp-warp") return RunMode::TempWarp;
    if (name == "downsample-2") return RunMode::Downsample2;
    throw std::invalid_argument("unknown run mode: " + name);
}

void ExperimentConfig::validate() const {
    if (width < 16 || height < 16)
        throw std::invalid_argument("frame dimensions must be at least 16x16");
    if (mode == RunMode::Downsample2 && (width % 2 != 0 || height % 2 != 0))
        throw std::invalid_argument("downsample-2 requires even frame dimensions");
    if (frames < 1) throw std::invalid_argument("frames must be positive");
    if ((mode == RunMode::Sparw || mode == RunMode::TempWarp) && frames < 2)
        throw std::invalid_argument("warp modes need at least 2 frames");
    if (render.n_samples < 1) throw std::invalid_argument("samples must be positive");
    if (!(render.far > render.near) || render.near <= 0.0)
        throw std::invalid_argument("need 0 < near < far");
    if (warp.window < 1) throw std::invalid_argument("window must be positive");
    if (warp.phi < 0.0) throw std::invalid_argument("phi must be non-negative");
    if (buffer_bytes < 1024) throw std::invalid_argument("buffer_bytes too small");
    if (burst_bytes < 1) throw std::invalid_argument("burst_bytes must be positive");
    if (cache_line_bytes < 1 || cache_capacity_bytes < cache_line_bytes)
        throw std::invalid_argument("cache capacity must hold at least one line");
    if (conflict_banks < 1 || conflict_lanes < 1 || conflict_lanes > conflict_banks)
        throw std::invalid_argument("need 1 <= conflict_lanes <= conflict_banks");
    if (out_dir.empty()) throw std::invalid_argument("out_dir must be set");
    gu.validate();
    energy.validate();
}

namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& v, const std::string& key) {
    try {
        size_t used = 0;
        double d = std::stod(v, &used);
        if (trim(v.substr(used)).empty()) return d;
    } catch (const std::exception&) {
    }
    throw std::invalid_argument("bad numeric value for " + key + ": " + v);
}

int64_t parse_int(const std::string& v, const std::string& key) {
    try {
        size_t used = 0;
        int64_t d = std::stoll(v, &used);
        if (trim(v.substr(used)).empty()) return d;
    } catch (const std::exception&) {
    }
    throw std::invalid_argument("bad integer value for " + key + ": " + v);
}

bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw std::invalid_argument("bad boolean value for " + key + ": " + v);
}

Vec3f parse_vec3f(const std::string& v, const std::string& key) {
    std::istringstream is(v);
    double a, b, c;
    if (!(is >> a >> b >> c)) throw std::invalid_argument("need 3 numbers for " + key);
    std::string rest;
    if (is >> rest) throw std::invalid_argument("trailing data for " + key);
    return {static_cast<float>(a), static_cast<float>(b), static_cast<float>(c)};
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& text) {
    ExperimentConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        size_t colon = line.find(':');
        if (colon == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected 'key: value'");
        std::string key = trim(line.substr(0, colon));
        std::string val = trim(line.substr(colon + 1));
        if (val.empty())
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": missing value for " + key);
        if (key == "scene") cfg.scene_path = val;
        else if (key == "builtin_scene") cfg.builtin_scene = val;
        else if (key == "trajectory") cfg.trajectory_path = val;
        else if (key == "builtin_trajectory") cfg.builtin_trajectory = val;
        else if (key == "frames") cfg.frames = static_cast<int>(parse_int(val, key));
        else if (key == "width") cfg.width = static_cast<int>(parse_int(val, key));
        else if (key == "height") cfg.height = static_cast<int>(parse_int(val, key));
        else if (key == "orbit_deg_per_frame") cfg.orbit_deg_per_frame = parse_double(val, key);
        else if (key == "lateral_step") cfg.lateral_step = parse_double(val, key);
        else if (key == "mode") cfg.mode = parse_run_mode(val);
        else if (key == "samples") cfg.render.n_samples = static_cast<int>(parse_int(val, key));
        else if (key == "near") cfg.render.near = parse_double(val, key);
        else if (key == "far") cfg.render.far = parse_double(val, key);
        else if (key == "workers") cfg.render.workers = static_cast<int>(parse_int(val, key));
        else if (key == "window") cfg.warp.window = static_cast<int>(parse_int(val, key));
        else if (key == "phi") cfg.warp.phi = parse_double(val, key);
        else if (key == "frame_interval") cfg.warp.frame_interval = parse_double(val, key);
        else if (key == "buffer_bytes") cfg.buffer_bytes = parse_int(val, key);
        else if (key == "burst_bytes") cfg.burst_bytes = parse_int(val, key);
        else if (key == "cache_capacity_bytes") cfg.cache_capacity_bytes = parse_int(val, key);
        else if (key == "cache_line_bytes") cfg.cache_line_bytes = parse_int(val, key);
        else if (key == "conflict_banks") cfg.conflict_banks = static_cast<int>(parse_int(val, key));
        else if (key == "conflict_lanes") cfg.conflict_lanes = static_cast<int>(parse_int(val, key));
        else if (key == "gu_banks") cfg.gu.banks = static_cast<int>(parse_int(val, key));
        else if (key == "gu_ports") cfg.gu.ports = static_cast<int>(parse_int(val, key));
        else if (key == "mac_rows") cfg.gu.mac_rows = static_cast<int>(parse_int(val, key));
        else if (key == "mac_cols") cfg.gu.mac_cols = static_cast<int>(parse_int(val, key));
        else if (key == "vft_bytes") cfg.gu.vft_bytes = parse_int(val, key);
        else if (key == "gu_bank_bytes") cfg.gu.bank_bytes = parse_int(val, key);
        else if (key == "bus_bytes_per_cycle") cfg.gu.bus_bytes_per_cycle = parse_int(val, key);
        else if (key == "e_sram") cfg.energy.e_sram = parse_double(val, key);
        else if (key == "e_dram_stream") cfg.energy.e_dram_stream = parse_double(val, key);
        else if (key == "e_dram_random") cfg.energy.e_dram_random = parse_double(val, key);
        else if (key == "compute_psnr") cfg.compute_psnr = parse_bool(val, key);
        else if (key == "background") cfg.render.background = parse_vec3f(val, key);
        else if (key == "seed") cfg.seed = static_cast<uint64_t>(parse_int(val, key));
        else if (key == "out_dir") cfg.out_dir = val;
        else
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": unknown key " + key);
    }
    return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open config: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return parse_experiment_config(ss.str());
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(path + ": " + e.what());
    }
}

CameraIntrinsics default_intrinsics(int width, int height) {
    CameraIntrinsics intr;
    intr.f = static_cast<double>(width);
    intr.cx = width / 2.0;
    intr.cy = height / 2.0;
    intr.width = width;
    intr.height = height;
    intr.validate();
    return intr;
}

SceneSpec builtin_scene_spec(const std::string& name, uint64_t seed) {
    SceneSpec spec;
    spec.seed = seed;
    auto sphere = [](Vec3 c, double r, Vec3f albedo) {
        Primitive p;
        p.kind = Primitive::Kind::Sphere;
        p.center = c;
        p.radius = r;
        p.albedo = albedo;
        return p;
    };
    auto box = [](Vec3 lo, Vec3 hi, Vec3f albedo) {
        Primitive p;
        p.kind = Primitive::Kind::Box;
        p.box = {lo, hi};
        p.albedo = albedo;
        return p;
    };
    if (name == "slab") {
        spec.bbox = {{-2.4, -2.4, 2.6}, {2.4, 2.4, 3.8}};
        spec.primitives.push_back(box({-2.2, -2.2, 3.0}, {2.2, 2.2, 3.4}, {0.6f, 0.45f, 0.3f}));
        spec.background = {0.25f, 0.5f, 0.75f};
    } else if (name == "sphere") {
        spec.bbox = {{-1, -1, 2}, {1, 1, 4}};
        spec.primitives.push_back(sphere({0, 0, 3}, 0.8, {0.55f, 0.55f, 0.55f}));
        spec.background = {0.5f, 0.5f, 0.5f};
    } else if (name == "toy") {
        spec.bbox = {{-1, -1, 2}, {1, 1, 4}};
        spec.primitives.push_back(sphere({0, 0, 3}, 0.8, {0.5f, 0.5f, 0.5f}));
        spec.background = {0.5f, 0.5f, 0.5f};
        spec.textured_albedo = true;
    } else if (name == "occluder") {
        spec.bbox = {{-1.2, -1.2, 2}, {1.2, 1.2, 4}};
        spec.primitives.push_back(sphere({0.45, 0, 3.3}, 0.55, {0.7f, 0.4f, 0.3f}));
        spec.primitives.push_back(box({-0.85, -0.45, 2.5}, {-0.05, 0.45, 2.8}, {0.3f, 0.5f, 0.7f}));
        spec.background = {0.2f, 0.3f, 0.4f};
    } else if (name == "empty") {
        spec.bbox = {{-1, -1, 2}, {1, 1, 4}};
        spec.background = {0.5f, 0.5f, 0.5f};
    } else {
        throw std::invalid_argument("unknown builtin scene: " + name);
    }
    return spec;
}

std::vector<Pose> builtin_trajectory(const std::string& name, int frames,
                                     double orbit_deg_per_frame, double lateral_step) {
    if (frames < 1) throw std::invalid_argument("trajectory needs at least 1 frame");
    std::vector<Pose> poses;
    poses.reserve(static_cast<size_t>(frames));
    if (name == "orbit") {
        const Vec3 center{0, 0, 3};
        const double radius = norm(center);
        for (int i = 0; i < frames; ++i) {
            const double theta = i * orbit_deg_per_frame * std::numbers::pi / 180.0;
            Pose p;
            p.rotation = axis_angle_rotation({0, 1, 0}, theta);
            const Vec3 z_cam = p.rotation * Vec3{0, 0, 1};
            p.translation = center - z_cam * radius;
            poses.push_back(p);
        }
    } else if (name == "lateral") {
        for (int i = 0; i < frames; ++i) {
            Pose p;
            p.rotation = Mat3::identity();
            p.translation = {i * lateral_step, 0, 0};
            poses.push_back(p);
        }
    } else {
        throw std::invalid_argument("unknown builtin trajectory: " + name);
    }
    return poses;
}

double overlap_percentage(const Frame& ref, const Pose& tgt_pose, const CameraIntrinsics& intr,
                          const Image1f& tgt_depth) {
    if (tgt_depth.width != intr.width || tgt_depth.height != intr.height)
        throw std::invalid_argument("target depth does not match intrinsics");
    const WarpResult w = warp(ref, tgt_pose, intr);
    int64_t finite = 0;
    int64_t covered = 0;
    for (int y = 0; y < intr.height; ++y) {
        for (int x = 0; x < intr.width; ++x) {
            const float d = tgt_depth.at(x, y);
            if (std::isinf(d)) continue;
            ++finite;
            if (!w.valid(x, y)) continue;
            if (std::fabs(w.depth.at(x, y) - d) <= 0.05f * d) ++covered;
        }
    }
    if (finite == 0) return 100.0;
    return 100.0 * static_cast<double>(covered) / static_cast<double>(finite);
}

Frame downsample2_render(const FeatureGrid& grid, const MlpWeights& mlp, const Pose& pose,
                         const CameraIntrinsics& intr, const RenderConfig& cfg,
                         RenderStats* stats) {
    if (intr.width % 2 != 0 || intr.height % 2 != 0)
        throw std::invalid_argument("downsample2_render requires even dimensions");
    CameraIntrinsics half = intr;
    half.f = intr.f / 2.0;
    half.cx = intr.cx / 2.0;
    half.cy = intr.cy / 2.0;
    half.width = intr.width / 2;
    half.height = intr.height / 2;
    RenderStats local;
    Frame lo = render_frame(grid, mlp, pose, half, cfg, &local);
    if (stats) *stats = local;

    Frame out;
    out.pose = pose;
    out.intr = intr;
    out.color = Image3f(intr.width, intr.height);
    out.depth = Image1f(intr.width, intr.height);
    out.opacity = Image1f(intr.width, intr.height);
    const int w2 = half.width, h2 = half.height;
    for (int y = 0; y < intr.height; ++y) {
        const double sy = (y + 0.5) / 2.0 - 0.5;
        const int y0 = std::clamp(static_cast<int>(std::floor(sy)), 0, h2 - 1);
        const int y1 = std::min(static_cast<int>(std::floor(sy)) + 1, h2 - 1);
        const float fy = static_cast<float>(std::clamp(sy - std::floor(sy), 0.0, 1.0));
        for (int x = 0; x < intr.width; ++x) {
            const double sx = (x + 0.5) / 2.0 - 0.5;
            const int x0 = std::clamp(static_cast<int>(std::floor(sx)), 0, w2 - 1);
            const int x1 = std::min(static_cast<int>(std::floor(sx)) + 1, w2 - 1);
            const float fx = static_cast<float>(std::clamp(sx - std::floor(sx), 0.0, 1.0));
            const Vec3f c00 = lo.color.at(x0, y0), c10 = lo.color.at(x1, y0);
            const Vec3f c01 = lo.color.at(x0, y1), c11 = lo.color.at(x1, y1);
            const Vec3f top = c00 * (1.0f - fx) + c10 * fx;
            const Vec3f bot = c01 * (1.0f - fx) + c11 * fx;
            out.color.at(x, y) = top * (1.0f - fy) + bot * fy;
            out.depth.at(x, y) = lo.depth.at(x / 2, y / 2);
            out.opacity.at(x, y) = lo.opacity.at(x / 2, y / 2);
        }
    }
    return out;
}

double ExperimentResult::summary_value(const std::string& key) const {
    for (const auto& [k, v] : summary)
        if (k == key) return v;
    throw std::out_of_range("no summary value named " + key);
}

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_kv_csv(const std::string& path,
                  const std::vector<std::pair<std::string, std::string>>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "key,value\n";
    for (const auto& [k, v] : rows) out << k << ',' << v << '\n';
    if (!out) throw std::runtime_error("short write: " + path);
}

std::string frame_path(const std::string& dir, int index, const char* ext) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "frame_%03d", index);
    return dir + "/frames/" + buf + ext;
}

struct MemoryAnalysis {
    std::vector<std::pair<std::string, double>> trace_rows;
    std::vector<std::pair<std::string, double>> cycle_rows;
};

// Runs the full memory-system comparison on one pose: pixel-centric and
// memory-centric traces, stream classification, cache and bank simulation,
// GU timing, and the energy comparison between the two architectures.
MemoryAnalysis analyze_memory_system(const SyntheticScene& scene, const Pose& pose,
                                     const CameraIntrinsics& intr,
                                     const ExperimentConfig& cfg, const RenderConfig& rcfg) {
    MemoryAnalysis out;
    const MVoxelGrid mgrid = partition_mvoxels(scene.grid, cfg.buffer_bytes, true);
    std::vector<Ray> rays;
    std::vector<double> dir_cam_z;
    frame_rays(pose, intr, rays, dir_cam_z);

    AccessTrace pixel_trace = trace_pixel_centric(scene.grid, scene.mlp, mgrid, rays, rcfg);
    const TraceStats pixel_stats = classify_trace(pixel_trace, cfg.burst_bytes);

    MemoryCentricResult mem = render_memory_centric_rays(scene.grid, scene.mlp, mgrid, rays,
                                                         dir_cam_z, rcfg);
    AccessTrace mem_feat = filter_trace(mem.trace, MemLevel::Dram, AccessKind::Feature);
    AccessTrace mem_rit = filter_trace(mem.trace, MemLevel::Dram, AccessKind::Rit);
    const TraceStats feat_stats = classify_trace(mem_feat, cfg.burst_bytes);
    const TraceStats rit_stats = classify_trace(mem_rit, cfg.burst_bytes);
    classify_event_streams(mem.trace, cfg.burst_bytes);

    out.trace_rows = {
        {"pixel_streaming_fraction", pixel_stats.streaming_fraction},
        {"pixel_redundancy_ratio", pixel_stats.redundancy_ratio},
        {"pixel_dram_bytes", static_cast<double>(pixel_stats.bytes_total)},
        {"mem_feature_streaming_fraction", feat_stats.streaming_fraction},
        {"mem_feature_redundancy_ratio", feat_stats.redundancy_ratio},
        {"mem_feature_dram_bytes", static_cast<double>(feat_stats.bytes_total)},
        {"mem_rit_streaming_fraction", rit_stats.streaming_fraction},
        {"mem_rit_dram_bytes", static_cast<double>(rit_stats.bytes_total)},
    };

    const CacheReport lru = simulate_cache(pixel_trace, cfg.cache_capacity_bytes,
                                           cfg.cache_line_bytes, CachePolicy::Lru);
    const CacheReport belady = simulate_cache(pixel_trace, cfg.cache_capacity_bytes,
                                              cfg.cache_line_bytes, CachePolicy::Belady);
    out.trace_rows.emplace_back("lru_miss_rate", lru.miss_rate);
    out.trace_rows.emplace_back("belady_miss_rate", belady.miss_rate);

    const RayIndexTable rit = build_rit(rays, scene.grid, mgrid, rcfg);
    size_t busiest = 0;
    for (size_t m = 0; m < rit.per_mvoxel.size(); ++m)
        if (rit.per_mvoxel[m].size() > rit.per_mvoxel[busiest].size()) busiest = m;
    BankLayout layout;
    layout.banks = cfg.conflict_banks;
    layout.bank_bytes = mgrid.block_bytes / cfg.conflict_banks;
    layout.slots_per_block = mgrid.slots_per_block;
    layout.channels = mgrid.channels;
    const auto schedule = schedule_from_rit(rit.per_mvoxel[busiest], mgrid,
                                            static_cast<int64_t>(busiest), cfg.conflict_lanes);
    layout.mode = BankMode::FeatureMajor;
    const BankConflictReport fm = simulate_bank_conflicts(schedule, layout, cfg.conflict_lanes, 1);
    layout.mode = BankMode::ChannelMajor;
    const BankConflictReport cm = simulate_bank_conflicts(schedule, layout, cfg.conflict_lanes, 1);
    out.trace_rows.emplace_back("feature_major_conflict_rate", fm.conflict_rate);
    out.trace_rows.emplace_back("channel_major_conflict_rate", cm.conflict_rate);

    const GuReport gu = simulate_gu(rit, mgrid, cfg.gu);
    const int64_t mac = mac_cycles(rit.total_entries, scene.mlp, cfg.gu);
    const EnergyReport pixel_energy = energy_report(pixel_trace, 0, cfg.energy);
    const EnergyReport mem_energy = energy_report(mem.trace, gu.total_cycles, cfg.energy);
    const SavingsAttribution attr = attribute_savings(pixel_energy, mem_energy);
    const RemoteCost remote = remote_model(
        static_cast<int64_t>(intr.width) * intr.height * 3, cfg.energy);

    out.cycle_rows = {
        {"gu_gather_cycles", static_cast<double>(gu.gather_cycles)},
        {"gu_load_cycles", static_cast<double>(gu.mvoxel_load_cycles)},
        {"gu_total_cycles", static_cast<double>(gu.total_cycles)},
        {"gu_mvoxels_fetched", static_cast<double>(gu.mvoxels_fetched)},
        {"mac_cycles", static_cast<double>(mac)},
        {"rit_entries", static_cast<double>(rit.total_entries)},
        {"pixel_dram_energy", pixel_energy.dram_energy},
        {"pixel_total_energy", pixel_energy.total_energy},
        {"mem_dram_energy", mem_energy.dram_energy},
        {"mem_sram_energy", mem_energy.sram_energy},
        {"mem_total_energy", mem_energy.total_energy},
        {"traffic_component", attr.traffic_component},
        {"conversion_component", attr.conversion_component},
        {"dram_savings", attr.dram_savings},
        {"sram_delta", attr.sram_delta},
        {"total_savings", attr.total_savings},
        {"remote_latency_s", remote.tx_latency_s},
        {"remote_energy_j", remote.tx_energy_j},
    };
    return out;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    namespace fs = std::filesystem;

    const SceneSpec spec = cfg.scene_path.empty()
                               ? builtin_scene_spec(cfg.builtin_scene, cfg.seed)
                               : load_scene_spec(cfg.scene_path);
    const SyntheticScene scene = build_synthetic_scene(spec);
    RenderConfig rcfg = cfg.render;
    rcfg.background = spec.background;

    const std::vector<Pose> trajectory =
        cfg.trajectory_path.empty()
            ? builtin_trajectory(cfg.builtin_trajectory, cfg.frames, cfg.orbit_deg_per_frame,
                                 cfg.lateral_step)
            : load_trajectory(cfg.trajectory_path);
    if (trajectory.empty()) throw std::invalid_argument("trajectory is empty");
    const int n_frames = static_cast<int>(trajectory.size());
    const CameraIntrinsics intr = default_intrinsics(cfg.width, cfg.height);

    fs::create_directories(fs::path(cfg.out_dir) / "frames");

    std::vector<Frame> frames;
    std::vector<LedgerRow> ledger;
    int64_t nerf_pixels = 0;
    const int64_t frame_pixels = static_cast<int64_t>(cfg.width) * cfg.height;

    auto full_psnr = [&](const Frame& f, int index) {
        if (!cfg.compute_psnr) return std::numeric_limits<double>::infinity();
        const Frame ref = render_frame(scene.grid, scene.mlp, trajectory[index], intr, rcfg);
        return psnr(f.color, ref.color);
    };

    switch (cfg.mode) {
        case RunMode::Sparw:
        case RunMode::TempWarp: {
            SequenceConfig scfg;
            scfg.warp = cfg.warp;
            scfg.render = rcfg;
            scfg.mode = cfg.mode == RunMode::Sparw ? SequenceMode::SpaRW : SequenceMode::TempWarp;
            scfg.compute_psnr = cfg.compute_psnr;
            SequenceResult seq = run_sequence(trajectory, scene, intr, scfg);
            frames = std::move(seq.frames);
            ledger = std::move(seq.ledger);
            nerf_pixels = seq.full_render_pixels + seq.sparse_pixels;
            break;
        }
        case RunMode::PixelCentric: {
            for (int i = 0; i < n_frames; ++i) {
                frames.push_back(render_frame(scene.grid, scene.mlp, trajectory[i], intr, rcfg));
                ledger.push_back({i, "full", 0, frame_pixels, 0,
                                  std::numeric_limits<double>::infinity()});
                nerf_pixels += frame_pixels;
            }
            break;
        }
        case RunMode::MemoryCentric: {
            const MVoxelGrid mgrid = partition_mvoxels(scene.grid, cfg.buffer_bytes, true);
            for (int i = 0; i < n_frames; ++i) {
                MemoryCentricFrame mf = render_memory_centric(scene.grid, scene.mlp, mgrid,
                                                              trajectory[i], intr, rcfg);
                frames.push_back(std::move(mf.frame));
                ledger.push_back({i, "full", 0, frame_pixels, 0,
                                  std::numeric_limits<double>::infinity()});
                nerf_pixels += frame_pixels;
            }
            break;
        }
        case RunMode::Downsample2: {
            for (int i = 0; i < n_frames; ++i) {
                Frame f = downsample2_render(scene.grid, scene.mlp, trajectory[i], intr, rcfg);
                const double p = full_psnr(f, i);
                frames.push_back(std::move(f));
                ledger.push_back({i, "ds2", 0, frame_pixels / 4, 0, p});
                nerf_pixels += frame_pixels / 4;
            }
            break;
        }
    }

    for (int i = 0; i < n_frames; ++i) {
        write_ppm(frame_path(cfg.out_dir, i, ".ppm"), frames[i].color);
        write_pfm(frame_path(cfg.out_dir, i, ".pfm"), frames[i].depth);
    }
    write_ledger_csv(cfg.out_dir + "/ledger.csv", ledger);

    double psnr_sum = 0.0;
    double psnr_min = std::numeric_limits<double>::infinity();
    int psnr_count = 0;
    for (const LedgerRow& row : ledger) {
        if (std::isinf(row.psnr_vs_full)) continue;
        psnr_sum += row.psnr_vs_full;
        psnr_min = std::min(psnr_min, row.psnr_vs_full);
        ++psnr_count;
    }
    const double mean_psnr =
        psnr_count > 0 ? psnr_sum / psnr_count : std::numeric_limits<double>::infinity();

    double overlap = 100.0;
    if (n_frames >= 2) {
        const Image1f tgt_depth = scene.analytic_depth(trajectory[1], intr);
        overlap = overlap_percentage(frames[0], trajectory[1], intr, tgt_depth);
    }

    const MemoryAnalysis mem = analyze_memory_system(scene, trajectory[0], intr, cfg, rcfg);

    std::vector<std::pair<std::string, std::string>> trace_rows;
    for (const auto& [k, v] : mem.trace_rows) trace_rows.emplace_back(k, fmt_double(v));
    write_kv_csv(cfg.out_dir + "/trace_metrics.csv", trace_rows);
    std::vector<std::pair<std::string, std::string>> cycle_rows;
    for (const auto& [k, v] : mem.cycle_rows) cycle_rows.emplace_back(k, fmt_double(v));
    write_kv_csv(cfg.out_dir + "/cycles_energy.csv", cycle_rows);

    ExperimentResult result;
    result.out_dir = cfg.out_dir;
    result.frames_written = n_frames;
    result.summary = {
        {"frames", static_cast<double>(n_frames)},
        {"width", static_cast<double>(cfg.width)},
        {"height", static_cast<double>(cfg.height)},
        {"mean_psnr_db", mean_psnr},
        {"min_psnr_db", psnr_count > 0 ? psnr_min : std::numeric_limits<double>::infinity()},
        {"overlap_percent", overlap},
        {"nerf_pixel_fraction",
         static_cast<double>(nerf_pixels) / static_cast<double>(frame_pixels * n_frames)},
    };
    for (const auto& row : mem.trace_rows) result.summary.push_back(row);
    for (const auto& row : mem.cycle_rows) result.summary.push_back(row);

    std::vector<std::pair<std::string, std::string>> summary_rows;
    summary_rows.emplace_back("mode", to_string(cfg.mode));
    summary_rows.emplace_back("scene",
                              cfg.scene_path.empty() ? cfg.builtin_scene : cfg.scene_path);
    summary_rows.emplace_back("trajectory", cfg.trajectory_path.empty()
                                                ? cfg.builtin_trajectory
                                                : cfg.trajectory_path);
    for (const auto& [k, v] : result.summary) summary_rows.emplace_back(k, fmt_double(v));
    write_kv_csv(cfg.out_dir + "/summary.csv", summary_rows);
    return result;
}

}  // namespace voxwarp
