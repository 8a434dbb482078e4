#include "voxwarp/sparw.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace voxwarp {

namespace {

// Relative tie window for the splat z-buffer.
constexpr double kDepthTieRel = 1e-6;

}  // namespace

// Two passes: exact minimum depth per pixel, then the smallest source index
// among splats within the tie window of that minimum. Both are mins over a
// set, so the outcome cannot depend on splat order.
WarpResult splat_points(const std::vector<SplatPoint>& splats, int width, int height) {
    WarpResult w;
    w.width = width;
    w.height = height;
    w.color = Image3f(width, height);
    w.depth = make_infinite_depth(width, height);
    w.opacity = Image1f(width, height);
    const size_t n = static_cast<size_t>(width) * height;
    w.kind.assign(n, PixelKind::Void);
    w.angle.assign(n, std::numeric_limits<float>::quiet_NaN());
    w.splat_count = static_cast<int64_t>(splats.size());

    std::vector<double> dmin(n, std::numeric_limits<double>::infinity());
    for (const SplatPoint& s : splats) {
        const size_t i = static_cast<size_t>(s.y) * width + s.x;
        if (s.depth < dmin[i]) dmin[i] = s.depth;
    }
    std::vector<int64_t> winner(n, std::numeric_limits<int64_t>::max());
    for (const SplatPoint& s : splats) {
        const size_t i = static_cast<size_t>(s.y) * width + s.x;
        if (s.depth <= dmin[i] * (1.0 + kDepthTieRel) && s.source_linear < winner[i])
            winner[i] = s.source_linear;
    }
    for (const SplatPoint& s : splats) {
        const size_t i = static_cast<size_t>(s.y) * width + s.x;
        if (s.source_linear != winner[i] || s.depth > dmin[i] * (1.0 + kDepthTieRel)) continue;
        w.color.pixels[i] = s.color;
        w.depth.pixels[i] = static_cast<float>(s.depth);
        w.opacity.pixels[i] = s.opacity;
        w.angle[i] = s.angle;
        w.kind[i] = PixelKind::Warped;
    }
    return w;
}

WarpResult warp(const Frame& ref, const Pose& tgt_pose, const CameraIntrinsics& intr) {
    ref.intr.validate();
    intr.validate();
    tgt_pose.validate();
    const PointCloud cloud = unproject(ref.color.pixels, ref.depth.pixels, ref.intr.width,
                                       ref.intr.height, ref.intr);
    const Pose rel = relative_transform(ref.pose, tgt_pose);
    const PointCloud tgt_cloud = transform_points(cloud, rel);
    const ProjectionResult proj = project(tgt_cloud, intr);

    std::vector<SplatPoint> splats;
    splats.reserve(proj.points.size());
    for (const ProjectedPoint& p : proj.points) {
        SplatPoint s;
        s.x = static_cast<int>(std::floor(p.pixel.x));
        s.y = static_cast<int>(std::floor(p.pixel.y));
        s.depth = p.depth;
        s.color = p.color;
        const auto [sx, sy] = cloud.source_pixels[static_cast<size_t>(p.source_index)];
        s.source_linear = static_cast<int64_t>(sy) * ref.intr.width + sx;
        s.opacity = ref.opacity.at(sx, sy);
        const Vec3 world = ref.pose.apply(cloud.points[static_cast<size_t>(p.source_index)]);
        s.angle = static_cast<float>(
            ray_angle(world - ref.pose.translation, world - tgt_pose.translation));
        splats.push_back(s);
    }
    WarpResult w = splat_points(splats, intr.width, intr.height);
    w.dropped = proj.dropped;
    return w;
}

HoleCounts classify_holes(WarpResult& w, const Image1f& tgt_depth_proj) {
    if (tgt_depth_proj.width != w.width || tgt_depth_proj.height != w.height)
        throw std::invalid_argument("classify_holes: depth map dimensions differ");
    HoleCounts counts;
    for (size_t i = 0; i < w.kind.size(); ++i) {
        if (w.kind[i] != PixelKind::Warped)
            w.kind[i] = std::isinf(tgt_depth_proj.pixels[i]) ? PixelKind::Void
                                                             : PixelKind::Disoccluded;
        switch (w.kind[i]) {
            case PixelKind::Warped: ++counts.warped; break;
            case PixelKind::Disoccluded: ++counts.disoccluded; break;
            case PixelKind::Void: ++counts.voids; break;
        }
    }
    return counts;
}

int64_t apply_phi(WarpResult& w, double phi) {
    if (std::isinf(phi) && phi > 0) return 0;
    int64_t demoted = 0;
    for (size_t i = 0; i < w.kind.size(); ++i) {
        if (w.kind[i] == PixelKind::Warped && static_cast<double>(w.angle[i]) >= phi) {
            w.kind[i] = PixelKind::Disoccluded;
            ++demoted;
        }
    }
    return demoted;
}

TargetFrame render_target(const Frame& ref, const Pose& tgt_pose, const CameraIntrinsics& intr,
                          const SyntheticScene& scene, const WarpConfig& wcfg,
                          const RenderConfig& rcfg, RenderStats* stats) {
    WarpResult w = warp(ref, tgt_pose, intr);
    const Image1f proj_depth = scene.analytic_depth(tgt_pose, intr);
    classify_holes(w, proj_depth);
    TargetFrame out;
    out.demoted_px = apply_phi(w, wcfg.phi);

    const size_t n = w.kind.size();
    std::vector<uint8_t> mask(n, 0);
    for (size_t i = 0; i < n; ++i) mask[i] = w.kind[i] == PixelKind::Disoccluded ? 1 : 0;
    const Frame sparse = render_sparse(scene.grid, scene.mlp, tgt_pose, intr, rcfg, mask, stats);

    Frame& f = out.frame;
    f.pose = tgt_pose;
    f.intr = intr;
    f.color = Image3f(intr.width, intr.height);
    f.depth = make_infinite_depth(intr.width, intr.height);
    f.opacity = Image1f(intr.width, intr.height);
    for (size_t i = 0; i < n; ++i) {
        switch (w.kind[i]) {
            case PixelKind::Warped:
                f.color.pixels[i] = w.color.pixels[i];
                f.depth.pixels[i] = w.depth.pixels[i];
                f.opacity.pixels[i] = w.opacity.pixels[i];
                ++out.warped_px;
                break;
            case PixelKind::Disoccluded:
                f.color.pixels[i] = sparse.color.pixels[i];
                f.depth.pixels[i] = sparse.depth.pixels[i];
                f.opacity.pixels[i] = sparse.opacity.pixels[i];
                ++out.sparse_px;
                break;
            case PixelKind::Void:
                f.color.pixels[i] = rcfg.background;
                ++out.void_px;
                break;
        }
    }
    out.rendered_fraction = static_cast<double>(out.sparse_px) / static_cast<double>(n);
    return out;
}

Pose extrapolate_reference_pose(const Pose& t1, const Pose& t2, const WarpConfig& cfg) {
    t1.validate();
    t2.validate();
    if (cfg.window < 1) throw std::invalid_argument("extrapolate_reference_pose: window < 1");
    // R = T2 + v * (N/2) * dt with v = (T2 - T1) / dt; dt cancels exactly.
    const double s = cfg.window / 2.0;
    Pose r;
    r.translation = t2.translation + (t2.translation - t1.translation) * s;
    const Mat3 rel = t2.rotation * t1.rotation.transposed();
    const Vec3 axis_angle = rotation_log(rel);
    r.rotation = rotation_exp(axis_angle * s) * t2.rotation;
    return r;
}

SequenceResult run_sequence(const std::vector<Pose>& trajectory, const SyntheticScene& scene,
                            const CameraIntrinsics& intr, const SequenceConfig& cfg) {
    if (trajectory.size() < 2)
        throw std::invalid_argument("run_sequence: trajectory needs at least 2 poses");
    const int frame_count = static_cast<int>(trajectory.size());
    const int window = std::max(1, cfg.warp.window);
    const int64_t px_per_frame = static_cast<int64_t>(intr.width) * intr.height;

    SequenceResult res;
    res.frames.resize(static_cast<size_t>(frame_count));

    res.frames[0] = render_frame(scene.grid, scene.mlp, trajectory[0], intr, cfg.render);
    res.reference_renders = 1;
    res.full_render_pixels = px_per_frame;
    res.schedule.push_back({ScheduleEntry::Kind::Reference, 0, 0, -1, trajectory[0]});
    res.ledger.push_back(
        {0, "reference", 0, px_per_frame, 0, std::numeric_limits<double>::infinity()});

    int ref_id = 0;
    Frame sparw_ref;
    for (int start = 1; start < frame_count; start += window) {
        const int end = std::min(frame_count - 1, start + window - 1);
        const Frame* window_ref = nullptr;
        int window_ref_id = -1;
        if (cfg.mode == SequenceMode::SpaRW) {
            // Extrapolate from the two poses preceding the window; the first
            // window has only pose 0 behind it and seeds from poses 0 and 1.
            const Pose& p1 = trajectory[static_cast<size_t>(start >= 2 ? start - 2 : 0)];
            const Pose& p2 = trajectory[static_cast<size_t>(start >= 2 ? start - 1 : 1)];
            WarpConfig wc = cfg.warp;
            wc.window = window;
            const Pose ref_pose = extrapolate_reference_pose(p1, p2, wc);
            sparw_ref = render_frame(scene.grid, scene.mlp, ref_pose, intr, cfg.render);
            ++res.reference_renders;
            res.full_render_pixels += px_per_frame;
            window_ref_id = ++ref_id;
            res.schedule.push_back(
                {ScheduleEntry::Kind::Reference, -1, window_ref_id, -1, ref_pose});
            res.ledger.push_back({start, "reference", 0, px_per_frame, 0,
                                  std::numeric_limits<double>::infinity()});
            window_ref = &sparw_ref;
        } else {
            // Reference is the output frame just before the window; its
            // trajectory index doubles as the reference id.
            window_ref = &res.frames[static_cast<size_t>(start - 1)];
            window_ref_id = start - 1;
        }
        // In SpaRW mode the next window's reference is logically rendered
        // while this window's targets are produced.
        const bool more_windows = end < frame_count - 1;
        const int concurrent =
            cfg.mode == SequenceMode::SpaRW && more_windows ? window_ref_id + 1 : -1;
        for (int t = start; t <= end; ++t) {
            TargetFrame tf = render_target(*window_ref, trajectory[static_cast<size_t>(t)], intr,
                                           scene, cfg.warp, cfg.render);
            double p = std::numeric_limits<double>::infinity();
            if (cfg.compute_psnr) {
                const Frame full = render_frame(scene.grid, scene.mlp,
                                                trajectory[static_cast<size_t>(t)], intr,
                                                cfg.render);
                p = psnr(tf.frame.color, full.color);
            }
            res.sparse_pixels += tf.sparse_px;
            res.schedule.push_back({ScheduleEntry::Kind::Target, t, window_ref_id, concurrent,
                                    trajectory[static_cast<size_t>(t)]});
            res.ledger.push_back({t, "target", tf.warped_px, tf.sparse_px, tf.void_px, p});
            res.frames[static_cast<size_t>(t)] = std::move(tf.frame);
        }
    }
    return res;
}

std::string ledger_csv_string(const std::vector<LedgerRow>& rows) {
    std::ostringstream out;
    out << "frame,kind,warped_px,sparse_px,void_px,psnr_vs_full\n";
    char num[64];
    for (const LedgerRow& r : rows) {
        out << r.frame << ',' << r.kind << ',' << r.warped_px << ',' << r.sparse_px << ','
            << r.void_px << ',';
        if (std::isinf(r.psnr_vs_full)) {
            out << "inf";
        } else {
            std::snprintf(num, sizeof num, "%.6f", r.psnr_vs_full);
            out << num;
        }
        out << '\n';
    }
    return out.str();
}

void write_ledger_csv(const std::string& path, const std::vector<LedgerRow>& rows) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << ledger_csv_string(rows);
    if (!f) throw std::runtime_error("short write: " + path);
}

std::vector<Pose> load_trajectory(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open for reading: " + path);
    std::vector<Pose> poses;
    std::string line;
    int line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        const size_t first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream ss(line);
        double m[12];
        for (int i = 0; i < 12; ++i) {
            if (!(ss >> m[i]))
                throw std::runtime_error("trajectory " + path + " line " +
                                         std::to_string(line_no) + ": expected 12 numbers");
        }
        Pose p = pose_from_row_major(m);
        try {
            p.validate();
        } catch (const std::exception& e) {
            throw std::runtime_error("trajectory " + path + " line " + std::to_string(line_no) +
                                     ": " + e.what());
        }
        poses.push_back(p);
    }
    return poses;
}

void save_trajectory(const std::string& path, const std::vector<Pose>& poses) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    char num[64];
    for (const Pose& p : poses) {
        double m[12];
        pose_to_row_major(p, m);
        for (int i = 0; i < 12; ++i) {
            std::snprintf(num, sizeof num, "%.17g", m[i]);
            f << num << (i == 11 ? '\n' : ' ');
        }
    }
    if (!f) throw std::runtime_error("short write: " + path);
}

}  // namespace voxwarp
