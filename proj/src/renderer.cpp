#include "voxwarp/renderer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <thread>

namespace voxwarp {

std::vector<RaySample> sample_ray(const Ray& ray, int64_t ray_id, const FeatureGrid& grid,
                                  const RenderConfig& cfg) {
    if (cfg.n_samples <= 0) throw std::invalid_argument("sample_ray: n_samples must be positive");
    if (!(cfg.far > cfg.near)) throw std::invalid_argument("sample_ray: far must exceed near");
    std::vector<RaySample> out;
    out.reserve(static_cast<size_t>(cfg.n_samples));
    const double step = (cfg.far - cfg.near) / cfg.n_samples;
    for (int i = 0; i < cfg.n_samples; ++i) {
        RaySample s;
        s.ray_id = ray_id;
        s.sample_index = i;
        s.t = cfg.near + (i + 0.5) * step;
        s.delta = step;
        s.position = ray.origin + ray.direction * s.t;
        if (grid.contains(s.position)) {
            s.voxel = voxel_id(s.position, grid);
            s.skipped = false;
        }
        out.push_back(s);
    }
    return out;
}

void corner_weights(const Vec3& frac, float w[8]) {
    const float fx = static_cast<float>(frac.x);
    const float fy = static_cast<float>(frac.y);
    const float fz = static_cast<float>(frac.z);
    for (int k = 0; k < 8; ++k) {
        const float wx = (k & 1) ? fx : 1.0f - fx;
        const float wy = (k & 2) ? fy : 1.0f - fy;
        const float wz = (k & 4) ? fz : 1.0f - fz;
        w[k] = wx * wy * wz;
    }
}

std::optional<std::vector<float>> gather_features(const RaySample& s, const FeatureGrid& grid) {
    if (s.skipped) return std::nullopt;
    float w[8];
    corner_weights(s.voxel.frac, w);
    const int C = grid.channels;
    std::vector<float> scratch(static_cast<size_t>(9) * C);
    const int cx = s.voxel.cell[0], cy = s.voxel.cell[1], cz = s.voxel.cell[2];
    for (int k = 0; k < 8; ++k) {
        const int vx = cx + ((k >> 0) & 1);
        const int vy = cy + ((k >> 1) & 1);
        const int vz = cz + ((k >> 2) & 1);
        const int64_t vid = grid.vertex_id(vx, vy, vz);
        for (int c = 0; c < C; ++c)
            scratch[static_cast<size_t>(8) * c + k] = half_to_float(grid.feature_bits(vid, c));
    }
    std::vector<float> feat(static_cast<size_t>(C));
    for (int c = 0; c < C; ++c) {
        const float* v = scratch.data() + static_cast<size_t>(8) * c;
        float acc = 0.0f;
        for (int k = 0; k < 8; ++k) acc += w[k] * v[k];
        feat[c] = acc;
    }
    return feat;
}

namespace detail {

static float softplus(float x) {
    // log1p(exp(x)) with the standard large-x rewrite to avoid overflow.
    if (x > 20.0f) return x;
    return std::log1p(std::exp(x));
}

static float sigmoid(float x) { return 1.0f / (1.0f + std::exp(-x)); }

SampleResult decode_fp32(const float* feature, const MlpWeights& mlp) {
    const int in = mlp.in_dim, hid = mlp.hidden;
    float h[kMaxMlpHidden];
    for (int j = 0; j < hid; ++j) {
        float acc = mlp.b1[static_cast<size_t>(j)];
        const float* row = mlp.w1.data() + static_cast<size_t>(j) * in;
        for (int c = 0; c < in; ++c) acc += row[c] * feature[c];
        h[j] = acc > 0.0f ? acc : 0.0f;
    }
    float out[4];
    for (int o = 0; o < 4; ++o) {
        float acc = mlp.b2[static_cast<size_t>(o)];
        const float* row = mlp.w2.data() + static_cast<size_t>(o) * hid;
        for (int j = 0; j < hid; ++j) acc += row[j] * h[j];
        out[o] = acc;
    }
    SampleResult r;
    r.sigma = softplus(out[0]);
    r.rgb = Vec3f{sigmoid(out[1]), sigmoid(out[2]), sigmoid(out[3])};
    return r;
}

}  // namespace detail

SampleResult decode(const float* feature, const MlpWeights& mlp) {
    return detail::decode_fp32(feature, mlp);
}

PixelComposite composite(const std::vector<SampleContrib>& contribs, float tau, float early_term) {
    PixelComposite px;
    px.accum = Vec3f{0, 0, 0};
    float T = 1.0f;
    float opacity = 0.0f;
    double depth_num = 0.0;
    int last_index = -1;
    for (const SampleContrib& c : contribs) {
        if (c.sample_index <= last_index)
            throw std::invalid_argument("composite: contributions must be strictly ordered");
        last_index = c.sample_index;
        if (T < early_term) break;
        const float alpha = 1.0f - std::exp(-c.sigma * c.delta);
        const float weight = T * alpha;
        px.accum.x += weight * c.rgb.x;
        px.accum.y += weight * c.rgb.y;
        px.accum.z += weight * c.rgb.z;
        depth_num += static_cast<double>(weight) * c.t;
        opacity += weight;
        T *= 1.0f - alpha;
    }
    px.transmittance = T;
    px.opacity = opacity;
    px.depth_t = opacity >= tau ? depth_num / opacity : std::numeric_limits<double>::infinity();
    return px;
}

PixelOut finalize_pixel(const PixelComposite& px, const Vec3f& background, double dir_cam_z) {
    PixelOut out;
    out.color = Vec3f{px.accum.x + px.transmittance * background.x,
                      px.accum.y + px.transmittance * background.y,
                      px.accum.z + px.transmittance * background.z};
    out.opacity = px.opacity;
    out.depth_z = std::isinf(px.depth_t) ? std::numeric_limits<float>::infinity()
                                         : static_cast<float>(px.depth_t * dir_cam_z);
    return out;
}

PixelOut render_pixel(const FeatureGrid& grid, const MlpWeights& mlp, const Ray& ray,
                      int64_t ray_id, double dir_cam_z, const RenderConfig& cfg,
                      RenderStats* stats) {
    mlp.validate();
    if (mlp.in_dim != grid.channels)
        throw std::invalid_argument("render_pixel: mlp input width does not match grid channels");
    const std::vector<RaySample> samples = sample_ray(ray, ray_id, grid, cfg);
    std::vector<SampleContrib> contribs;
    float T = 1.0f;
    float w[8];
    std::vector<float> scratch(static_cast<size_t>(9) * grid.channels);
    int64_t shaded = 0;
    for (const RaySample& s : samples) {
        if (T < cfg.early_term) break;
        if (s.skipped) continue;
        corner_weights(s.voxel.frac, w);
        const int cx = s.voxel.cell[0], cy = s.voxel.cell[1], cz = s.voxel.cell[2];
        const SampleResult sr = shade_from_bits(
            [&](int k, int c) {
                const int vx = cx + ((k >> 0) & 1);
                const int vy = cy + ((k >> 1) & 1);
                const int vz = cz + ((k >> 2) & 1);
                return grid.feature_bits(grid.vertex_id(vx, vy, vz), c);
            },
            w, mlp, grid.channels, scratch.data());
        ++shaded;
        SampleContrib c;
        c.sample_index = s.sample_index;
        c.sigma = sr.sigma;
        c.rgb = sr.rgb;
        c.t = static_cast<float>(s.t);
        c.delta = static_cast<float>(s.delta);
        contribs.push_back(c);
        const float alpha = 1.0f - std::exp(-c.sigma * c.delta);
        T *= 1.0f - alpha;
    }
    const PixelComposite px = composite(contribs, cfg.termination_tau, cfg.early_term);
    const PixelOut out = finalize_pixel(px, cfg.background, dir_cam_z);
    if (stats) {
        stats->pixels_rendered += 1;
        stats->samples_shaded += shaded;
    }
    return out;
}

std::vector<PixelOut> render_rays(const FeatureGrid& grid, const MlpWeights& mlp,
                                  const std::vector<Ray>& rays,
                                  const std::vector<double>& dir_cam_z, const RenderConfig& cfg,
                                  RenderStats* stats) {
    if (rays.size() != dir_cam_z.size())
        throw std::invalid_argument("render_rays: rays and dir_cam_z size mismatch");
    std::vector<PixelOut> out(rays.size());
    for (size_t i = 0; i < rays.size(); ++i)
        out[i] = render_pixel(grid, mlp, rays[i], static_cast<int64_t>(i), dir_cam_z[i], cfg,
                              stats);
    return out;
}

void frame_rays(const Pose& pose, const CameraIntrinsics& intr, std::vector<Ray>& rays,
                std::vector<double>& dir_cam_z) {
    rays.clear();
    dir_cam_z.clear();
    rays.reserve(static_cast<size_t>(intr.width) * intr.height);
    dir_cam_z.reserve(static_cast<size_t>(intr.width) * intr.height);
    for (int y = 0; y < intr.height; ++y) {
        for (int x = 0; x < intr.width; ++x) {
            const Vec2 px{x + 0.5, y + 0.5};
            rays.push_back(generate_ray(intr, pose, px));
            const Vec3 dir_cam{(px.x - intr.cx) / intr.f, (px.y - intr.cy) / intr.f, 1.0};
            dir_cam_z.push_back(1.0 / norm(dir_cam));
        }
    }
}

namespace {

// Runs fn(y) for each row, splitting rows across workers. Per-pixel outputs
// land in per-pixel slots, so the result never depends on the worker count.
void parallel_rows(int height, int workers, const std::function<void(int)>& fn) {
    workers = std::max(1, workers);
    if (workers == 1) {
        for (int y = 0; y < height; ++y) fn(y);
        return;
    }
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    pool.reserve(static_cast<size_t>(workers));
    for (int t = 0; t < workers; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                const int y = next.fetch_add(1);
                if (y >= height) return;
                fn(y);
            }
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace

Frame render_frame(const FeatureGrid& grid, const MlpWeights& mlp, const Pose& pose,
                   const CameraIntrinsics& intr, const RenderConfig& cfg, RenderStats* stats) {
    intr.validate();
    pose.validate();
    Frame frame;
    frame.pose = pose;
    frame.intr = intr;
    frame.color = Image3f(intr.width, intr.height);
    frame.depth = make_infinite_depth(intr.width, intr.height);
    frame.opacity = Image1f(intr.width, intr.height);
    std::vector<RenderStats> row_stats(static_cast<size_t>(intr.height));
    parallel_rows(intr.height, cfg.workers, [&](int y) {
        RenderStats* rs = stats ? &row_stats[static_cast<size_t>(y)] : nullptr;
        for (int x = 0; x < intr.width; ++x) {
            const Vec2 px{x + 0.5, y + 0.5};
            const Ray ray = generate_ray(intr, pose, px);
            const Vec3 dir_cam{(px.x - intr.cx) / intr.f, (px.y - intr.cy) / intr.f, 1.0};
            const int64_t ray_id = static_cast<int64_t>(y) * intr.width + x;
            const PixelOut out =
                render_pixel(grid, mlp, ray, ray_id, 1.0 / norm(dir_cam), cfg, rs);
            frame.color.at(x, y) = out.color;
            frame.depth.at(x, y) = out.depth_z;
            frame.opacity.at(x, y) = out.opacity;
        }
    });
    if (stats)
        for (const RenderStats& rs : row_stats) {
            stats->pixels_rendered += rs.pixels_rendered;
            stats->samples_shaded += rs.samples_shaded;
        }
    return frame;
}

Frame render_sparse(const FeatureGrid& grid, const MlpWeights& mlp, const Pose& pose,
                    const CameraIntrinsics& intr, const RenderConfig& cfg,
                    const std::vector<uint8_t>& mask, RenderStats* stats) {
    intr.validate();
    pose.validate();
    if (mask.size() != static_cast<size_t>(intr.width) * intr.height)
        throw std::invalid_argument("render_sparse: mask size mismatch");
    Frame frame;
    frame.pose = pose;
    frame.intr = intr;
    frame.color = Image3f(intr.width, intr.height);
    frame.depth = make_infinite_depth(intr.width, intr.height);
    frame.opacity = Image1f(intr.width, intr.height);
    for (auto& c : frame.color.pixels) c = cfg.background;
    std::vector<RenderStats> row_stats(static_cast<size_t>(intr.height));
    parallel_rows(intr.height, cfg.workers, [&](int y) {
        RenderStats* rs = stats ? &row_stats[static_cast<size_t>(y)] : nullptr;
        for (int x = 0; x < intr.width; ++x) {
            const int64_t ray_id = static_cast<int64_t>(y) * intr.width + x;
            if (!mask[static_cast<size_t>(ray_id)]) continue;
            const Vec2 px{x + 0.5, y + 0.5};
            const Ray ray = generate_ray(intr, pose, px);
            const Vec3 dir_cam{(px.x - intr.cx) / intr.f, (px.y - intr.cy) / intr.f, 1.0};
            const PixelOut out =
                render_pixel(grid, mlp, ray, ray_id, 1.0 / norm(dir_cam), cfg, rs);
            frame.color.at(x, y) = out.color;
            frame.depth.at(x, y) = out.depth_z;
            frame.opacity.at(x, y) = out.opacity;
        }
    });
    if (stats)
        for (const RenderStats& rs : row_stats) {
            stats->pixels_rendered += rs.pixels_rendered;
            stats->samples_shaded += rs.samples_shaded;
        }
    return frame;
}

}  // namespace voxwarp
