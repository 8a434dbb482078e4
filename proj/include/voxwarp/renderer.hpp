#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "voxwarp/geometry.hpp"
#include "voxwarp/image.hpp"
#include "voxwarp/scene.hpp"

namespace voxwarp {

// Transmittance below which a ray stops accumulating samples.
inline constexpr float kEarlyTerminationT = 1e-4f;
// Opacity threshold separating finite-depth pixels from background.
inline constexpr float kDepthOpacityTau = 0.5f;

struct RenderConfig {
    int n_samples = 128;
    double near = 0.1;
    double far = 6.0;
    Vec3f background{0, 0, 0};
    int workers = 1;
    float termination_tau = kDepthOpacityTau;
    float early_term = kEarlyTerminationT;
};

// One sample along a ray. Samples outside the grid bbox are kept (so sample
// indices are stable) but flagged skipped and never touch features.
struct RaySample {
    int64_t ray_id = 0;
    int sample_index = 0;
    Vec3 position;
    double t = 0.0;      // ray parameter (distance along the unit direction)
    double delta = 0.0;  // spacing to the next sample
    bool skipped = true;
    VoxelCoord voxel;  // valid when not skipped
};

struct SampleResult {
    float sigma = 0.0f;
    Vec3f rgb;
};

// Rendered frame. depth is camera-space Z with +infinity exactly where
// opacity < termination_tau.
struct Frame {
    Image3f color;
    Image1f depth;
    Image1f opacity;
    Pose pose;
    CameraIntrinsics intr;
};

struct RenderStats {
    int64_t pixels_rendered = 0;
    int64_t samples_shaded = 0;
};

// Midpoint samples: t_i = near + (i + 0.5) * (far - near) / n.
std::vector<RaySample> sample_ray(const Ray& ray, int64_t ray_id, const FeatureGrid& grid,
                                  const RenderConfig& cfg);

// Trilinear interpolation weights for the 8 cell corners; corner k uses bit
// 0/1/2 of k for the x/y/z offset. Computed in fp32; sums to 1 within fp32
// rounding.
void corner_weights(const Vec3& frac, float w[8]);

// Interpolated feature vector at a sample, or nothing if the sample is
// outside the bbox (skip marker, not an error).
std::optional<std::vector<float>> gather_features(const RaySample& s, const FeatureGrid& grid);

// MLP decode of an interpolated feature vector:
// sigma = softplus(out[0]), rgb = sigmoid(out[1..3]).
SampleResult decode(const float* feature, const MlpWeights& mlp);

// Fetch + interpolate + decode in one fixed arithmetic order. `fetch` returns
// the fp16 bits of (corner k, channel c); every render path funnels through
// this so their outputs are bit-identical. `scratch` needs 9*C floats.
template <typename FetchBits>
SampleResult shade_from_bits(FetchBits&& fetch, const float w[8], const MlpWeights& mlp,
                             int channels, float* scratch);

struct SampleContrib {
    int sample_index = 0;
    float sigma = 0.0f;
    Vec3f rgb;
    float t = 0.0f;
    float delta = 0.0f;
};

// Front-to-back compositing result, before background blending. depth_t is
// the expected ray parameter, +infinity when opacity < tau.
struct PixelComposite {
    Vec3f accum;
    float opacity = 0.0f;
    float transmittance = 1.0f;
    double depth_t = 0.0;
};

// contribs must be ordered by sample_index; entries after the transmittance
// cutoff are ignored, so supplying extra tail samples cannot change the
// result.
PixelComposite composite(const std::vector<SampleContrib>& contribs, float tau, float early_term);

struct PixelOut {
    Vec3f color;
    float depth_z = 0.0f;  // +infinity when opacity < tau
    float opacity = 0.0f;
};

// Background blend + depth conversion shared by every render path.
PixelOut finalize_pixel(const PixelComposite& px, const Vec3f& background, double dir_cam_z);

// Pixel-centric reference path: shade samples in ray order directly from the
// grid, stopping at the early-termination threshold.
PixelOut render_pixel(const FeatureGrid& grid, const MlpWeights& mlp, const Ray& ray,
                      int64_t ray_id, double dir_cam_z, const RenderConfig& cfg,
                      RenderStats* stats = nullptr);

std::vector<PixelOut> render_rays(const FeatureGrid& grid, const MlpWeights& mlp,
                                  const std::vector<Ray>& rays,
                                  const std::vector<double>& dir_cam_z, const RenderConfig& cfg,
                                  RenderStats* stats = nullptr);

// Full-frame render; deterministic and bit-identical for any worker count.
Frame render_frame(const FeatureGrid& grid, const MlpWeights& mlp, const Pose& pose,
                   const CameraIntrinsics& intr, const RenderConfig& cfg,
                   RenderStats* stats = nullptr);

// Render exactly the pixels with mask != 0; all other pixels are left as
// background color, infinite depth, zero opacity. Rendered pixels are
// bit-identical to the same pixels of render_frame.
Frame render_sparse(const FeatureGrid& grid, const MlpWeights& mlp, const Pose& pose,
                    const CameraIntrinsics& intr, const RenderConfig& cfg,
                    const std::vector<uint8_t>& mask, RenderStats* stats = nullptr);

// Camera ray bundle through every pixel center, row-major, plus each ray's
// camera-space unit-direction z (converts ray-parameter depth to Z).
void frame_rays(const Pose& pose, const CameraIntrinsics& intr, std::vector<Ray>& rays,
                std::vector<double>& dir_cam_z);

// ---- implementation of the shared shading template -------------------------

namespace detail {
SampleResult decode_fp32(const float* feature, const MlpWeights& mlp);
}

template <typename FetchBits>
SampleResult shade_from_bits(FetchBits&& fetch, const float w[8], const MlpWeights& mlp,
                             int channels, float* scratch) {
    // Promote all 64 fp16 values first, then interpolate in a fixed order;
    // both steps are exact/deterministic regardless of the storage layout
    // behind `fetch`.
    for (int k = 0; k < 8; ++k)
        for (int c = 0; c < channels; ++c)
            scratch[8 * c + k] = half_to_float(fetch(k, c));
    float* feat = scratch + 8 * channels;
    for (int c = 0; c < channels; ++c) {
        const float* v = scratch + 8 * c;
        float acc = 0.0f;
        for (int k = 0; k < 8; ++k) acc += w[k] * v[k];
        feat[c] = acc;
    }
    return detail::decode_fp32(feat, mlp);
}

}  // namespace voxwarp
