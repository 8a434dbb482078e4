#pragma once

#include <limits>
#include <string>
#include <vector>

#include "voxwarp/math.hpp"

namespace voxwarp {

// Written to depth files in place of +infinity.
inline constexpr float kDepthInfinityEncoding = 3.4e38f;

struct Image3f {
    int width = 0, height = 0;
    std::vector<Vec3f> pixels;

    Image3f() = default;
    Image3f(int w, int h, Vec3f fill = {}) : width(w), height(h),
        pixels(static_cast<size_t>(w) * h, fill) {}

    Vec3f& at(int x, int y) { return pixels[static_cast<size_t>(y) * width + x]; }
    const Vec3f& at(int x, int y) const { return pixels[static_cast<size_t>(y) * width + x]; }
};

struct Image1f {
    int width = 0, height = 0;
    std::vector<float> pixels;

    Image1f() = default;
    Image1f(int w, int h, float fill = 0.0f) : width(w), height(h),
        pixels(static_cast<size_t>(w) * h, fill) {}

    float& at(int x, int y) { return pixels[static_cast<size_t>(y) * width + x]; }
    float at(int x, int y) const { return pixels[static_cast<size_t>(y) * width + x]; }
};

inline Image1f make_infinite_depth(int w, int h) {
    return Image1f(w, h, std::numeric_limits<float>::infinity());
}

// 10*log10(1/MSE) over RGB, images in [0,1]. Identical images return
// +infinity. Throws std::invalid_argument on dimension mismatch.
double psnr(const Image3f& a, const Image3f& b);

// Mean absolute difference, skipping pixels where either side is infinite.
double depth_l1(const Image1f& a, const Image1f& b);

// Binary PPM (P6), 8 bits per channel; values clamped from [0,1].
void write_ppm(const std::string& path, const Image3f& img);
Image3f read_ppm(const std::string& path);

// Binary PFM, 32-bit little-endian floats, bottom-to-top rows per the format.
// +infinity is encoded as kDepthInfinityEncoding and restored on read.
void write_pfm(const std::string& path, const Image1f& img);
Image1f read_pfm(const std::string& path);

}  // namespace voxwarp
