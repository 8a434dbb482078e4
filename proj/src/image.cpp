#include "voxwarp/image.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace voxwarp {

namespace {

uint8_t to_byte(float v) {
    const float c = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
    return static_cast<uint8_t>(std::lround(c * 255.0f));
}

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    return f;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for reading: " + path);
    return f;
}

}  // namespace

double psnr(const Image3f& a, const Image3f& b) {
    if (a.width != b.width || a.height != b.height)
        throw std::invalid_argument("psnr: image dimensions differ");
    double se = 0.0;
    for (size_t i = 0; i < a.pixels.size(); ++i) {
        const double dx = static_cast<double>(a.pixels[i].x) - b.pixels[i].x;
        const double dy = static_cast<double>(a.pixels[i].y) - b.pixels[i].y;
        const double dz = static_cast<double>(a.pixels[i].z) - b.pixels[i].z;
        se += dx * dx + dy * dy + dz * dz;
    }
    const double mse = se / (3.0 * static_cast<double>(a.pixels.size()));
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

double depth_l1(const Image1f& a, const Image1f& b) {
    if (a.width != b.width || a.height != b.height)
        throw std::invalid_argument("depth_l1: image dimensions differ");
    double sum = 0.0;
    int64_t n = 0;
    for (size_t i = 0; i < a.pixels.size(); ++i) {
        if (std::isinf(a.pixels[i]) || std::isinf(b.pixels[i])) continue;
        sum += std::abs(static_cast<double>(a.pixels[i]) - b.pixels[i]);
        ++n;
    }
    return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

void write_ppm(const std::string& path, const Image3f& img) {
    auto f = open_out(path);
    f << "P6\n" << img.width << " " << img.height << "\n255\n";
    std::vector<uint8_t> row(static_cast<size_t>(img.width) * 3);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const Vec3f& p = img.at(x, y);
            row[3 * x + 0] = to_byte(p.x);
            row[3 * x + 1] = to_byte(p.y);
            row[3 * x + 2] = to_byte(p.z);
        }
        f.write(reinterpret_cast<const char*>(row.data()), row.size());
    }
    if (!f) throw std::runtime_error("short write: " + path);
}

Image3f read_ppm(const std::string& path) {
    auto f = open_in(path);
    std::string magic;
    int w = 0, h = 0, maxval = 0;
    f >> magic >> w >> h >> maxval;
    if (magic != "P6" || maxval != 255 || w <= 0 || h <= 0)
        throw std::runtime_error("not an 8-bit P6 PPM: " + path);
    f.get();  // single whitespace after header
    Image3f img(w, h);
    std::vector<uint8_t> row(static_cast<size_t>(w) * 3);
    for (int y = 0; y < h; ++y) {
        f.read(reinterpret_cast<char*>(row.data()), row.size());
        if (!f) throw std::runtime_error("truncated PPM: " + path);
        for (int x = 0; x < w; ++x)
            img.at(x, y) = {row[3 * x] / 255.0f, row[3 * x + 1] / 255.0f, row[3 * x + 2] / 255.0f};
    }
    return img;
}

void write_pfm(const std::string& path, const Image1f& img) {
    auto f = open_out(path);
    // Negative scale marks little-endian data.
    f << "Pf\n" << img.width << " " << img.height << "\n-1.0\n";
    std::vector<float> row(img.width);
    for (int y = img.height - 1; y >= 0; --y) {  // PFM rows run bottom-to-top
        for (int x = 0; x < img.width; ++x) {
            const float v = img.at(x, y);
            row[x] = std::isinf(v) ? kDepthInfinityEncoding : v;
        }
        f.write(reinterpret_cast<const char*>(row.data()), row.size() * sizeof(float));
    }
    if (!f) throw std::runtime_error("short write: " + path);
}

Image1f read_pfm(const std::string& path) {
    auto f = open_in(path);
    std::string magic;
    int w = 0, h = 0;
    double scale = 0.0;
    f >> magic >> w >> h >> scale;
    if (magic != "Pf" || w <= 0 || h <= 0 || scale >= 0.0)
        throw std::runtime_error("not a little-endian grayscale PFM: " + path);
    f.get();
    Image1f img(w, h);
    std::vector<float> row(w);
    for (int y = h - 1; y >= 0; --y) {
        f.read(reinterpret_cast<char*>(row.data()), row.size() * sizeof(float));
        if (!f) throw std::runtime_error("truncated PFM: " + path);
        for (int x = 0; x < w; ++x)
            img.at(x, y) = row[x] >= kDepthInfinityEncoding
                               ? std::numeric_limits<float>::infinity()
                               : row[x];
    }
    return img;
}

}  // namespace voxwarp
