#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "voxwarp/math.hpp"

namespace voxwarp {

// Minimum camera-space depth accepted by projection; points at or behind
// this plane are dropped.
inline constexpr double kProjectionZNear = 1e-4;

// Pinhole camera; square pixels, no distortion. Pixel (ix, iy) has its
// center at continuous coordinates (ix + 0.5, iy + 0.5).
struct CameraIntrinsics {
    double f = 0.0;
    double cx = 0.0;
    double cy = 0.0;
    int width = 0;
    int height = 0;

    void validate() const;  // throws std::invalid_argument
};

// Camera-to-world rigid transform: x_world = rotation * x_camera + translation.
// The camera looks down +Z in its own frame.
struct Pose {
    Mat3 rotation;
    Vec3 translation;

    Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
    Pose inverse() const;
    void validate() const;  // orthonormality and det=+1 within 1e-6
};

// compose(a, b): first apply b, then a.
Pose compose(const Pose& a, const Pose& b);

// Transform mapping ref-camera coordinates into tgt-camera coordinates.
// Built as tgt^-1 * ref with the translations subtracted before rotating,
// so relative_transform(p, p) has an exactly zero translation.
Pose relative_transform(const Pose& ref, const Pose& tgt);

struct Ray {
    Vec3 origin;
    Vec3 direction;  // unit length
};

// Points in some camera frame with their colors and originating pixels.
struct PointCloud {
    std::vector<Vec3> points;
    std::vector<Vec3f> colors;
    std::vector<std::pair<int, int>> source_pixels;  // (x, y)

    size_t size() const { return points.size(); }
};

struct ProjectedPoint {
    Vec2 pixel;      // continuous image coordinates
    double depth;    // camera-space Z
    Vec3f color;
    int64_t source_index;  // index into the input cloud
};

struct ProjectionResult {
    std::vector<ProjectedPoint> points;
    int64_t dropped = 0;  // behind z_near or outside image bounds
};

// World-space ray through continuous pixel coordinates `px`.
// Throws std::invalid_argument if px lies outside [0,W)x[0,H).
Ray generate_ray(const CameraIntrinsics& intr, const Pose& pose, const Vec2& px);

// Lift every finite-depth pixel into camera space:
// point = (D*(x-cx)/f, D*(y-cy)/f, D) with (x, y) at the pixel center and
// D the camera-space Z stored in the depth map. Infinite depths are
// skipped; negative depths throw std::invalid_argument.
PointCloud unproject(const std::vector<Vec3f>& color, const std::vector<float>& depth,
                     int width, int height, const CameraIntrinsics& intr);

// Apply a rigid transform to every point; colors and source pixels carry over.
PointCloud transform_points(const PointCloud& pc, const Pose& transform);

// Perspective projection: pixel = (f*X/Z + cx, f*Y/Z + cy), depth = Z.
// Points with Z <= z_near or landing outside the image are dropped and counted.
ProjectionResult project(const PointCloud& pc, const CameraIntrinsics& intr,
                         double z_near = kProjectionZNear);

// Angle in radians between two directions (need not be normalized).
double ray_angle(const Vec3& a, const Vec3& b);

// Parse/serialize a pose as 12 numbers, row-major 3x4 [R | t].
Pose pose_from_row_major(const double m[12]);
void pose_to_row_major(const Pose& p, double out[12]);

}  // namespace voxwarp
