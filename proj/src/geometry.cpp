#include "voxwarp/geometry.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace voxwarp {

void CameraIntrinsics::validate() const {
    if (!(f > 0.0)) throw std::invalid_argument("intrinsics: focal length must be positive");
    if (width <= 0 || height <= 0)
        throw std::invalid_argument("intrinsics: image dimensions must be positive");
    if (!std::isfinite(cx) || !std::isfinite(cy))
        throw std::invalid_argument("intrinsics: principal point must be finite");
}

Pose Pose::inverse() const {
    Pose inv;
    inv.rotation = rotation.transposed();
    inv.translation = -(inv.rotation * translation);
    return inv;
}

void Pose::validate() const {
    const Mat3 rtr = rotation.transposed() * rotation;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            const double want = i == j ? 1.0 : 0.0;
            if (std::abs(rtr(i, j) - want) > 1e-6)
                throw std::invalid_argument("pose: rotation is not orthonormal");
        }
    if (std::abs(rotation.det() - 1.0) > 1e-6)
        throw std::invalid_argument("pose: rotation determinant is not +1");
}

Pose compose(const Pose& a, const Pose& b) {
    return {a.rotation * b.rotation, a.rotation * b.translation + a.translation};
}

Pose relative_transform(const Pose& ref, const Pose& tgt) {
    const Mat3 rt = tgt.rotation.transposed();
    return {rt * ref.rotation, rt * (ref.translation - tgt.translation)};
}

Ray generate_ray(const CameraIntrinsics& intr, const Pose& pose, const Vec2& px) {
    intr.validate();
    if (px.x < 0.0 || px.x >= intr.width || px.y < 0.0 || px.y >= intr.height)
        throw std::invalid_argument("generate_ray: pixel outside image bounds");
    const Vec3 dir_cam{(px.x - intr.cx) / intr.f, (px.y - intr.cy) / intr.f, 1.0};
    return {pose.translation, normalized(pose.rotation * dir_cam)};
}

PointCloud unproject(const std::vector<Vec3f>& color, const std::vector<float>& depth,
                     int width, int height, const CameraIntrinsics& intr) {
    intr.validate();
    if (color.size() != static_cast<size_t>(width) * height ||
        depth.size() != static_cast<size_t>(width) * height)
        throw std::invalid_argument("unproject: image size mismatch");
    PointCloud pc;
    for (int iy = 0; iy < height; ++iy) {
        for (int ix = 0; ix < width; ++ix) {
            const size_t i = static_cast<size_t>(iy) * width + ix;
            const double d = depth[i];
            if (std::isinf(d)) continue;
            if (!(d > 0.0)) throw std::invalid_argument("unproject: depth must be positive");
            const double x = ix + 0.5, y = iy + 0.5;
            pc.points.push_back({d * (x - intr.cx) / intr.f, d * (y - intr.cy) / intr.f, d});
            pc.colors.push_back(color[i]);
            pc.source_pixels.emplace_back(ix, iy);
        }
    }
    return pc;
}

PointCloud transform_points(const PointCloud& pc, const Pose& transform) {
    PointCloud out;
    out.points.reserve(pc.points.size());
    for (const Vec3& p : pc.points) out.points.push_back(transform.apply(p));
    out.colors = pc.colors;
    out.source_pixels = pc.source_pixels;
    return out;
}

ProjectionResult project(const PointCloud& pc, const CameraIntrinsics& intr, double z_near) {
    intr.validate();
    ProjectionResult res;
    res.points.reserve(pc.points.size());
    for (size_t i = 0; i < pc.points.size(); ++i) {
        const Vec3& p = pc.points[i];
        if (p.z <= z_near) {
            ++res.dropped;
            continue;
        }
        const Vec2 px{intr.f * p.x / p.z + intr.cx, intr.f * p.y / p.z + intr.cy};
        if (px.x < 0.0 || px.x >= intr.width || px.y < 0.0 || px.y >= intr.height) {
            ++res.dropped;
            continue;
        }
        res.points.push_back({px, p.z, pc.colors[i], static_cast<int64_t>(i)});
    }
    return res;
}

double ray_angle(const Vec3& a, const Vec3& b) {
    const double na = norm(a), nb = norm(b);
    if (na == 0.0 || nb == 0.0) throw std::invalid_argument("ray_angle: zero-length direction");
    double c = dot(a, b) / (na * nb);
    c = c > 1.0 ? 1.0 : (c < -1.0 ? -1.0 : c);
    return std::acos(c);
}

Pose pose_from_row_major(const double m[12]) {
    Pose p;
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) p.rotation(r, c) = m[4 * r + c];
    }
    p.translation = {m[3], m[7], m[11]};
    p.validate();
    return p;
}

void pose_to_row_major(const Pose& p, double out[12]) {
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) out[4 * r + c] = p.rotation(r, c);
        out[4 * r + 3] = (r == 0 ? p.translation.x : (r == 1 ? p.translation.y : p.translation.z));
    }
}

}  // namespace voxwarp
