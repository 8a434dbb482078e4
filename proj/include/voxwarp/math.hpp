#pragma once

#include <array>
#include <cmath>

namespace voxwarp {

struct Vec2 {
    double x = 0.0, y = 0.0;
};

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    Vec3 operator-() const { return {-x, -y, -z}; }
    double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }
inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }
inline Vec3 normalized(const Vec3& v) { return v / norm(v); }

// Single-precision triple for image/feature data (rendering math is fp32).
struct Vec3f {
    float x = 0.0f, y = 0.0f, z = 0.0f;

    Vec3f operator+(const Vec3f& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3f operator-(const Vec3f& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3f operator*(float s) const { return {x * s, y * s, z * s}; }
    bool operator==(const Vec3f& o) const { return x == o.x && y == o.y && z == o.z; }
};

// Row-major 3x3 matrix; enough linear algebra for rigid transforms.
struct Mat3 {
    std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

    static Mat3 identity() { return {}; }

    double operator()(int r, int c) const { return m[3 * r + c]; }
    double& operator()(int r, int c) { return m[3 * r + c]; }

    Vec3 operator*(const Vec3& v) const {
        return {m[0] * v.x + m[1] * v.y + m[2] * v.z,
                m[3] * v.x + m[4] * v.y + m[5] * v.z,
                m[6] * v.x + m[7] * v.y + m[8] * v.z};
    }

    Mat3 operator*(const Mat3& o) const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double s = 0.0;
                for (int k = 0; k < 3; ++k) s += (*this)(i, k) * o(k, j);
                r(i, j) = s;
            }
        return r;
    }

    Mat3 transposed() const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) r(i, j) = (*this)(j, i);
        return r;
    }

    double det() const {
        return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
               m[2] * (m[3] * m[7] - m[4] * m[6]);
    }
};

// Rotation about a unit axis by `angle` radians (Rodrigues form).
inline Mat3 axis_angle_rotation(const Vec3& axis, double angle) {
    const double c = std::cos(angle), s = std::sin(angle), t = 1.0 - c;
    const double x = axis.x, y = axis.y, z = axis.z;
    Mat3 r;
    r.m = {t * x * x + c,     t * x * y - s * z, t * x * z + s * y,
           t * x * y + s * z, t * y * y + c,     t * y * z - s * x,
           t * x * z - s * y, t * y * z + s * x, t * z * z + c};
    return r;
}

// Axis-angle logarithm of a rotation matrix. Returns axis * angle; the zero
// vector for the identity rotation.
inline Vec3 rotation_log(const Mat3& r) {
    const double tr = r(0, 0) + r(1, 1) + r(2, 2);
    double c = (tr - 1.0) * 0.5;
    c = c > 1.0 ? 1.0 : (c < -1.0 ? -1.0 : c);
    const double angle = std::acos(c);
    if (angle < 1e-12) return {0, 0, 0};
    Vec3 v{r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1)};
    const double s = norm(v);
    if (s < 1e-12) {
        // Angle near pi: fall back to the dominant diagonal column.
        int i = 0;
        if (r(1, 1) > r(i, i)) i = 1;
        if (r(2, 2) > r(i, i)) i = 2;
        Vec3 axis{std::sqrt(std::max(0.0, (r(0, 0) - c) / (1.0 - c))),
                  std::sqrt(std::max(0.0, (r(1, 1) - c) / (1.0 - c))),
                  std::sqrt(std::max(0.0, (r(2, 2) - c) / (1.0 - c)))};
        double* a = i == 0 ? &axis.x : (i == 1 ? &axis.y : &axis.z);
        if (*a == 0.0) *a = 1.0;
        if (r(2, 1) - r(1, 2) < 0) axis.x = -axis.x;
        if (r(0, 2) - r(2, 0) < 0) axis.y = -axis.y;
        if (r(1, 0) - r(0, 1) < 0) axis.z = -axis.z;
        return normalized(axis) * angle;
    }
    return v * (angle / s);
}

inline Mat3 rotation_exp(const Vec3& axis_times_angle) {
    const double angle = norm(axis_times_angle);
    if (angle < 1e-12) return Mat3::identity();
    return axis_angle_rotation(axis_times_angle / angle, angle);
}

inline double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

}  // namespace voxwarp
