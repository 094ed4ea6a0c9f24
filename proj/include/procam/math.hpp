// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

namespace procam {

using real = double;

struct Vec2 {
    real x = 0, y = 0;
};

struct Vec3 {
    real x = 0, y = 0, z = 0;

    real& operator[](int i) { return (&x)[i]; }
    real operator[](int i) const { return (&x)[i]; }

    Vec3 operator-() const { return {-x, -y, -z}; }
    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(real s) const { return {x * s, y * s, z * s}; }
    Vec3 operator/(real s) const { return {x / s, y / s, z / s}; }
    Vec3 operator*(const Vec3& o) const { return {x * o.x, y * o.y, z * o.z}; }
    Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
    Vec3& operator*=(real s) { x *= s; y *= s; z *= s; return *this; }
};

inline Vec3 operator*(real s, const Vec3& v) { return v * s; }

inline real dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline real norm(const Vec3& v) { return std::sqrt(dot(v, v)); }
inline real norm2(const Vec3& v) { return dot(v, v); }
inline Vec3 normalized(const Vec3& v, real eps = 1e-12) {
    real n = norm(v);
    return n > eps ? v / n : Vec3{0, 0, 0};
}
inline Vec3 cwise_min(const Vec3& a, const Vec3& b) {
    return {std::min(a.x, b.x), std::min(a.y, b.y), std::min(a.z, b.z)};
}
inline Vec3 cwise_max(const Vec3& a, const Vec3& b) {
    return {std::max(a.x, b.x), std::max(a.y, b.y), std::max(a.z, b.z)};
}
inline real max_abs(const Vec3& v) {
    return std::max({std::abs(v.x), std::abs(v.y), std::abs(v.z)});
}
inline bool all_finite(const Vec3& v) {
    return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z);
}

// Backward of y = x / |x|.  Given dL/dy returns dL/dx.
inline Vec3 normalize_backward(const Vec3& x, const Vec3& dy, real eps = 1e-12) {
    real n = norm(x);
    if (n <= eps) return {0, 0, 0};
    Vec3 y = x / n;
    return (dy - y * dot(y, dy)) / n;
}

// Row-major 3x3 matrix.
struct Mat3 {
    std::array<real, 9> m{};

    real& operator()(int r, int c) { return m[3 * r + c]; }
    real operator()(int r, int c) const { return m[3 * r + c]; }

    static Mat3 identity() {
        Mat3 I;
        I.m = {1, 0, 0, 0, 1, 0, 0, 0, 1};
        return I;
    }

    Vec3 operator*(const Vec3& v) const {
        return {m[0] * v.x + m[1] * v.y + m[2] * v.z,
                m[3] * v.x + m[4] * v.y + m[5] * v.z,
                m[6] * v.x + m[7] * v.y + m[8] * v.z};
    }
    Mat3 operator*(const Mat3& o) const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                real s = 0;
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
    real trace() const { return m[0] + m[4] + m[8]; }
};

// Transpose-multiply: R^T v.
inline Vec3 tmul(const Mat3& R, const Vec3& v) {
    return {R.m[0] * v.x + R.m[3] * v.y + R.m[6] * v.z,
            R.m[1] * v.x + R.m[4] * v.y + R.m[7] * v.z,
            R.m[2] * v.x + R.m[5] * v.y + R.m[8] * v.z};
}

// Unit quaternion, scalar-first.
struct Quat {
    real w = 1, x = 0, y = 0, z = 0;

    Quat normalized() const {
        real n = std::sqrt(w * w + x * x + y * y + z * z);
        return {w / n, x / n, y / n, z / n};
    }
    Quat operator*(const Quat& o) const {
        return {w * o.w - x * o.x - y * o.y - z * o.z,
                w * o.x + x * o.w + y * o.z - z * o.y,
                w * o.y - x * o.z + y * o.w + z * o.x,
                w * o.z + x * o.y - y * o.x + z * o.w};
    }
    Quat conj() const { return {w, -x, -y, -z}; }

    Mat3 to_matrix() const {
        Mat3 R;
        real xx = x * x, yy = y * y, zz = z * z;
        real xy = x * y, xz = x * z, yz = y * z;
        real wx = w * x, wy = w * y, wz = w * z;
        R.m = {1 - 2 * (yy + zz), 2 * (xy - wz),     2 * (xz + wy),
               2 * (xy + wz),     1 - 2 * (xx + zz), 2 * (yz - wx),
               2 * (xz - wy),     2 * (yz + wx),     1 - 2 * (xx + yy)};
        return R;
    }
};

// exp of an axis-angle 3-vector, as a quaternion.
inline Quat quat_exp(const Vec3& w) {
    real th = norm(w);
    if (th < 1e-12) return Quat{1, 0.5 * w.x, 0.5 * w.y, 0.5 * w.z}.normalized();
    real s = std::sin(0.5 * th) / th;
    return {std::cos(0.5 * th), s * w.x, s * w.y, s * w.z};
}

inline Quat quat_from_axis_angle(const Vec3& axis, real angle) {
    return quat_exp(normalized(axis) * angle);
}

// Rotation from a matrix (assumed orthonormal).
Quat quat_from_matrix(const Mat3& R);

// slerp between unit quaternions, shortest arc.
Quat slerp(const Quat& a, const Quat& b, real t);

// Geodesic angle between rotations, arccos((tr(PQ^T)-1)/2), in [0, pi].
real rotation_distance(const Mat3& P, const Mat3& Q);
real rotation_distance(const Quat& p, const Quat& q);

// Skew-symmetric cross-product matrix [v]x.
inline Mat3 skew(const Vec3& v) {
    Mat3 S;
    S.m = {0, -v.z, v.y, v.z, 0, -v.x, -v.y, v.x, 0};
    return S;
}

struct AABB {
    Vec3 lo{-1, -1, -1};
    Vec3 hi{1, 1, 1};

    bool contains(const Vec3& p) const {
        return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y &&
               p.z >= lo.z && p.z <= hi.z;
    }
    Vec3 extent() const { return hi - lo; }
    Vec3 center() const { return (lo + hi) * 0.5; }
    real diameter() const { return norm(extent()); }
};

// Ray/box intersection.  On hit fills [t0, t1] (clamped to tmin) and the axis
// of the entry and exit faces; returns false on miss.
bool intersect_aabb(const AABB& box, const Vec3& o, const Vec3& d, real tmin,
                    real& t0, real& t1, int* entry_axis = nullptr, int* exit_axis = nullptr);

// Activations with stable tails.
inline real softplus(real x) { return x > 30 ? x : std::log1p(std::exp(x)); }
inline real softplus_deriv(real x) { return 1.0 / (1.0 + std::exp(-x)); }
inline real inv_softplus(real y) { return y > 30 ? y : std::log(std::expm1(y)); }
inline real sigmoid(real x) {
    return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}
inline real sigmoid_deriv(real x) {
    real s = sigmoid(x);
    return s * (1 - s);
}
inline real logit(real y) { return std::log(y / (1 - y)); }

inline real clamp01(real v) { return v < 0 ? 0 : (v > 1 ? 1 : v); }
inline real deg2rad(real d) { return d * M_PI / 180.0; }
inline real rad2deg(real r) { return r * 180.0 / M_PI; }

}  // namespace procam
