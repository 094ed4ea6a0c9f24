// SPDX-License-Identifier: Apache-2.0
#include "procam/math.hpp"

#include <algorithm>

namespace procam {

Quat quat_from_matrix(const Mat3& R) {
    Quat q;
    real tr = R.trace();
    if (tr > 0) {
        real s = std::sqrt(tr + 1.0) * 2;
        q.w = 0.25 * s;
        q.x = (R(2, 1) - R(1, 2)) / s;
        q.y = (R(0, 2) - R(2, 0)) / s;
        q.z = (R(1, 0) - R(0, 1)) / s;
    } else if (R(0, 0) > R(1, 1) && R(0, 0) > R(2, 2)) {
        real s = std::sqrt(1.0 + R(0, 0) - R(1, 1) - R(2, 2)) * 2;
        q.w = (R(2, 1) - R(1, 2)) / s;
        q.x = 0.25 * s;
        q.y = (R(0, 1) + R(1, 0)) / s;
        q.z = (R(0, 2) + R(2, 0)) / s;
    } else if (R(1, 1) > R(2, 2)) {
        real s = std::sqrt(1.0 + R(1, 1) - R(0, 0) - R(2, 2)) * 2;
        q.w = (R(0, 2) - R(2, 0)) / s;
        q.x = (R(0, 1) + R(1, 0)) / s;
        q.y = 0.25 * s;
        q.z = (R(1, 2) + R(2, 1)) / s;
    } else {
        real s = std::sqrt(1.0 + R(2, 2) - R(0, 0) - R(1, 1)) * 2;
        q.w = (R(1, 0) - R(0, 1)) / s;
        q.x = (R(0, 2) + R(2, 0)) / s;
        q.y = (R(1, 2) + R(2, 1)) / s;
        q.z = 0.25 * s;
    }
    return q.normalized();
}

Quat slerp(const Quat& a, const Quat& b_in, real t) {
    Quat b = b_in;
    real d = a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z;
    if (d < 0) {
        b = {-b.w, -b.x, -b.y, -b.z};
        d = -d;
    }
    if (d > 0.9995) {
        Quat r{a.w + t * (b.w - a.w), a.x + t * (b.x - a.x), a.y + t * (b.y - a.y),
               a.z + t * (b.z - a.z)};
        return r.normalized();
    }
    real th = std::acos(std::clamp(d, real(-1), real(1)));
    real sa = std::sin((1 - t) * th) / std::sin(th);
    real sb = std::sin(t * th) / std::sin(th);
    return Quat{sa * a.w + sb * b.w, sa * a.x + sb * b.x, sa * a.y + sb * b.y,
                sa * a.z + sb * b.z}
        .normalized();
}

real rotation_distance(const Mat3& P, const Mat3& Q) {
    Mat3 R = P * Q.transposed();
    real c = std::clamp((R.trace() - 1.0) * 0.5, real(-1), real(1));
    return std::acos(c);
}

real rotation_distance(const Quat& p, const Quat& q) {
    return rotation_distance(p.to_matrix(), q.to_matrix());
}

bool intersect_aabb(const AABB& box, const Vec3& o, const Vec3& d, real tmin,
                    real& t0, real& t1, int* entry_axis, int* exit_axis) {
    real lo = tmin, hi = std::numeric_limits<real>::infinity();
    int ea = -1, xa = -1;
    for (int ax = 0; ax < 3; ++ax) {
        real dv = d[ax];
        if (std::abs(dv) < 1e-15) {
            if (o[ax] < box.lo[ax] || o[ax] > box.hi[ax]) return false;
            continue;
        }
        real inv = 1.0 / dv;
        real ta = (box.lo[ax] - o[ax]) * inv;
        real tb = (box.hi[ax] - o[ax]) * inv;
        if (ta > tb) std::swap(ta, tb);
        if (ta > lo) { lo = ta; ea = ax; }
        if (tb < hi) { hi = tb; xa = ax; }
        if (lo > hi) return false;
    }
    t0 = lo;
    t1 = hi;
    if (entry_axis) *entry_axis = ea;
    if (exit_axis) *exit_axis = xa;
    return t1 > t0;
}

}  // namespace procam
