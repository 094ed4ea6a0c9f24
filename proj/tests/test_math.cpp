#include "doctest.h"
#include "procam/math.hpp"
#include "procam/rng.hpp"

using namespace procam;

TEST_CASE("activation inverses") {
    for (real y : {0.01, 0.5, 1.0, 5.0, 40.0}) {
        CHECK(softplus(inv_softplus(y)) == doctest::Approx(y).epsilon(1e-12));
    }
    for (real y : {0.01, 0.5, 0.99}) {
        CHECK(sigmoid(logit(y)) == doctest::Approx(y).epsilon(1e-12));
    }
    // derivative of softplus by finite differences
    for (real x : {-3.0, 0.0, 2.5}) {
        real h = 1e-6;
        real fd = (softplus(x + h) - softplus(x - h)) / (2 * h);
        CHECK(softplus_deriv(x) == doctest::Approx(fd).epsilon(1e-8));
    }
}

TEST_CASE("normalize_backward matches finite differences") {
    Rng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        Vec3 x = rng.unit_vector() * rng.uniform(0.3, 3.0);
        Vec3 dy{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
        Vec3 g = normalize_backward(x, dy);
        real h = 1e-6;
        for (int k = 0; k < 3; ++k) {
            Vec3 xp = x, xm = x;
            xp[k] += h;
            xm[k] -= h;
            real fd = (dot(normalized(xp), dy) - dot(normalized(xm), dy)) / (2 * h);
            CHECK(g[k] == doctest::Approx(fd).epsilon(1e-5));
        }
    }
}

TEST_CASE("quaternion round trips") {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        Vec3 w = rng.unit_vector() * rng.uniform(0, 3.0);
        Quat q = quat_exp(w);
        Mat3 R = q.to_matrix();
        Quat q2 = quat_from_matrix(R);
        CHECK(rotation_distance(q, q2) < 1e-6);  // arccos loses bits near 0
        // orthonormality
        Mat3 I = R * R.transposed();
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                CHECK(I(i, j) == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-12));
    }
}

TEST_CASE("rotation_distance known values") {
    Quat id;
    Quat r90 = quat_from_axis_angle({0, 0, 1}, M_PI / 2);
    CHECK(rotation_distance(id, id) == doctest::Approx(0.0));
    CHECK(rotation_distance(id, r90) == doctest::Approx(M_PI / 2).epsilon(1e-12));
    Quat r180 = quat_from_axis_angle({1, 0, 0}, M_PI);
    CHECK(rotation_distance(id, r180) == doctest::Approx(M_PI).epsilon(1e-9));
}

TEST_CASE("quat_exp composes like rotations") {
    Vec3 w{0.3, -0.2, 0.5};
    Mat3 R = quat_exp(w).to_matrix();
    // R v should rotate by |w| about w/|w| (Rodrigues)
    Vec3 v{0.2, 0.9, -0.4};
    real th = norm(w);
    Vec3 k = w / th;
    Vec3 rod = v * std::cos(th) + cross(k, v) * std::sin(th) +
               k * dot(k, v) * (1 - std::cos(th));
    Vec3 got = R * v;
    CHECK(norm(got - rod) < 1e-12);
}

TEST_CASE("ray box intersection vs sampling oracle") {
    AABB box{{-1, -0.5, 0}, {1, 0.5, 2}};
    Rng rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        Vec3 o{rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3)};
        Vec3 d = rng.unit_vector();
        real t0, t1;
        int ea, xa;
        bool hit = intersect_aabb(box, o, d, 1e-6, t0, t1, &ea, &xa);
        // dense sampling oracle
        bool any = false;
        real lo = 1e9, hi = -1e9;
        for (int i = 0; i <= 4000; ++i) {
            real t = 1e-6 + i * (10.0 / 4000);
            if (box.contains(o + d * t)) {
                any = true;
                lo = std::min(lo, t);
                hi = std::max(hi, t);
            }
        }
        CHECK(hit == any);
        if (hit && any) {
            CHECK(std::abs(t0 - lo) < 0.01);
            CHECK(std::abs(t1 - hi) < 0.01);
            CHECK(t1 > t0);
            // entry face axis: the entry point lies on that face
            if (ea >= 0) {
                Vec3 pe = o + d * t0;
                real f0 = std::abs(pe[ea] - box.lo[ea]);
                real f1 = std::abs(pe[ea] - box.hi[ea]);
                CHECK(std::min(f0, f1) < 1e-9);
            }
        }
    }
}

TEST_CASE("slerp endpoints and midpoint") {
    Quat a = quat_from_axis_angle({0, 1, 0}, 0.2);
    Quat b = quat_from_axis_angle({0, 1, 0}, 1.0);
    CHECK(rotation_distance(slerp(a, b, 0.0), a) < 1e-9);
    CHECK(rotation_distance(slerp(a, b, 1.0), b) < 1e-9);
    Quat mid = quat_from_axis_angle({0, 1, 0}, 0.6);
    CHECK(rotation_distance(slerp(a, b, 0.5), mid) < 1e-9);
}
