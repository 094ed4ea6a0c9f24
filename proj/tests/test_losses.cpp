// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "doctest.h"
#include "procam/losses.hpp"
#include "procam/rng.hpp"

using namespace procam;

namespace {

struct Fixture {
    FieldSet fields;
    RayRecord rec;
    LossWeights w;
    BatchNorms norms;

    Fixture() {
        AABB box{{-1, -1, -1}, {1, 1, 1}};
        fields = FieldSet::create(box, 6, 4, 4);
        Rng rng(77);
        for (auto& v : fields.density.data) v += rng.uniform(-0.8, 0.8);

        rec.ray = {{0, 0, -3}, {0, 0, 1}};
        rec.hit_box = true;
        rec.near = 2.0;
        rec.far = 4.0;
        real tau = 1.0;
        int n = 6;
        for (int i = 0; i < n; ++i) {
            SampleRec s;
            s.t = rec.near + (i + 0.5) / n * (rec.far - rec.near);
            s.p = rec.ray.origin + rec.ray.dir * s.t;
            s.alpha = rng.uniform(0.05, 0.4);
            s.weight = s.alpha * tau;
            tau *= 1 - s.alpha;
            s.tau = tau;
            s.tau_hat = clamp01(tau + rng.uniform(-0.2, 0.2));
            s.n = normalized(Vec3{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)});
            rec.samples.push_back(s);
        }
        rec.tau_end = tau;
        rec.opacity = 1 - tau;
        rec.color = {0.4, 0.2, 0.7};

        w.w_img = 1.3;
        w.w_bg = 0.8;
        w.w_tr = 0.25;
        w.w_n1 = 0.05;
        w.w_n2 = 0.15;
        w.w_fog = 0.02;
        w.b = 1.4;
        norms = BatchNorms::make(10, 6, 16, 6);
    }
};

}  // namespace

TEST_CASE("image term is the squared error over the fixed pixel budget") {
    Fixture fx;
    LossFlags f{};
    f.bg = f.tr = f.normals = f.fog = false;
    Vec3 gt{0.1, 0.5, 0.6};
    RayAdjoints adj;
    LossTerms t = ray_loss(fx.fields, fx.rec, gt, true, fx.w, f, fx.norms, &adj);
    Vec3 e = fx.rec.color - gt;
    CHECK(std::abs(t.img - dot(e, e) / fx.norms.img) < 1e-12);
    for (int c = 0; c < 3; ++c)
        CHECK(std::abs(adj.d_color[c] - 2 * e[c] * fx.w.w_img / fx.norms.img) < 1e-12);
    // outside the mask the image term vanishes
    t = ray_loss(fx.fields, fx.rec, gt, false, fx.w, f, fx.norms, &adj);
    CHECK(t.img == 0.0);
    CHECK(max_abs(adj.d_color) == 0.0);
}

TEST_CASE("background term drives opacity to zero off-mask only") {
    Fixture fx;
    LossFlags f{};
    f.img = f.tr = f.normals = f.fog = false;
    RayAdjoints adj;
    LossTerms t = ray_loss(fx.fields, fx.rec, {0, 0, 0}, false, fx.w, f, fx.norms, &adj);
    real op = fx.rec.opacity;
    CHECK(std::abs(t.bg - op * op / fx.norms.bg) < 1e-12);
    CHECK(std::abs(adj.d_tau_end - (-2 * op * fx.w.w_bg / fx.norms.bg)) < 1e-12);
    t = ray_loss(fx.fields, fx.rec, {0, 0, 0}, true, fx.w, f, fx.norms, &adj);
    CHECK(t.bg == 0.0);
    CHECK(adj.d_tau_end == 0.0);
}

TEST_CASE("distillation term: squared gap with a detached target") {
    Fixture fx;
    LossFlags f{};
    f.img = f.bg = f.normals = f.fog = false;
    RayAdjoints adj;
    LossTerms t = ray_loss(fx.fields, fx.rec, {0, 0, 0}, true, fx.w, f, fx.norms, &adj);
    real expect = 0;
    for (std::size_t i = 0; i < fx.rec.samples.size(); ++i) {
        real d = fx.rec.samples[i].tau_hat - fx.rec.samples[i].tau;
        expect += d * d / fx.norms.samples;
        CHECK(std::abs(adj.d_tau_hat[i] - 2 * d * fx.w.w_tr / fx.norms.samples) < 1e-12);
        // the marched value is a constant target: no adjoint flows into tau
        // through this term (fog is off here)
        CHECK(adj.d_tau[i] == 0.0);
    }
    CHECK(std::abs(t.tr - expect) < 1e-12);
}

TEST_CASE("fog term and its per-sample adjoint") {
    Fixture fx;
    LossFlags f{};
    f.img = f.bg = f.tr = f.normals = false;
    RayAdjoints adj;
    LossTerms t = ray_loss(fx.fields, fx.rec, {0, 0, 0}, true, fx.w, f, fx.norms, &adj);
    real expect = 0;
    for (std::size_t i = 0; i < fx.rec.samples.size(); ++i) {
        real tau = fx.rec.samples[i].tau;
        expect += -fx.w.b * (tau * tau - tau) / fx.norms.samples;
        CHECK(std::abs(adj.d_tau[i] -
                       (-fx.w.w_fog * fx.w.b * (2 * tau - 1) / fx.norms.samples)) < 1e-12);
    }
    CHECK(std::abs(t.fog - expect) < 1e-12);
    // the parabola is maximal at tau = 1/2 and zero at the endpoints
    std::vector<real> ends{0.0, 1.0}, mid{0.5};
    CHECK(std::abs(loss_fog_term(ends, fx.w.b)) < 1e-12);
    CHECK(loss_fog_term(mid, fx.w.b) == doctest::Approx(fx.w.b * 0.25));
}

TEST_CASE("normal terms match a direct reimplementation") {
    Fixture fx;
    LossFlags f{};
    f.img = f.bg = f.tr = f.fog = false;
    RayAdjoints adj;
    LossTerms t = ray_loss(fx.fields, fx.rec, {0, 0, 0}, true, fx.w, f, fx.norms, &adj);

    real n1 = 0;
    Vec3 acc{0, 0, 0};
    std::vector<Vec3> want(fx.rec.samples.size(), Vec3{0, 0, 0});
    for (std::size_t i = 0; i < fx.rec.samples.size(); ++i) {
        const SampleRec& s = fx.rec.samples[i];
        acc += s.n * s.weight;
        auto nh = fx.fields.density_gradient_normal(s.p);
        if (nh) {
            Vec3 d = s.n - *nh;
            n1 += s.weight * dot(d, d) / fx.norms.samples;
            want[i] += d * (2 * s.weight * fx.w.w_n1 / fx.norms.samples);
        }
    }
    real back = dot(acc, fx.rec.ray.dir);
    real n2 = back > 0 ? back / fx.norms.rays : 0.0;
    if (back > 0)
        for (std::size_t i = 0; i < fx.rec.samples.size(); ++i)
            want[i] += fx.rec.ray.dir * (fx.rec.samples[i].weight * fx.w.w_n2 / fx.norms.rays);

    CHECK(std::abs(t.n1 - n1) < 1e-12);
    CHECK(std::abs(t.n2 - n2) < 1e-12);
    for (std::size_t i = 0; i < want.size(); ++i)
        CHECK(norm(adj.d_normal[i] - want[i]) < 1e-12);
}

TEST_CASE("orientation hinge is one-sided") {
    Fixture fx;
    // forward-facing normals (opposing the ray): no n2 penalty
    for (auto& s : fx.rec.samples) s.n = {0, 0, -1};
    LossFlags f{};
    f.img = f.bg = f.tr = f.fog = false;
    RayAdjoints adj;
    LossTerms t = ray_loss(fx.fields, fx.rec, {0, 0, 0}, true, fx.w, f, fx.norms, &adj);
    CHECK(t.n2 == 0.0);
    // back-facing normals: linear penalty
    for (auto& s : fx.rec.samples) s.n = {0, 0, 1};
    t = ray_loss(fx.fields, fx.rec, {0, 0, 0}, true, fx.w, f, fx.norms, &adj);
    real wsum = 0;
    for (auto& s : fx.rec.samples) wsum += s.weight;
    CHECK(t.n2 == doctest::Approx(wsum / fx.norms.rays));
}

TEST_CASE("total applies the weights; missed rays only carry pixel terms") {
    Fixture fx;
    LossFlags f;
    RayAdjoints adj;
    LossTerms t = ray_loss(fx.fields, fx.rec, {0.2, 0.2, 0.2}, true, fx.w, f, fx.norms, &adj);
    real want = fx.w.w_img * t.img + fx.w.w_bg * t.bg + fx.w.w_tr * t.tr +
                fx.w.w_n1 * t.n1 + fx.w.w_n2 * t.n2 + fx.w.w_fog * t.fog;
    CHECK(t.total(fx.w) == doctest::Approx(want));

    RayRecord miss;
    miss.ray = fx.rec.ray;
    miss.hit_box = false;
    miss.tau_end = 1.0;
    miss.opacity = 0.0;
    LossTerms tm = ray_loss(fx.fields, miss, {0, 0, 0}, false, fx.w, f, fx.norms, &adj);
    CHECK(tm.tr == 0.0);
    CHECK(tm.n1 == 0.0);
    CHECK(tm.fog == 0.0);
    CHECK(tm.bg == 0.0);  // fully transparent: no background penalty either
}

TEST_CASE("batch norms use fixed denominators with safe floors") {
    BatchNorms n = BatchNorms::make(10, 6, 16, 64);
    CHECK(n.img == 30.0);
    CHECK(n.bg == 6.0);
    CHECK(n.rays == 16.0);
    CHECK(n.samples == 16.0 * 64.0);
    BatchNorms z = BatchNorms::make(0, 0, 0, 0);
    CHECK(z.img == 3.0);
    CHECK(z.bg == 1.0);
    CHECK(z.rays == 1.0);
    CHECK(z.samples == 1.0);
}

TEST_CASE("standalone means match hand sums") {
    std::vector<Vec3> r{{0.1, 0.2, 0.3}, {0.5, 0.5, 0.5}};
    std::vector<Vec3> c{{0.0, 0.2, 0.3}, {0.5, 0.1, 0.5}};
    CHECK(loss_img_mse(r, c) == doctest::Approx((0.01 + 0.16) / 6.0));
    std::vector<real> th{0.2, 0.9}, ta{0.1, 0.7};
    CHECK(loss_tr_term(th, ta) == doctest::Approx((0.01 + 0.04) / 2.0));
}
