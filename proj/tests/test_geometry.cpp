#include "doctest.h"
#include "procam/geometry.hpp"
#include "procam/rng.hpp"

using namespace procam;

namespace {

Pinhole make_camera(Rng& rng) {
    Pinhole c;
    c.width = 64;
    c.height = 48;
    c.fx = c.fy = 70;
    c.cx = 32;
    c.cy = 24;
    c.rot = quat_exp(rng.unit_vector() * rng.uniform(0, 2.5));
    c.trans = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(2, 4)};
    return c;
}

}  // namespace

TEST_CASE("project / back_project / ray are consistent") {
    Rng rng(21);
    for (int trial = 0; trial < 40; ++trial) {
        Pinhole cam = make_camera(rng);
        Vec3 p{rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)};
        auto pr = cam.project(p);
        if (!pr.in_front()) continue;
        Vec3 back = cam.back_project(pr.pix, pr.depth);
        CHECK(norm(back - p) < 1e-9);

        // the ray through the projected pixel passes through the point
        Ray r = cam.ray(pr.pix.x - 0.5, pr.pix.y - 0.5);
        Vec3 to_p = p - r.origin;
        CHECK(norm(cross(to_p, r.dir)) / norm(to_p) < 1e-9);
        CHECK(dot(to_p, r.dir) > 0);
        CHECK(norm(r.origin - cam.center()) < 1e-12);
    }
}

TEST_CASE("json round trip") {
    Rng rng(22);
    Pinhole cam = make_camera(rng);
    Pinhole back = Pinhole::from_json(cam.to_json());
    CHECK(back.fx == doctest::Approx(cam.fx));
    CHECK(back.fy == doctest::Approx(cam.fy));
    CHECK(back.cx == doctest::Approx(cam.cx));
    CHECK(back.cy == doctest::Approx(cam.cy));
    CHECK(back.width == cam.width);
    CHECK(back.height == cam.height);
    CHECK(rotation_distance(back.rot, cam.rot) < 1e-12);
    CHECK(norm(back.trans - cam.trans) < 1e-12);
}

TEST_CASE("pose_perturb rotates by the requested angle and moves the center") {
    Rng rng(23);
    for (int trial = 0; trial < 20; ++trial) {
        Pinhole cam = make_camera(rng);
        real ang_deg = rng.uniform(0.5, 10.0);
        real shift = rng.uniform(0.01, 0.3);
        Pinhole p = pose_perturb(cam, ang_deg, shift, rng);
        CHECK(rad2deg(rotation_distance(p.rot, cam.rot)) == doctest::Approx(ang_deg).epsilon(1e-9));
        CHECK(norm(p.center() - cam.center()) == doctest::Approx(shift).epsilon(1e-9));
    }
}

TEST_CASE("projector irradiance: gamma, gain, frustum") {
    Image pat(16, 16, 3);
    pat.fill(0.25);
    ProjectorDevice dev;
    dev.optics.width = 16;
    dev.optics.height = 16;
    dev.optics.fx = dev.optics.fy = 16;
    dev.optics.cx = dev.optics.cy = 8;
    dev.optics.rot = Quat{};           // identity: looks down +z
    dev.optics.trans = {0, 0, 2};      // center at (0,0,-2)
    dev.pattern = &pat;
    dev.log_gamma = std::log(2.0);     // gamma = 2
    dev.log_gain = {std::log(3.0), 0.0, std::log(0.5)};

    Vec3 on_axis{0, 0, 0};  // depth 2, projects to the principal point
    Vec3 L = projector_irradiance(dev, on_axis);
    CHECK(L.x == doctest::Approx(3.0 * 0.0625).epsilon(1e-12));
    CHECK(L.y == doctest::Approx(1.0 * 0.0625).epsilon(1e-12));
    CHECK(L.z == doctest::Approx(0.5 * 0.0625).epsilon(1e-12));

    // behind the projector: exactly zero
    Vec3 behind{0, 0, -3};
    Vec3 Lb = projector_irradiance(dev, behind);
    CHECK(Lb.x == 0.0);
    CHECK(Lb.y == 0.0);
    CHECK(Lb.z == 0.0);

    // far outside the frustum: exactly zero
    Vec3 out{50, 0, 0};
    Vec3 Lo = projector_irradiance(dev, out);
    CHECK(max_abs(Lo) == 0.0);
}
