// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "procam/brdf.hpp"
#include "procam/scenes.hpp"

using namespace procam;

namespace {

AnalyticScene single_sphere(real radius = 0.5) {
    AnalyticScene s;
    s.name = "sphere";
    s.bounds = {{-1, -1, -1}, {1, 1, 1}};
    Primitive p;
    p.kind = Primitive::kSphere;
    p.radius = radius;
    p.albedo_a = p.albedo_b = {0.6, 0.4, 0.2};
    p.rough_a = p.rough_b = 0.5;
    s.prims.push_back(p);
    return s;
}

}  // namespace

TEST_CASE("signed distances of the primitives") {
    Primitive sph;
    sph.kind = Primitive::kSphere;
    sph.center = {1, 0, 0};
    sph.radius = 0.5;
    CHECK(sph.sdf({1, 0, 0}) == doctest::Approx(-0.5));
    CHECK(sph.sdf({2, 0, 0}) == doctest::Approx(0.5));
    CHECK(std::abs(sph.sdf({1.5, 0, 0})) < 1e-12);

    Primitive box;
    box.kind = Primitive::kBox;
    box.half = {0.5, 0.25, 1.0};
    CHECK(box.sdf({0, 0, 0}) == doctest::Approx(-0.25));  // nearest face is y
    CHECK(box.sdf({1.5, 0, 0}) == doctest::Approx(1.0));
    // outside a corner: euclidean distance to the corner
    CHECK(box.sdf({1.5, 1.25, 0}) == doctest::Approx(std::sqrt(2.0)));

    Primitive tor;
    tor.kind = Primitive::kTorus;
    tor.radius = 0.6;
    tor.minor = 0.1;
    CHECK(tor.sdf({0.6, 0, 0}) == doctest::Approx(-0.1));  // on the ring
    CHECK(tor.sdf({0, 0, 0}) == doctest::Approx(0.5));
    CHECK(std::abs(tor.sdf({0.7, 0, 0})) < 1e-12);
    // rotating 90 deg about x maps local xy ring into world xz
    tor.rot = quat_from_axis_angle({1, 0, 0}, deg2rad(90));
    CHECK(tor.sdf({0.6, 0, 0}) == doctest::Approx(-0.1));
    CHECK(tor.sdf({0, 0, 0.6}) == doctest::Approx(-0.1));
    CHECK(tor.sdf({0, 0.6, 0}) == doctest::Approx(std::sqrt(2.0) * 0.6 - 0.1).epsilon(1e-6));
}

TEST_CASE("procedural materials follow local coordinates") {
    Primitive box;
    box.kind = Primitive::kBox;
    box.albedo_a = {1, 0, 0};
    box.albedo_b = {0, 1, 0};
    box.checker_scale = 2.0;  // cells of size 0.5
    Vec3 a = box.albedo_at({0.1, 0.1, 0.1});
    Vec3 b = box.albedo_at({0.6, 0.1, 0.1});  // one cell over in x
    CHECK(norm(a - b) > 0.5);
    Vec3 c = box.albedo_at({1.1, 0.1, 0.1});  // two cells: parity restored
    CHECK(norm(a - c) < 1e-12);

    box.rough_a = 0.1;
    box.rough_b = 0.9;
    box.split_x = 0.0;
    CHECK(box.rough_at({-0.2, 0, 0}) == doctest::Approx(0.1));
    CHECK(box.rough_at({0.2, 0, 0}) == doctest::Approx(0.9));
}

TEST_CASE("committed fixtures exist and reject unknown names") {
    for (const auto& n : scene_names()) {
        AnalyticScene s = make_scene(n);
        CHECK(!s.prims.empty());
        CHECK(s.bounds.extent().x > 0);
    }
    CHECK_THROWS(make_scene("nope"));
}

TEST_CASE("sphere tracing agrees with the analytic intersection") {
    AnalyticScene s = single_sphere(0.5);
    Ray ray{{0, 0, -3}, {0, 0, 1}};
    SphereTraceResult r = sphere_trace(s, ray);
    REQUIRE(r.hit);
    CHECK(std::abs(r.t - 2.5) < 1e-4);
    CHECK(std::abs(s.sdf(r.p)) < 1e-4);
    // grazing miss
    Ray miss{{0, 0.51, -3}, {0, 0, 1}};
    CHECK(!sphere_trace(s, miss).hit);
    // normals match the radial direction
    Vec3 n = s.normal(r.p);
    CHECK(norm(n - Vec3{0, 0, -1}) < 1e-3);
}

TEST_CASE("surface render: co-located light only") {
    AnalyticScene s = single_sphere(0.5);
    Pinhole cam = orbit_camera(s, 0.3, deg2rad(45), 48, 48);
    Vec3 co_gain{4, 4, 4};
    Image mask;
    Image img = ground_truth_render(s, cam, nullptr, co_gain, &mask);

    int lit = 0;
    Vec3 eye = cam.center();
    for (int y = 0; y < 48; ++y)
        for (int x = 0; x < 48; ++x) {
            Ray ray = cam.ray(real(x), real(y));
            SphereTraceResult hit = sphere_trace(s, ray);
            CHECK(mask.at(x, y, 0) == (hit.hit ? 1.0 : 0.0));
            if (!hit.hit) {
                CHECK(max_abs(img.rgb(x, y)) == 0.0);
                continue;
            }
            ++lit;
            Vec3 n = s.normal(hit.p);
            Vec3 v = normalized(eye - hit.p);
            Vec3 Lco = co_gain / std::max(norm2(hit.p - eye), real(1e-6));
            Vec3 want = shade({v, v, n, s.albedo_at(hit.p), s.rough_at(hit.p), Lco});
            CHECK(norm(img.rgb(x, y) - want) < 1e-6);
        }
    CHECK(lit > 50);
}

TEST_CASE("projector light casts sharp shadows behind the occluder") {
    AnalyticScene s = make_scene("slab");
    Pinhole optics;
    real lg;
    Vec3 gain, cg;
    default_projector_rig(s, 5, optics, lg, gain, cg, 64);
    Pattern white = flood(64, 64, 1.0);
    ProjectorDevice dev;
    dev.optics = optics;
    dev.log_gamma = lg;
    dev.log_gain = gain;
    dev.pattern = &white.image;

    Pinhole cam = orbit_camera(s, deg2rad(20), deg2rad(70), 64, 64);
    Image mask;
    Image img = ground_truth_render(s, cam, &dev, {0, 0, 0}, &mask);

    int lit = 0, dark = 0;
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x) {
            if (mask.at(x, y, 0) < 0.5) continue;
            if (max_abs(img.rgb(x, y)) > 1e-6) ++lit;
            else ++dark;
        }
    CHECK(lit > 200);   // directly illuminated surface
    CHECK(dark > 10);   // shadowed or facing away from the projector

    // a black pattern means no light at all
    Pattern black = flood(64, 64, 0.0);
    dev.pattern = &black.image;
    Image img0 = ground_truth_render(s, cam, &dev, {0, 0, 0});
    for (real v : img0.data) CHECK(v == 0.0);
}

TEST_CASE("orbit cameras look at the scene center") {
    AnalyticScene s = make_scene("slab");
    for (real az : {0.0, 1.3, 3.0, 5.1}) {
        Pinhole cam = orbit_camera(s, az, deg2rad(40), 96, 96);
        CHECK(cam.valid());
        auto pr = cam.project(s.bounds.center());
        CHECK(pr.in_front());
        CHECK(std::abs(pr.pix.x - cam.cx) < 1e-6);
        CHECK(std::abs(pr.pix.y - cam.cy) < 1e-6);
        CHECK(cam.center().z > 0);  // upper hemisphere
        // rotation is orthonormal
        Mat3 R = cam.R();
        Mat3 I = R * R.transposed();
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                CHECK(std::abs(I(i, j) - (i == j ? 1.0 : 0.0)) < 1e-9);
    }
}

TEST_CASE("capture generation writes a loadable, consistent corpus") {
    namespace fs = std::filesystem;
    std::string dir = (fs::temp_directory_path() / "procam_capture_test").string();
    fs::remove_all(dir);

    AnalyticScene s = make_scene("slab");
    CaptureOptions opt;
    opt.n_views = 2;
    opt.width = 32;
    opt.height = 32;
    opt.pattern_size = 48;
    opt.lollipop_pops = 4;
    CaptureSet cs = generate_capture(s, opt, 123, dir);

    CHECK(cs.views.size() == 6);  // triplet: (white, black, lollipop) per pose
    CHECK(cs.views[0].pattern_kind == "white");
    CHECK(cs.views[1].pattern_kind == "black");
    CHECK(cs.views[2].pattern_kind == "lollipop");
    CHECK(cs.has_projector_gt);

    CaptureSet ld = load_capture(dir);
    CHECK(ld.scene_name == "slab");
    CHECK(ld.seed == 123);
    CHECK(ld.views.size() == cs.views.size());
    for (std::size_t i = 0; i < cs.views.size(); ++i) {
        const Pinhole& a = cs.views[i].cam;
        const Pinhole& b = ld.views[i].cam;
        CHECK(std::abs(a.fx - b.fx) < 1e-9);
        CHECK(norm(a.trans - b.trans) < 1e-9);
        CHECK(rotation_distance(a.R(), b.R()) < 1e-6);  // arccos precision floor
        CHECK(cs.views[i].image_file == ld.views[i].image_file);
        // every referenced file exists
        CHECK(fs::exists(dir + "/" + ld.views[i].image_file));
        CHECK(fs::exists(dir + "/" + ld.views[i].mask_file));
        CHECK(fs::exists(dir + "/" + ld.views[i].pattern_file));
    }
    CHECK(std::abs(ld.proj_log_gamma_gt - cs.proj_log_gamma_gt) < 1e-12);
    CHECK(norm(ld.proj_log_gain_gt - cs.proj_log_gain_gt) < 1e-12);

    // black-pattern views carry only the co-located light; white-pattern
    // views of the same pose are at least as bright everywhere
    Image w = read_pfm(dir + "/" + ld.views[0].image_file);
    Image b = read_pfm(dir + "/" + ld.views[1].image_file);
    real wsum = 0, bsum = 0;
    for (std::size_t i = 0; i < w.data.size(); ++i) {
        wsum += w.data[i];
        bsum += b.data[i];
        CHECK(w.data[i] >= b.data[i] - 1e-6);
    }
    CHECK(wsum > bsum);

    // determinism: regenerating with the same seed reproduces the pixels
    std::string dir2 = dir + "_again";
    fs::remove_all(dir2);
    generate_capture(s, opt, 123, dir2);
    Image w2 = read_pfm(dir2 + "/" + ld.views[0].image_file);
    CHECK(w.data == w2.data);
    fs::remove_all(dir);
    fs::remove_all(dir2);
}

TEST_CASE("reconstruction probe runs on an untrained model") {
    AnalyticScene s = make_scene("slab");
    Model m;
    m.fields = FieldSet::create(s.bounds, 8, 8, 8);
    ReconstructionMetrics r = evaluate_reconstruction(m, s, 20, 9);
    CHECK(r.n_probes == 20);
    // untrained albedo is 0.5 everywhere: nonzero error against the checker
    CHECK(r.albedo_mse > 0.0);
}
