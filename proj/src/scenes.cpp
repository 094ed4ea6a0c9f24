// SPDX-License-Identifier: Apache-2.0
#include "procam/scenes.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "json.hpp"
#include "procam/metrics.hpp"
#include "procam/parallel.hpp"
#include "procam/renderer.hpp"

namespace procam {

using nlohmann::json;

// ---------------------------------------------------------------- SDF

real Primitive::sdf(const Vec3& p_world) const {
    Vec3 q = rot.to_matrix() * (p_world - center);
    switch (kind) {
        case kSphere:
            return norm(q) - radius;
        case kBox: {
            Vec3 d{std::abs(q.x) - half.x, std::abs(q.y) - half.y, std::abs(q.z) - half.z};
            Vec3 dp = cwise_max(d, Vec3{0, 0, 0});
            real outside = norm(dp);
            real inside = std::min(std::max({d.x, d.y, d.z}), real(0));
            return outside + inside;
        }
        case kTorus: {
            // ring lies in the local xy plane
            real l = std::hypot(std::hypot(q.x, q.y) - radius, q.z);
            return l - minor;
        }
    }
    return 1e9;
}

Vec3 Primitive::albedo_at(const Vec3& p_world) const {
    if (checker_scale <= 0) return albedo_a;
    Vec3 q = rot.to_matrix() * (p_world - center);
    long cx = long(std::floor(q.x * checker_scale));
    long cy = long(std::floor(q.y * checker_scale));
    long cz = long(std::floor(q.z * checker_scale));
    return ((cx + cy + cz) & 1) ? albedo_b : albedo_a;
}

real Primitive::rough_at(const Vec3& p_world) const {
    Vec3 q = rot.to_matrix() * (p_world - center);
    return q.x < split_x ? rough_a : rough_b;
}

real AnalyticScene::sdf(const Vec3& p) const {
    real d = 1e9;
    for (const auto& pr : prims) d = std::min(d, pr.sdf(p));
    return d;
}

int AnalyticScene::nearest_prim(const Vec3& p) const {
    real best = 1e9;
    int idx = 0;
    for (int i = 0; i < int(prims.size()); ++i) {
        real d = prims[i].sdf(p);
        if (d < best) {
            best = d;
            idx = i;
        }
    }
    return idx;
}

Vec3 AnalyticScene::normal(const Vec3& p, real eps) const {
    Vec3 g{sdf({p.x + eps, p.y, p.z}) - sdf({p.x - eps, p.y, p.z}),
           sdf({p.x, p.y + eps, p.z}) - sdf({p.x, p.y - eps, p.z}),
           sdf({p.x, p.y, p.z + eps}) - sdf({p.x, p.y, p.z - eps})};
    return normalized(g);
}

AnalyticScene make_scene(const std::string& name) {
    AnalyticScene s;
    s.name = name;
    s.bounds = {{-1, -1, -1}, {1, 1, 1}};

    auto floor_slab = [] {
        Primitive f;
        f.kind = Primitive::kBox;
        f.center = {0, 0, -0.62};
        f.half = {0.85, 0.85, 0.06};
        f.albedo_a = {0.85, 0.35, 0.25};
        f.albedo_b = {0.9, 0.85, 0.3};
        f.checker_scale = 3.0;
        f.rough_a = f.rough_b = 0.6;
        return f;
    };

    if (name == "slab") {
        s.prims.push_back(floor_slab());
        Primitive occ;
        occ.kind = Primitive::kBox;
        occ.center = {0.22, 0.12, -0.28};
        occ.half = {0.17, 0.13, 0.26};
        occ.rot = quat_from_axis_angle({0, 0, 1}, deg2rad(28));
        occ.albedo_a = occ.albedo_b = {0.25, 0.4, 0.85};
        occ.rough_a = occ.rough_b = 0.4;
        s.prims.push_back(occ);
    } else if (name == "shiny-patch") {
        s.prims.push_back(floor_slab());
        Primitive sph;
        sph.kind = Primitive::kSphere;
        sph.center = {0, 0, -0.08};
        sph.radius = 0.48;
        sph.albedo_a = {0.7, 0.68, 0.65};
        sph.albedo_b = {0.45, 0.5, 0.62};
        sph.checker_scale = 2.5;
        sph.rough_a = 0.08;  // mirror-like on local x < 0
        sph.rough_b = 0.7;
        sph.split_x = 0.0;
        s.prims.push_back(sph);
    } else if (name == "teapot-analog") {
        s.prims.push_back(floor_slab());
        Primitive body;
        body.kind = Primitive::kSphere;
        body.center = {-0.12, 0, -0.18};
        body.radius = 0.42;
        body.albedo_a = {0.75, 0.55, 0.3};
        body.rough_a = body.rough_b = 0.45;
        s.prims.push_back(body);
        Primitive lid;
        lid.kind = Primitive::kSphere;
        lid.center = {-0.12, 0, 0.22};
        lid.radius = 0.2;
        lid.albedo_a = {0.4, 0.7, 0.45};
        lid.rough_a = lid.rough_b = 0.35;
        s.prims.push_back(lid);
        Primitive handle;
        handle.kind = Primitive::kTorus;
        handle.center = {0.42, 0, -0.15};
        handle.radius = 0.24;
        handle.minor = 0.065;
        handle.rot = quat_from_axis_angle({1, 0, 0}, deg2rad(90));
        handle.albedo_a = handle.albedo_b = {0.5, 0.35, 0.6};
        handle.rough_a = handle.rough_b = 0.5;
        s.prims.push_back(handle);
    } else {
        throw std::invalid_argument("unknown scene: " + name);
    }
    return s;
}

std::vector<std::string> scene_names() { return {"slab", "shiny-patch", "teapot-analog"}; }

SphereTraceResult sphere_trace(const AnalyticScene& scene, const Ray& ray, int max_steps,
                               real eps) {
    SphereTraceResult res;
    real t0, t1;
    AABB roi = scene.bounds;
    if (!intersect_aabb(roi, ray.origin, ray.dir, 0.0, t0, t1)) return res;
    real t = std::max(t0, real(0));
    for (int i = 0; i < max_steps && t <= t1; ++i) {
        Vec3 p = ray.origin + ray.dir * t;
        real d = scene.sdf(p);
        if (d < eps * std::max(real(1), t)) {
            res.hit = true;
            res.t = t;
            res.p = p;
            return res;
        }
        t += std::max(d, eps);
    }
    return res;
}

// ---------------------------------------------------------------- GT render

namespace {

bool projector_visible(const AnalyticScene& scene, const Vec3& p, const Vec3& n,
                       const Vec3& proj_center) {
    Vec3 to_proj = proj_center - p;
    real dist = norm(to_proj);
    Vec3 dir = to_proj / dist;
    Ray shadow{p + n * 1e-4 + dir * 1e-4, dir};
    SphereTraceResult hit = sphere_trace(scene, shadow);
    return !hit.hit || hit.t > dist - 1e-3;
}

}  // namespace

Image ground_truth_render(const AnalyticScene& scene, const Pinhole& cam,
                          const ProjectorDevice* proj, const Vec3& co_gain,
                          Image* mask) {
    Image img(cam.width, cam.height, 3);
    if (mask) *mask = Image(cam.width, cam.height, 1);
    Vec3 proj_center = proj ? proj->optics.center() : Vec3{0, 0, 0};
    parallel_for(std::size_t(cam.height), [&](std::size_t y0, std::size_t y1, int) {
        for (std::size_t y = y0; y < y1; ++y) {
            for (int x = 0; x < cam.width; ++x) {
                Ray ray = cam.ray(real(x), real(y));
                SphereTraceResult hit = sphere_trace(scene, ray);
                if (!hit.hit) continue;
                if (mask) mask->at(x, int(y), 0) = 1.0;
                Vec3 n = scene.normal(hit.p);
                Vec3 v = ray.dir * -1.0;
                Vec3 alb = scene.albedo_at(hit.p);
                real rho = scene.rough_at(hit.p);
                Vec3 c{0, 0, 0};
                if (proj && proj->pattern) {
                    Vec3 Lp = projector_irradiance(*proj, hit.p);
                    if (max_abs(Lp) > 0 && projector_visible(scene, hit.p, n, proj_center)) {
                        Vec3 l = normalized(proj_center - hit.p);
                        c += shade({v, l, n, alb, rho, Lp});
                    }
                }
                if (max_abs(co_gain) > 0) {
                    real d2 = std::max(norm2(hit.p - ray.origin), real(1e-6));
                    Vec3 Lco = co_gain / d2;
                    c += shade({v, v, n, alb, rho, Lco});
                }
                img.set_rgb(x, int(y), c);
            }
        }
    });
    return img;
}

// ---------------------------------------------------------------- capture rig

namespace {

Quat look_at_rotation(const Vec3& eye, const Vec3& target) {
    Vec3 zr = normalized(target - eye);  // device z: optical axis
    Vec3 xr = cross(zr, Vec3{0, 0, 1});
    if (norm(xr) < 1e-6) xr = {1, 0, 0};
    xr = normalized(xr);
    Vec3 yr = cross(zr, xr);
    Mat3 R;
    R.m = {xr.x, xr.y, xr.z, yr.x, yr.y, yr.z, zr.x, zr.y, zr.z};
    return quat_from_matrix(R);
}

Pinhole make_device(const Vec3& eye, const Vec3& target, int width, int height, real fx) {
    Pinhole c;
    c.width = width;
    c.height = height;
    c.fx = c.fy = fx;
    c.cx = width * 0.5;
    c.cy = height * 0.5;
    c.rot = look_at_rotation(eye, target);
    c.trans = (c.rot.to_matrix() * eye) * -1.0;  // t = -R * eye
    return c;
}

}  // namespace

Pinhole orbit_camera(const AnalyticScene& scene, real azimuth, real elevation,
                     int width, int height) {
    Vec3 target = scene.bounds.center();
    real dist = 2.6;
    Vec3 eye = target + Vec3{std::cos(azimuth) * std::cos(elevation),
                             std::sin(azimuth) * std::cos(elevation),
                             std::sin(elevation)} * dist;
    return make_device(eye, target, width, height, real(width) * 1.0);
}

void default_projector_rig(const AnalyticScene& scene, uint64_t seed, Pinhole& optics,
                           real& log_gamma, Vec3& log_gain, Vec3& co_log_gain,
                           int pattern_size) {
    Rng rng(seed ^ 0x70726f6aULL);
    real az = deg2rad(200) + rng.uniform(-0.2, 0.2);
    real el = deg2rad(52) + rng.uniform(-0.05, 0.05);
    Vec3 target = scene.bounds.center();
    Vec3 eye = target + Vec3{std::cos(az) * std::cos(el), std::sin(az) * std::cos(el),
                             std::sin(el)} * 2.7;
    optics = make_device(eye, target, pattern_size, pattern_size, real(pattern_size) * 1.05);
    log_gamma = std::log(1.8);
    log_gain = {std::log(2.2), std::log(2.0), std::log(2.4)};
    co_log_gain = {std::log(5.0), std::log(5.0), std::log(5.0)};
}

// ---------------------------------------------------------------- capture IO

namespace {

json pinhole_json(const Pinhole& p) { return json::parse(p.to_json()); }

std::string idx3(int i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%03d", i);
    return buf;
}

}  // namespace

void save_capture_manifest(const CaptureSet& cs) {
    json j;
    j["scene_name"] = cs.scene_name;
    j["seed"] = cs.seed;
    j["domain"] = {cs.domain.lo.x, cs.domain.lo.y, cs.domain.lo.z,
                   cs.domain.hi.x, cs.domain.hi.y, cs.domain.hi.z};
    if (cs.has_projector_gt) {
        j["projector_gt"] = {{"optics", pinhole_json(cs.projector_optics_gt)},
                             {"log_gamma", cs.proj_log_gamma_gt},
                             {"log_gain", {cs.proj_log_gain_gt.x, cs.proj_log_gain_gt.y,
                                           cs.proj_log_gain_gt.z}},
                             {"co_log_gain", {cs.co_log_gain_gt.x, cs.co_log_gain_gt.y,
                                              cs.co_log_gain_gt.z}}};
    } else {
        j["projector_gt"] = nullptr;
    }
    j["views"] = json::array();
    for (const auto& v : cs.views) {
        j["views"].push_back({{"pose", pinhole_json(v.cam)},
                              {"pattern_kind", v.pattern_kind},
                              {"pattern_file", v.pattern_file},
                              {"image_file", v.image_file},
                              {"mask_file", v.mask_file},
                              {"colight", v.colight}});
    }
    std::ofstream f(cs.dir + "/capture.json");
    if (!f) throw std::runtime_error("cannot write manifest in " + cs.dir);
    f << j.dump(2) << "\n";
}

CaptureSet load_capture(const std::string& dir) {
    std::ifstream f(dir + "/capture.json");
    if (!f) throw std::runtime_error("no capture.json in " + dir);
    json j = json::parse(f);
    CaptureSet cs;
    cs.dir = dir;
    cs.scene_name = j.at("scene_name").get<std::string>();
    cs.seed = j.at("seed").get<uint64_t>();
    auto d = j.at("domain");
    cs.domain = {{d[0], d[1], d[2]}, {d[3], d[4], d[5]}};
    if (!j.at("projector_gt").is_null()) {
        cs.has_projector_gt = true;
        auto& pg = j["projector_gt"];
        cs.projector_optics_gt = Pinhole::from_json(pg.at("optics").dump());
        cs.proj_log_gamma_gt = pg.at("log_gamma").get<real>();
        auto g = pg.at("log_gain");
        cs.proj_log_gain_gt = {g[0], g[1], g[2]};
        auto cg = pg.at("co_log_gain");
        cs.co_log_gain_gt = {cg[0], cg[1], cg[2]};
    }
    for (const auto& vj : j.at("views")) {
        CaptureView v;
        v.cam = Pinhole::from_json(vj.at("pose").dump());
        v.pattern_kind = vj.at("pattern_kind").get<std::string>();
        v.pattern_file = vj.at("pattern_file").get<std::string>();
        v.image_file = vj.at("image_file").get<std::string>();
        v.mask_file = vj.at("mask_file").get<std::string>();
        v.colight = vj.at("colight").get<bool>();
        cs.views.push_back(v);
    }
    return cs;
}

CaptureSet generate_capture(const AnalyticScene& scene, const CaptureOptions& opt,
                            uint64_t seed, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);

    CaptureSet cs;
    cs.scene_name = scene.name;
    cs.seed = seed;
    cs.dir = out_dir;
    cs.domain = scene.bounds;
    cs.has_projector_gt = true;
    default_projector_rig(scene, seed, cs.projector_optics_gt, cs.proj_log_gamma_gt,
                          cs.proj_log_gain_gt, cs.co_log_gain_gt, opt.pattern_size);

    // camera poses: deterministic golden-angle azimuths, jittered elevations
    Rng rng(seed);
    std::vector<Pinhole> poses;
    for (int i = 0; i < opt.n_views; ++i) {
        real az = 2 * M_PI * 0.618033988749895 * i + rng.uniform(0, 0.15);
        real el = deg2rad(rng.uniform(20, 62));
        poses.push_back(orbit_camera(scene, az, el, opt.width, opt.height));
    }

    // shared flood patterns
    Pattern white = flood(opt.pattern_size, opt.pattern_size, 1.0);
    Pattern black = flood(opt.pattern_size, opt.pattern_size, 0.0);
    write_png(out_dir + "/pattern_white.png", white.image, false);
    write_png(out_dir + "/pattern_black.png", black.image, false);

    auto lollipop_file = [&](int idx) {
        std::string name = "pattern_lollipop_" + idx3(idx) + ".png";
        Pattern lp = lollipop(opt.pattern_size, opt.pattern_size, opt.lollipop_pops,
                              seed * 1000 + idx);
        write_png(out_dir + "/" + name, lp.image, false);
        return name;
    };

    Vec3 co_gain{std::exp(cs.co_log_gain_gt.x), std::exp(cs.co_log_gain_gt.y),
                 std::exp(cs.co_log_gain_gt.z)};

    auto add_view = [&](const Pinhole& cam, const std::string& kind,
                        const std::string& pattern_file, int view_idx) {
        // load back the written PNG so training sees the exact projected bytes
        Image pat = read_png(out_dir + "/" + pattern_file, false);
        ProjectorDevice dev;
        dev.optics = cs.projector_optics_gt;
        dev.log_gamma = cs.proj_log_gamma_gt;
        dev.log_gain = cs.proj_log_gain_gt;
        dev.pattern = &pat;
        Image mask;
        Image img = ground_truth_render(scene, cam, &dev, co_gain, &mask);
        CaptureView v;
        v.cam = cam;
        v.pattern_kind = kind;
        v.pattern_file = pattern_file;
        v.image_file = "image_" + idx3(view_idx) + ".pfm";
        v.mask_file = "mask_" + idx3(view_idx) + ".png";
        v.colight = true;
        write_pfm(out_dir + "/" + v.image_file, img);
        write_png(out_dir + "/preview_" + idx3(view_idx) + ".png", img, true);
        write_png(out_dir + "/" + v.mask_file, mask, false);
        cs.views.push_back(v);
    };

    int view_idx = 0;
    if (opt.protocol == "triplet") {
        for (int i = 0; i < opt.n_views; ++i) {
            std::string lolli = lollipop_file(i);
            add_view(poses[i], "white", "pattern_white.png", view_idx++);
            add_view(poses[i], "black", "pattern_black.png", view_idx++);
            add_view(poses[i], "lollipop", lolli, view_idx++);
        }
    } else if (opt.protocol == "cycled") {
        for (int i = 0; i < opt.n_views; ++i) {
            int phase = i % 3;
            if (phase == 0) add_view(poses[i], "white", "pattern_white.png", view_idx++);
            else if (phase == 1) add_view(poses[i], "black", "pattern_black.png", view_idx++);
            else add_view(poses[i], "lollipop", lollipop_file(i), view_idx++);
        }
    } else {
        throw std::invalid_argument("unknown protocol: " + opt.protocol);
    }

    save_capture_manifest(cs);
    return cs;
}

// ---------------------------------------------------------------- baking

Model model_from_scene(const AnalyticScene& scene, int geo_res, int mat_res,
                       real sharpness) {
    Model m;
    m.fields = FieldSet::create(scene.bounds, geo_res, mat_res, mat_res);
    FieldSet& F = m.fields;
    Vec3 lo = scene.bounds.lo, ext = scene.bounds.extent();

    auto node_pos = [&](const VoxelGrid3& g, int x, int y, int z) {
        return Vec3{lo.x + ext.x * real(x) / real(g.nx - 1),
                    lo.y + ext.y * real(y) / real(g.ny - 1),
                    lo.z + ext.z * real(z) / real(g.nz - 1)};
    };

    VoxelGrid3& D = F.density;
    real cell = std::max({ext.x, ext.y, ext.z}) / real(geo_res - 1);
    for (int z = 0; z < D.nz; ++z)
        for (int y = 0; y < D.ny; ++y)
            for (int x = 0; x < D.nx; ++x) {
                Vec3 p = node_pos(D, x, y, z);
                real d = scene.sdf(p);
                // soft occupancy ramp about one cell wide
                real sig = sharpness * sigmoid(-d / (0.5 * cell));
                D.data[(std::size_t(z) * D.ny + y) * D.nx + x] =
                    inv_softplus(std::max(sig, real(1e-4)));
            }

    auto fill_mat = [&](VoxelGrid3& g, auto&& value) {
        for (int z = 0; z < g.nz; ++z)
            for (int y = 0; y < g.ny; ++y)
                for (int x = 0; x < g.nx; ++x) {
                    std::size_t base = ((std::size_t(z) * g.ny + y) * g.nx + x) * g.channels;
                    value(node_pos(g, x, y, z), &g.data[base]);
                }
    };
    fill_mat(F.normal, [&](const Vec3& p, real* out) {
        Vec3 n = scene.normal(p);
        out[0] = n.x;
        out[1] = n.y;
        out[2] = n.z;
    });
    fill_mat(F.albedo, [&](const Vec3& p, real* out) {
        Vec3 a = scene.albedo_at(p);
        for (int c = 0; c < 3; ++c) out[c] = logit(std::clamp(a[c], real(0.01), real(0.99)));
    });
    fill_mat(F.roughness, [&](const Vec3& p, real* out) {
        real s = (scene.rough_at(p) - F.opt.rho_min) / (1 - F.opt.rho_min);
        out[0] = logit(std::clamp(s, real(0.01), real(0.99)));
    });
    return m;
}

// ---------------------------------------------------------------- evaluation

ReconstructionMetrics evaluate_reconstruction(const Model& model,
                                              const AnalyticScene& scene,
                                              int n_probes, uint64_t seed) {
    ReconstructionMetrics m;
    Rng rng(seed);
    std::vector<real> nerr;
    real alb_acc = 0, rough_acc = 0, depth_acc = 0;
    int n_alb = 0, n_depth = 0;
    RenderOptions ropt;
    ropt.stratified = false;
    ropt.n_primary = 128;
    ropt.colight = false;
    ropt.tr_mode = TrMode::kMarched;

    int attempts = 0;
    while (m.n_probes < n_probes && attempts < n_probes * 20) {
        ++attempts;
        real az = rng.uniform(0, 2 * M_PI);
        real el = deg2rad(rng.uniform(20, 62));
        Pinhole cam = orbit_camera(scene, az, el, 64, 64);
        Ray ray = cam.ray(rng.uniform(8, 56), rng.uniform(8, 56));
        SphereTraceResult hit = sphere_trace(scene, ray);
        if (!hit.hit) continue;
        ++m.n_probes;

        Vec3 n_gt = scene.normal(hit.p);
        auto n_pred = model.fields.density_gradient_normal(hit.p);
        if (n_pred) nerr.push_back(angular_error_deg(*n_pred, n_gt));

        auto as_ = model.fields.albedo.sample(hit.p);
        if (as_.inside) {
            real raw[3];
            model.fields.albedo.eval(as_, raw);
            Vec3 a_pred{sigmoid(raw[0]), sigmoid(raw[1]), sigmoid(raw[2])};
            Vec3 e = a_pred - scene.albedo_at(hit.p);
            alb_acc += dot(e, e) / 3.0;
            ++n_alb;
            auto rs_ = model.fields.roughness.sample(hit.p);
            real rr;
            model.fields.roughness.eval(rs_, &rr);
            real dr = model.fields.activate_rough(rr) - scene.rough_at(hit.p);
            rough_acc += dr * dr;
        }

        RayRecord rec;
        render_ray(model, ray, ropt, nullptr, rec);
        if (rec.opacity > 0.5) {
            depth_acc += std::abs(rec.depth / rec.opacity - hit.t);
            ++n_depth;
        }
    }
    if (!nerr.empty()) {
        real s = 0;
        for (real e : nerr) s += e;
        m.normal_err_deg_mean = s / real(nerr.size());
        std::sort(nerr.begin(), nerr.end());
        m.normal_err_deg_median = nerr[nerr.size() / 2];
    }
    if (n_alb) {
        m.albedo_mse = alb_acc / n_alb;
        m.rough_mse = rough_acc / n_alb;
    }
    if (n_depth) m.depth_mae = depth_acc / n_depth;
    return m;
}

}  // namespace procam
