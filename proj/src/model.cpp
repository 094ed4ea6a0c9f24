// SPDX-License-Identifier: Apache-2.0
#include "procam/model.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace procam {

void sh9(const Vec3& d, real* y) {
    real x = d.x, yy = d.y, z = d.z;
    y[0] = 0.28209479177387814;
    y[1] = 0.4886025119029199 * yy;
    y[2] = 0.4886025119029199 * z;
    y[3] = 0.4886025119029199 * x;
    y[4] = 1.0925484305920792 * x * yy;
    y[5] = 1.0925484305920792 * yy * z;
    y[6] = 0.31539156525252005 * (3 * z * z - 1);
    y[7] = 1.0925484305920792 * x * z;
    y[8] = 0.5462742152960396 * (x * x - yy * yy);
}

void sh9_jacobian(const Vec3& d, Vec3* dy) {
    real x = d.x, yy = d.y, z = d.z;
    dy[0] = {0, 0, 0};
    dy[1] = {0, 0.4886025119029199, 0};
    dy[2] = {0, 0, 0.4886025119029199};
    dy[3] = {0.4886025119029199, 0, 0};
    dy[4] = {1.0925484305920792 * yy, 1.0925484305920792 * x, 0};
    dy[5] = {0, 1.0925484305920792 * z, 1.0925484305920792 * yy};
    dy[6] = {0, 0, 0.31539156525252005 * 6 * z};
    dy[7] = {1.0925484305920792 * z, 0, 1.0925484305920792 * x};
    dy[8] = {0.5462742152960396 * 2 * x, -0.5462742152960396 * 2 * yy, 0};
}

FieldSet FieldSet::create(const AABB& box, int geo_res, int mat_res, int tau_res,
                          const FieldOptions& opt) {
    FieldSet f;
    f.domain = box;
    f.opt = opt;
    f.density = VoxelGrid3(geo_res, 1, box);
    f.normal = VoxelGrid3(geo_res, 3, box);
    f.albedo = VoxelGrid3(mat_res, 3, box);
    f.roughness = VoxelGrid3(mat_res, 1, box);
    f.tau = VoxelGrid3(tau_res, 9, box);

    // near-empty scene start
    f.density.fill(inv_softplus(0.01));
    f.normal.fill(0);
    f.normal.fill_channel(2, 1.0);  // +z before normalization
    f.albedo.fill(logit(0.5));
    f.roughness.fill(logit(0.5));
    // tau-hat starts at 0.99: only the DC coefficient carries the offset
    f.tau.fill(0);
    f.tau.fill_channel(0, logit(0.99) / 0.28209479177387814);
    return f;
}

real FieldSet::sigma_at(const Vec3& p) const {
    auto s = density.sample(p);
    if (!s.inside) return 0;
    real raw;
    density.eval(s, &raw);
    return activate_density(raw);
}

real FieldSet::tau_at(const Vec3& p, const Vec3& dir) const {
    auto s = tau.sample(p);
    if (!s.inside) return 1;
    real c[9], y[9];
    tau.eval(s, c);
    sh9(dir, y);
    real acc = 0;
    for (int k = 0; k < 9; ++k) acc += c[k] * y[k];
    return sigmoid(acc);
}

std::optional<Vec3> FieldSet::density_gradient_normal(const Vec3& p, real eps) const {
    auto s = density.sample(p);
    if (!s.inside) return std::nullopt;
    real raw;
    Vec3 draw;
    density.eval(s, &raw);
    density.eval_spatial_grad(s, &draw);
    Vec3 grad_sigma = draw * activate_density_deriv(raw);
    real n = norm(grad_sigma);
    if (n <= eps) return std::nullopt;
    Vec3 nhat = grad_sigma / (opt.flip_normal_sign ? n : -n);
    return nhat;
}

// ---------------------------------------------------------------- grads

void ModelGrads::zero() {
    auto z = [](std::vector<real>& v) { std::fill(v.begin(), v.end(), 0.0); };
    z(density); z(normal); z(albedo); z(roughness); z(tau); z(emission); z(pattern);
    proj_omega = proj_trans = {0, 0, 0};
    proj_fx = proj_log_gamma = 0;
    proj_log_gain = co_log_gain = {0, 0, 0};
    std::fill(cam_omega.begin(), cam_omega.end(), Vec3{0, 0, 0});
    std::fill(cam_trans.begin(), cam_trans.end(), Vec3{0, 0, 0});
}

void ModelGrads::add(const ModelGrads& o) {
    auto acc = [](std::vector<real>& a, const std::vector<real>& b) {
        if (a.size() < b.size()) a.resize(b.size(), 0.0);
        for (std::size_t i = 0; i < b.size(); ++i) a[i] += b[i];
    };
    acc(density, o.density); acc(normal, o.normal); acc(albedo, o.albedo);
    acc(roughness, o.roughness); acc(tau, o.tau); acc(emission, o.emission);
    acc(pattern, o.pattern);
    proj_omega += o.proj_omega;
    proj_trans += o.proj_trans;
    proj_fx += o.proj_fx;
    proj_log_gamma += o.proj_log_gamma;
    proj_log_gain += o.proj_log_gain;
    co_log_gain += o.co_log_gain;
    if (cam_omega.size() < o.cam_omega.size()) cam_omega.resize(o.cam_omega.size());
    if (cam_trans.size() < o.cam_trans.size()) cam_trans.resize(o.cam_trans.size());
    for (std::size_t i = 0; i < o.cam_omega.size(); ++i) cam_omega[i] += o.cam_omega[i];
    for (std::size_t i = 0; i < o.cam_trans.size(); ++i) cam_trans[i] += o.cam_trans[i];
}

bool ModelGrads::finite() const {
    auto ok = [](const std::vector<real>& v) {
        for (real x : v)
            if (!std::isfinite(x)) return false;
        return true;
    };
    return ok(density) && ok(normal) && ok(albedo) && ok(roughness) && ok(tau) &&
           ok(emission) && ok(pattern) && all_finite(proj_omega) &&
           all_finite(proj_trans) && std::isfinite(proj_fx) &&
           std::isfinite(proj_log_gamma) && all_finite(proj_log_gain) &&
           all_finite(co_log_gain);
}

void Model::init_grads(ModelGrads& g) const {
    g.density.assign(fields.density.size(), 0.0);
    g.normal.assign(fields.normal.size(), 0.0);
    g.albedo.assign(fields.albedo.size(), 0.0);
    g.roughness.assign(fields.roughness.size(), 0.0);
    g.tau.assign(fields.tau.size(), 0.0);
    if (emission_mode) g.emission.assign(emission.size(), 0.0);
    g.proj_omega = g.proj_trans = {0, 0, 0};
    g.proj_fx = g.proj_log_gamma = 0;
    g.proj_log_gain = g.co_log_gain = {0, 0, 0};
}

// ---------------------------------------------------------------- checkpoint

namespace {

void put_raw(std::ofstream& f, const void* p, std::size_t n) {
    f.write(reinterpret_cast<const char*>(p), std::streamsize(n));
}
void put_u32(std::ofstream& f, uint32_t v) { put_raw(f, &v, 4); }
void put_str(std::ofstream& f, const std::string& s) {
    put_u32(f, uint32_t(s.size()));
    put_raw(f, s.data(), s.size());
}
void put_grid(std::ofstream& f, const std::string& name, const VoxelGrid3& g) {
    put_str(f, name);
    put_u32(f, uint32_t(g.nx)); put_u32(f, uint32_t(g.ny));
    put_u32(f, uint32_t(g.nz)); put_u32(f, uint32_t(g.channels));
    std::vector<float> payload(g.data.begin(), g.data.end());
    put_raw(f, payload.data(), payload.size() * 4);
}
void put_scalars(std::ofstream& f, const std::string& name, const real* v, std::size_t n) {
    put_str(f, name);
    put_u32(f, uint32_t(n));
    put_raw(f, v, n * 8);
}

struct Reader {
    std::ifstream f;
    explicit Reader(const std::string& path) : f(path, std::ios::binary) {
        if (!f) throw std::runtime_error("cannot open checkpoint " + path);
    }
    void raw(void* p, std::size_t n) {
        f.read(reinterpret_cast<char*>(p), std::streamsize(n));
        if (!f) throw std::runtime_error("truncated checkpoint");
    }
    uint32_t u32() { uint32_t v; raw(&v, 4); return v; }
    std::string str() {
        std::string s(u32(), '\0');
        raw(s.data(), s.size());
        return s;
    }
};

}  // namespace

void Model::save(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path);
    put_raw(f, "NPMF", 4);
    put_u32(f, 1);  // version

    uint32_t n_fields = emission_mode ? 6 : 5;
    put_u32(f, n_fields);
    put_grid(f, "density", fields.density);
    put_grid(f, "normal", fields.normal);
    put_grid(f, "albedo", fields.albedo);
    put_grid(f, "roughness", fields.roughness);
    put_grid(f, "tau", fields.tau);
    if (emission_mode) put_grid(f, "emission", emission);

    std::vector<std::pair<std::string, std::vector<real>>> scalars;
    scalars.push_back({"domain", {fields.domain.lo.x, fields.domain.lo.y, fields.domain.lo.z,
                                  fields.domain.hi.x, fields.domain.hi.y, fields.domain.hi.z}});
    const Pinhole& o = projector.optics;
    scalars.push_back({"proj_rotation", {o.rot.w, o.rot.x, o.rot.y, o.rot.z}});
    scalars.push_back({"proj_translation", {o.trans.x, o.trans.y, o.trans.z}});
    scalars.push_back({"proj_intrinsics", {o.fx, o.fy, o.cx, o.cy, real(o.width), real(o.height)}});
    scalars.push_back({"proj_log_gamma", {projector.log_gamma}});
    scalars.push_back({"proj_log_gain", {projector.log_gain.x, projector.log_gain.y, projector.log_gain.z}});
    scalars.push_back({"co_log_gain", {colight.log_gain.x, colight.log_gain.y, colight.log_gain.z}});
    scalars.push_back({"options", {fields.opt.softplus_density ? 1.0 : 0.0,
                                   fields.opt.flip_normal_sign ? 1.0 : 0.0,
                                   fields.opt.rho_min}});
    put_u32(f, uint32_t(scalars.size()));
    for (auto& [name, vals] : scalars) put_scalars(f, name, vals.data(), vals.size());
}

Model Model::load(const std::string& path) {
    Reader r(path);
    char magic[4];
    r.raw(magic, 4);
    if (std::memcmp(magic, "NPMF", 4) != 0)
        throw std::runtime_error("bad checkpoint magic in " + path);
    uint32_t version = r.u32();
    if (version != 1) throw std::runtime_error("unsupported checkpoint version");

    Model m;
    uint32_t n_fields = r.u32();
    for (uint32_t i = 0; i < n_fields; ++i) {
        std::string name = r.str();
        uint32_t nx = r.u32(), ny = r.u32(), nz = r.u32(), ch = r.u32();
        std::vector<float> payload(std::size_t(nx) * ny * nz * ch);
        r.raw(payload.data(), payload.size() * 4);
        VoxelGrid3 g(int(nx), int(ny), int(nz), int(ch), AABB{});
        g.data.assign(payload.begin(), payload.end());
        if (name == "density") m.fields.density = std::move(g);
        else if (name == "normal") m.fields.normal = std::move(g);
        else if (name == "albedo") m.fields.albedo = std::move(g);
        else if (name == "roughness") m.fields.roughness = std::move(g);
        else if (name == "tau") m.fields.tau = std::move(g);
        else if (name == "emission") { m.emission = std::move(g); m.emission_mode = true; }
        else throw std::runtime_error("unknown field in checkpoint: " + name);
    }
    uint32_t n_scalars = r.u32();
    for (uint32_t i = 0; i < n_scalars; ++i) {
        std::string name = r.str();
        std::vector<real> v(r.u32());
        r.raw(v.data(), v.size() * 8);
        Pinhole& o = m.projector.optics;
        if (name == "domain") {
            m.fields.domain = {{v[0], v[1], v[2]}, {v[3], v[4], v[5]}};
        } else if (name == "proj_rotation") {
            o.rot = Quat{v[0], v[1], v[2], v[3]};
        } else if (name == "proj_translation") {
            o.trans = {v[0], v[1], v[2]};
        } else if (name == "proj_intrinsics") {
            o.fx = v[0]; o.fy = v[1]; o.cx = v[2]; o.cy = v[3];
            o.width = int(v[4]); o.height = int(v[5]);
        } else if (name == "proj_log_gamma") {
            m.projector.log_gamma = v[0];
        } else if (name == "proj_log_gain") {
            m.projector.log_gain = {v[0], v[1], v[2]};
        } else if (name == "co_log_gain") {
            m.colight.log_gain = {v[0], v[1], v[2]};
        } else if (name == "options") {
            m.fields.opt.softplus_density = v[0] != 0;
            m.fields.opt.flip_normal_sign = v[1] != 0;
            m.fields.opt.rho_min = v[2];
        } else {
            throw std::runtime_error("unknown scalar in checkpoint: " + name);
        }
    }
    AABB box = m.fields.domain;
    for (VoxelGrid3* g : {&m.fields.density, &m.fields.normal, &m.fields.albedo,
                          &m.fields.roughness, &m.fields.tau, &m.emission})
        g->domain = box;
    return m;
}

uint64_t Model::checksum() const {
    uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&](const void* p, std::size_t n) {
        const unsigned char* b = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= b[i];
            h *= 0x100000001b3ULL;
        }
    };
    auto mix_vec = [&](const std::vector<real>& v) { mix(v.data(), v.size() * 8); };
    mix_vec(fields.density.data); mix_vec(fields.normal.data);
    mix_vec(fields.albedo.data); mix_vec(fields.roughness.data);
    mix_vec(fields.tau.data);
    if (emission_mode) mix_vec(emission.data);
    const Pinhole& o = projector.optics;
    real pose[14] = {o.rot.w, o.rot.x, o.rot.y, o.rot.z, o.trans.x, o.trans.y, o.trans.z,
                     o.fx, o.fy, o.cx, o.cy, projector.log_gamma, 0, 0};
    pose[12] = colight.log_gain.x;
    pose[13] = projector.log_gain.x;
    mix(pose, sizeof(pose));
    mix(&projector.log_gain, sizeof(projector.log_gain));
    mix(&colight.log_gain, sizeof(colight.log_gain));
    return h;
}

}  // namespace procam
