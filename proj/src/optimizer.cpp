// SPDX-License-Identifier: Apache-2.0
#include "procam/optimizer.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "procam/kernels.hpp"
#include "procam/parallel.hpp"

namespace procam {

void AdamBlock::resize(std::size_t n) {
    if (m.size() == n) return;
    m.assign(n, 0.0);
    v.assign(n, 0.0);
    t = 0;
}

void AdamBlock::step(real* p, const real* g, std::size_t n, const AdamParams& ap) {
    if (n == 0) return;
    resize(n);
    ++t;
    real bc1 = 1.0 - std::pow(ap.beta1, real(t));
    real bc2 = 1.0 - std::pow(ap.beta2, real(t));
    kernels::ops().adam_update(p, g, m.data(), v.data(), n, ap.lr, ap.beta1, ap.beta2,
                               ap.eps, bc1, bc2);
}

const char* stage_name(Stage s) {
    switch (s) {
        case Stage::kScene: return "scene";
        case Stage::kProjector: return "projector";
        case Stage::kFinetune: return "finetune";
    }
    return "?";
}

std::vector<ViewData> load_views(const CaptureSet& cs) {
    std::vector<ViewData> out;
    for (const auto& v : cs.views) {
        ViewData d;
        d.cam = v.cam;
        d.img = read_pfm(cs.dir + "/" + v.image_file);
        d.mask = read_png(cs.dir + "/" + v.mask_file, false);
        d.pattern = read_png(cs.dir + "/" + v.pattern_file, false);
        d.pattern_kind = v.pattern_kind;
        d.colight = v.colight;
        out.push_back(std::move(d));
    }
    return out;
}

Trainer::Trainer(Model model, std::vector<ViewData> views, const TrainConfig& cfg)
    : model_(std::move(model)), views_(std::move(views)), cfg_(cfg), rng_(cfg.seed) {
    if (views_.empty()) throw std::invalid_argument("trainer needs at least one view");
    if (!cfg_.run_dir.empty()) {
        std::ofstream f(cfg_.run_dir + "/telemetry.csv");
        f << "step,stage,lr_scale,img,bg,tr,n1,n2,fog,total\n";
    }
}

std::vector<int> Trainer::allowed_views(Stage st) const {
    std::vector<int> out;
    if (st == Stage::kScene && !model_.emission_mode) {
        for (int i = 0; i < int(views_.size()); ++i)
            if (views_[i].pattern_kind == "black") out.push_back(i);
    }
    if (out.empty())
        for (int i = 0; i < int(views_.size()); ++i) out.push_back(i);
    return out;
}

void Trainer::sample_batch(Stage st, Batch& b) {
    std::vector<int> allowed = allowed_views(st);
    b.view = allowed[rng_.below(allowed.size())];
    const ViewData& vd = views_[b.view];
    int n = cfg_.sched.batch_rays;
    b.pix.resize(n);
    b.in_mask.resize(n);
    std::size_t in = 0;
    for (int i = 0; i < n; ++i) {
        int x = int(rng_.below(vd.img.width));
        int y = int(rng_.below(vd.img.height));
        b.pix[i] = {real(x), real(y)};
        bool m = vd.mask.at(x, y, 0) > 0.5;
        b.in_mask[i] = m;
        if (m) ++in;
    }
    b.norms = BatchNorms::make(in, n - in, n, cfg_.render.n_primary);
}

void Trainer::maybe_upsample(int scene_step) {
    const auto& S = cfg_.sched;
    while (geo_level_ + 1 < int(S.geo_res.size()) &&
           real(scene_step) >= S.geo_at[geo_level_ + 1] * real(S.scene_steps)) {
        ++geo_level_;
        int r = S.geo_res[geo_level_];
        model_.fields.density = model_.fields.density.resampled(r, r, r);
        model_.fields.normal = model_.fields.normal.resampled(r, r, r);
        // fresh moments at the new resolution
        ab_density_.resize(model_.fields.density.data.size());
        ab_normal_.resize(model_.fields.normal.data.size());
    }
}

namespace {

GradRequest request_for(Stage st, const TrainConfig& cfg, bool emission_mode) {
    GradRequest req;
    if (emission_mode) {
        req.fields = true;
        req.emission = true;
        return req;
    }
    bool fields = st != Stage::kProjector;
    bool proj = st != Stage::kScene;
    req.fields = fields;
    req.tau_field = fields;
    req.colight = fields && cfg.optimize_colight;
    req.projector_pose = proj && (cfg.optimize_projector_pose || cfg.optimize_projector_intrinsics);
    req.projector_color = proj && cfg.optimize_projector_color;
    return req;
}

LossFlags flags_for(Stage st, bool emission_mode) {
    LossFlags f;
    if (emission_mode) {
        f.tr = f.normals = f.fog = false;
    } else if (st == Stage::kProjector) {
        f.bg = f.tr = f.normals = f.fog = false;
    }
    return f;
}

}  // namespace

LossTerms Trainer::train_step(Stage st, int step, int total_steps) {
    const auto& S = cfg_.sched;
    real u = real(step) / real(std::max(1, total_steps));
    real lr_scale = S.cosine_floor + (1 - S.cosine_floor) * 0.5 * (1 + std::cos(M_PI * u));

    if (st == Stage::kScene && !model_.emission_mode) maybe_upsample(step);

    Batch b;
    sample_batch(st, b);
    const ViewData& vd = views_[b.view];
    model_.projector.pattern = &vd.pattern;

    RenderOptions opt = cfg_.render;
    opt.colight = cfg_.render.colight && vd.colight;
    LossFlags flags = flags_for(st, model_.emission_mode);
    opt.eval_tau_primary = flags.tr;
    GradRequest req = request_for(st, cfg_, model_.emission_mode);

    model_.init_grads(grads_);
    int workers = thread_count();
    if (int(worker_grads_.size()) != workers) worker_grads_.assign(workers, ModelGrads{});
    for (auto& g : worker_grads_) model_.init_grads(g);
    std::vector<LossTerms> wterms(workers);

    int n = S.batch_rays;
    parallel_for(std::size_t(n), [&](std::size_t i0, std::size_t i1, int w) {
        RayRecord rec;
        RayAdjoints adj;
        for (std::size_t i = i0; i < i1; ++i) {
            Rng r = rng_.fork(i);
            Ray ray = vd.cam.ray(b.pix[i].x, b.pix[i].y);
            render_ray(model_, ray, opt, opt.stratified ? &r : nullptr, rec);
            Vec3 cgt = vd.img.rgb(int(b.pix[i].x), int(b.pix[i].y));
            wterms[w] += ray_loss(model_.fields, rec, cgt, b.in_mask[i], cfg_.weights,
                                  flags, b.norms, &adj);
            render_ray_backward(model_, opt, rec, adj.view(), req, worker_grads_[w]);
        }
    });

    LossTerms terms;
    for (int w = 0; w < workers; ++w) {
        terms += wterms[w];
        grads_.add(worker_grads_[w]);
    }

    if (grads_.finite()) {
        apply_updates(st, lr_scale);
        model_.fold_projector_omega();
    }
    ++global_step_;
    telemetry_row(st, terms, lr_scale);
    return terms;
}

void Trainer::apply_updates(Stage st, real lr_scale) {
    const auto& S = cfg_.sched;
    GradRequest req = request_for(st, cfg_, model_.emission_mode);
    auto ap = [&](real base) {
        AdamParams p;
        p.lr = base * lr_scale;
        return p;
    };

    FieldSet& F = model_.fields;
    if (req.fields) {
        ab_density_.step(F.density.data.data(), grads_.density.data(),
                         F.density.data.size(), ap(S.lr_fields));
        ab_normal_.step(F.normal.data.data(), grads_.normal.data(),
                        F.normal.data.size(), ap(S.lr_fields));
        ab_albedo_.step(F.albedo.data.data(), grads_.albedo.data(),
                        F.albedo.data.size(), ap(S.lr_fields));
        ab_rough_.step(F.roughness.data.data(), grads_.roughness.data(),
                       F.roughness.data.size(), ap(S.lr_fields));
    }
    if (req.tau_field)
        ab_tau_.step(F.tau.data.data(), grads_.tau.data(), F.tau.data.size(),
                     ap(S.lr_fields));
    if (req.emission && !grads_.emission.empty())
        ab_emission_.step(model_.emission.data.data(), grads_.emission.data(),
                          model_.emission.data.size(), ap(S.lr_emission));

    if (req.projector_pose) {
        if (cfg_.optimize_projector_pose) {
            real om[3] = {0, 0, 0};  // axis-angle increment, folded after the step
            real go[3] = {grads_.proj_omega.x, grads_.proj_omega.y, grads_.proj_omega.z};
            ab_rot_.step(om, go, 3, ap(S.lr_rot));
            model_.proj_omega = {om[0], om[1], om[2]};

            real gt[3] = {grads_.proj_trans.x, grads_.proj_trans.y, grads_.proj_trans.z};
            ab_trans_.step(&model_.projector.optics.trans.x, gt, 3, ap(S.lr_trans));
        }
        if (cfg_.optimize_projector_intrinsics) {
            real fx = model_.projector.optics.fx;
            ab_fx_.step(&fx, &grads_.proj_fx, 1, ap(S.lr_intrinsics));
            model_.projector.optics.fx = model_.projector.optics.fy = fx;
        }
    }
    if (req.projector_color) {
        ab_gamma_.step(&model_.projector.log_gamma, &grads_.proj_log_gamma, 1,
                       ap(S.lr_color));
        real gg[3] = {grads_.proj_log_gain.x, grads_.proj_log_gain.y, grads_.proj_log_gain.z};
        ab_gain_.step(&model_.projector.log_gain.x, gg, 3, ap(S.lr_color));
    }
    if (req.colight) {
        real gc[3] = {grads_.co_log_gain.x, grads_.co_log_gain.y, grads_.co_log_gain.z};
        ab_co_.step(&model_.colight.log_gain.x, gc, 3, ap(S.lr_color));
    }
}

void Trainer::telemetry_row(Stage st, const LossTerms& t, real lr_scale) {
    if (cfg_.run_dir.empty()) return;
    std::ofstream f(cfg_.run_dir + "/telemetry.csv", std::ios::app);
    f << global_step_ << "," << stage_name(st) << "," << lr_scale << "," << t.img << ","
      << t.bg << "," << t.tr << "," << t.n1 << "," << t.n2 << "," << t.fog << ","
      << t.total(cfg_.weights) << "\n";
}

TrainStatus Trainer::run_stage(Stage st, int steps) {
    real initial = -1;
    int streak = 0;
    const auto& S = cfg_.sched;
    for (int i = 0; i < steps; ++i) {
        LossTerms t = train_step(st, i, steps);
        real loss = t.total(cfg_.weights);
        bool bad = !std::isfinite(loss);
        if (!bad) {
            if (initial < 0) initial = std::max(loss, real(1e-12));
            bad = loss > S.diverge_factor * initial;
        }
        streak = bad ? streak + 1 : 0;
        if (streak >= S.diverge_patience) return kTrainDiverged;
    }
    return kTrainOk;
}

TrainStatus Trainer::run() {
    const auto& S = cfg_.sched;
    if (model_.emission_mode) return run_stage(Stage::kScene, S.scene_steps);
    if (run_stage(Stage::kScene, S.scene_steps) != kTrainOk) return kTrainDiverged;
    if (run_stage(Stage::kProjector, S.projector_steps) != kTrainOk) return kTrainDiverged;
    if (run_stage(Stage::kFinetune, S.finetune_steps) != kTrainOk) return kTrainDiverged;
    return kTrainOk;
}

// ------------------------------------------------------------- resume state

namespace {

template <typename T>
void wr(std::ostream& s, const T& v) {
    s.write(reinterpret_cast<const char*>(&v), sizeof v);
}
template <typename T>
void rd(std::istream& s, T& v) {
    s.read(reinterpret_cast<char*>(&v), sizeof v);
}

void wr_vec(std::ostream& s, const std::vector<real>& v) {
    wr(s, uint64_t(v.size()));
    s.write(reinterpret_cast<const char*>(v.data()), std::streamsize(v.size() * sizeof(real)));
}
void rd_vec(std::istream& s, std::vector<real>& v) {
    uint64_t n = 0;
    rd(s, n);
    v.resize(n);
    s.read(reinterpret_cast<char*>(v.data()), std::streamsize(n * sizeof(real)));
}

void wr_grid(std::ostream& s, const VoxelGrid3& g) {
    wr(s, int32_t(g.nx));
    wr(s, int32_t(g.ny));
    wr(s, int32_t(g.nz));
    wr(s, int32_t(g.channels));
    wr(s, g.domain.lo);
    wr(s, g.domain.hi);
    wr_vec(s, g.data);
}
void rd_grid(std::istream& s, VoxelGrid3& g) {
    int32_t nx, ny, nz, c;
    rd(s, nx);
    rd(s, ny);
    rd(s, nz);
    rd(s, c);
    rd(s, g.domain.lo);
    rd(s, g.domain.hi);
    g.nx = nx;
    g.ny = ny;
    g.nz = nz;
    g.channels = c;
    rd_vec(s, g.data);
}

void wr_block(std::ostream& s, const AdamBlock& b) {
    wr(s, int64_t(b.t));
    wr_vec(s, b.m);
    wr_vec(s, b.v);
}
void rd_block(std::istream& s, AdamBlock& b) {
    int64_t t = 0;
    rd(s, t);
    b.t = t;
    rd_vec(s, b.m);
    rd_vec(s, b.v);
}

constexpr uint32_t kStateMagic = 0x50545253;  // "PTRS"

}  // namespace

void Trainer::save_state(const std::string& path) const {
    std::ofstream s(path, std::ios::binary);
    if (!s) throw std::runtime_error("cannot write " + path);
    wr(s, kStateMagic);
    wr(s, uint32_t(1));
    wr(s, int64_t(global_step_));
    wr(s, int32_t(geo_level_));
    s.write(reinterpret_cast<const char*>(rng_.state()), 4 * sizeof(uint64_t));

    const Model& M = model_;
    wr(s, M.fields.domain.lo);
    wr(s, M.fields.domain.hi);
    wr_grid(s, M.fields.density);
    wr_grid(s, M.fields.normal);
    wr_grid(s, M.fields.albedo);
    wr_grid(s, M.fields.roughness);
    wr_grid(s, M.fields.tau);
    wr(s, uint8_t(M.emission_mode));
    wr_grid(s, M.emission);

    const Pinhole& P = M.projector.optics;
    wr(s, P.fx);
    wr(s, P.fy);
    wr(s, P.cx);
    wr(s, P.cy);
    wr(s, int32_t(P.width));
    wr(s, int32_t(P.height));
    wr(s, P.rot);
    wr(s, P.trans);
    wr(s, M.projector.log_gamma);
    wr(s, M.projector.log_gain);
    wr(s, M.colight.log_gain);
    wr(s, uint8_t(M.colight.enabled));

    for (const AdamBlock* b : {&ab_density_, &ab_normal_, &ab_albedo_, &ab_rough_,
                               &ab_tau_, &ab_emission_, &ab_rot_, &ab_trans_, &ab_fx_,
                               &ab_gamma_, &ab_gain_, &ab_co_})
        wr_block(s, *b);
}

void Trainer::load_state(const std::string& path) {
    std::ifstream s(path, std::ios::binary);
    if (!s) throw std::runtime_error("cannot read " + path);
    uint32_t magic = 0, ver = 0;
    rd(s, magic);
    rd(s, ver);
    if (magic != kStateMagic || ver != 1) throw std::runtime_error("bad trainer state file");
    int64_t gs = 0;
    int32_t gl = 0;
    rd(s, gs);
    rd(s, gl);
    global_step_ = gs;
    geo_level_ = gl;
    uint64_t st[4];
    s.read(reinterpret_cast<char*>(st), sizeof st);
    rng_.set_state(st);

    Model& M = model_;
    rd(s, M.fields.domain.lo);
    rd(s, M.fields.domain.hi);
    rd_grid(s, M.fields.density);
    rd_grid(s, M.fields.normal);
    rd_grid(s, M.fields.albedo);
    rd_grid(s, M.fields.roughness);
    rd_grid(s, M.fields.tau);
    uint8_t em = 0;
    rd(s, em);
    M.emission_mode = em != 0;
    rd_grid(s, M.emission);

    Pinhole& P = M.projector.optics;
    rd(s, P.fx);
    rd(s, P.fy);
    rd(s, P.cx);
    rd(s, P.cy);
    int32_t w = 0, h = 0;
    rd(s, w);
    rd(s, h);
    P.width = w;
    P.height = h;
    rd(s, P.rot);
    rd(s, P.trans);
    rd(s, M.projector.log_gamma);
    rd(s, M.projector.log_gain);
    rd(s, M.colight.log_gain);
    uint8_t ce = 0;
    rd(s, ce);
    M.colight.enabled = ce != 0;

    for (AdamBlock* b : {&ab_density_, &ab_normal_, &ab_albedo_, &ab_rough_, &ab_tau_,
                         &ab_emission_, &ab_rot_, &ab_trans_, &ab_fx_, &ab_gamma_,
                         &ab_gain_, &ab_co_})
        rd_block(s, *b);
    if (!s) throw std::runtime_error("truncated trainer state file");
}

Model make_emission_model(const AABB& domain, int geo_res, int emis_res,
                          const ProjectorDevice& projector, const ColocatedLight& colight) {
    Model m;
    m.fields = FieldSet::create(domain, geo_res, 4, 4);
    m.projector = projector;
    m.colight = colight;
    m.emission_mode = true;
    m.emission = VoxelGrid3(emis_res, 3, domain);  // raw 0 -> sigmoid 0.5
    return m;
}

}  // namespace procam
