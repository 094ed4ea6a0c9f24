// SPDX-License-Identifier: Apache-2.0
#include "procam/applications.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>

#include "procam/metrics.hpp"
#include "procam/parallel.hpp"

namespace procam {

Image build_edit_mask(const Model& model, const Pinhole& view, real tau_threshold,
                      real opacity_threshold, const RenderOptions* opt) {
    RenderOptions o;
    if (opt) o = *opt;
    o.tr_mode = TrMode::kMarched;
    o.stratified = false;
    // the mask only reads opacity and projector transmittance; attach a
    // flood-white pattern so the projector path is evaluated regardless of
    // what (if anything) is currently loaded
    Model m = model;
    Pattern white = flood(m.projector.optics.width, m.projector.optics.height, 1.0);
    m.projector.pattern = &white.image;
    RenderBuffers buf = render_image(m, view, o);
    Image mask(view.width, view.height, 1);
    for (int y = 0; y < view.height; ++y)
        for (int x = 0; x < view.width; ++x) {
            real op = buf.opacity.at(x, y, 0);
            if (op <= opacity_threshold) continue;
            // composited projector transmittance, renormalized to the surface
            real tp = buf.tauproj.at(x, y, 0) / std::max(op, real(1e-9));
            if (tp > tau_threshold) mask.at(x, y, 0) = 1.0;
        }
    return mask;
}

namespace {

struct ScaledTarget {
    Pinhole view;
    Image target;  // beta-scaled
    Image mask;    // may be empty: whole frame
    std::size_t mask_pixels = 0;
};

Image run_pattern_fit(const Model& model, std::vector<ScaledTarget> targets, int steps,
                      real lr, uint64_t seed, int pat_w, int pat_h,
                      ProjectionReport* report) {
    if (targets.empty()) throw std::invalid_argument("pattern fit needs targets");
    uint64_t frozen = model.checksum();

    Model m = model;  // local handle; all trainable parameters stay frozen
    Image pattern(pat_w, pat_h, 3);
    pattern.fill(0.5);
    m.projector.pattern = &pattern;
    m.colight.enabled = false;  // deployment: only the projector shines

    std::vector<real> logits(std::size_t(pat_w) * pat_h * 3, 0.0);
    AdamBlock adam;
    AdamParams ap;
    Rng rng(seed ^ 0x636f6d70ULL);

    RenderOptions opt;
    opt.colight = false;
    opt.tr_mode = TrMode::kLearned;  // fast during the fit; report uses marched

    const int batch = 512;
    const int per_view = std::max(1, batch / int(targets.size()));
    const real floor = 0.05;
    real initial = -1;
    int streak = 0;
    bool diverged = false;

    int workers = thread_count();
    std::vector<std::vector<real>> wg(workers);

    struct RaySpec {
        int view, x, y;
    };
    std::vector<RaySpec> rays;

    real loss = 0;
    for (int step = 0; step < steps; ++step) {
        real lr_scale =
            floor + (1 - floor) * 0.5 * (1 + std::cos(M_PI * real(step) / std::max(1, steps)));
        ap.lr = lr * lr_scale;

        rays.clear();
        std::size_t in_mask = 0;
        for (int v = 0; v < int(targets.size()); ++v) {
            const ScaledTarget& t = targets[v];
            for (int i = 0; i < per_view; ++i) {
                int x = int(rng.below(t.target.width));
                int y = int(rng.below(t.target.height));
                if (t.mask.data.empty() || t.mask.at(x, y, 0) > 0.5) {
                    rays.push_back({v, x, y});
                    ++in_mask;
                }
            }
        }
        if (rays.empty()) continue;
        real norm_img = 3.0 * real(in_mask);

        for (auto& g : wg) g.assign(logits.size(), 0.0);
        std::vector<real> wloss(workers, 0.0);

        parallel_for(rays.size(), [&](std::size_t i0, std::size_t i1, int w) {
            RayRecord rec;
            ModelGrads g;
            g.pattern.swap(wg[w]);  // accumulate straight into the worker slot
            GradRequest req;
            req.pattern = true;
            for (std::size_t i = i0; i < i1; ++i) {
                const RaySpec& rs = rays[i];
                const ScaledTarget& t = targets[rs.view];
                Rng r = rng.fork(i);
                render_ray(m, t.view.ray(real(rs.x), real(rs.y)), opt,
                           opt.stratified ? &r : nullptr, rec);
                Vec3 e = rec.color - t.target.rgb(rs.x, rs.y);
                wloss[w] += dot(e, e) / norm_img;
                RayUpstream up;
                up.d_color = e * (2.0 / norm_img);
                render_ray_backward(m, opt, rec, up, req, g);
            }
            g.pattern.swap(wg[w]);
        });

        std::vector<real> grad(logits.size(), 0.0);
        loss = 0;
        for (int w = 0; w < workers; ++w) {
            loss += wloss[w];
            for (std::size_t k = 0; k < grad.size(); ++k) grad[k] += wg[w][k];
        }
        // chain through the sigmoid that maps logits to the projected image
        for (std::size_t k = 0; k < grad.size(); ++k) {
            real s = pattern.data[k];
            grad[k] *= s * (1 - s);
        }

        adam.step(logits.data(), grad.data(), logits.size(), ap);
        for (std::size_t k = 0; k < logits.size(); ++k) pattern.data[k] = sigmoid(logits[k]);

        bool bad = !std::isfinite(loss);
        if (!bad) {
            if (initial < 0) initial = std::max(loss, real(1e-12));
            bad = loss > 10.0 * initial;
        }
        streak = bad ? streak + 1 : 0;
        if (streak >= 200) {
            diverged = true;
            break;
        }
    }

    if (report) {
        report->final_loss = loss;
        report->steps = steps;
        report->diverged = diverged;
        RenderOptions ro = opt;
        ro.tr_mode = TrMode::kMarched;
        ro.stratified = false;
        for (const auto& t : targets) {
            RenderBuffers buf = render_image(m, t.view, ro);
            report->psnr_whole.push_back(psnr_std(buf.color, t.target));
            if (!t.mask.data.empty())
                report->psnr_masked.push_back(psnr_std_masked(buf.color, t.target, t.mask));
            else
                report->psnr_masked.push_back(report->psnr_whole.back());
        }
    }
    assert(model.checksum() == frozen);
    (void)frozen;
    return pattern;
}

std::vector<ScaledTarget> scale_targets(const std::vector<EditTarget>& targets, real beta) {
    std::vector<ScaledTarget> out;
    for (const auto& t : targets) {
        ScaledTarget s;
        s.view = t.view;
        s.target = t.target;
        for (auto& v : s.target.data) v *= beta;
        s.mask = t.mask;
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace

Image compensate(const Model& model, const std::vector<EditTarget>& targets, real beta,
                 int steps, real lr, uint64_t seed, int pat_w, int pat_h,
                 ProjectionReport* report) {
    return run_pattern_fit(model, scale_targets(targets, beta), steps, lr, seed, pat_w,
                           pat_h, report);
}

Image multiview_project(const Model& model, const std::vector<EditTarget>& targets,
                        real beta, real tau_threshold, int steps, real lr, uint64_t seed,
                        int pat_w, int pat_h, ProjectionReport* report) {
    std::vector<ScaledTarget> scaled = scale_targets(targets, beta);
    for (auto& t : scaled) {
        Image em = build_edit_mask(model, t.view, tau_threshold);
        if (t.mask.data.empty()) {
            t.mask = em;
        } else {
            for (std::size_t k = 0; k < em.data.size(); ++k)
                if (em.data[k] <= 0.5) t.mask.data[k] = 0.0;
        }
    }
    return run_pattern_fit(model, std::move(scaled), steps, lr, seed, pat_w, pat_h, report);
}

Image xray(const Model& model, const Pinhole& camera_view, const Pinhole& virtual_view,
           const RenderOptions* opt_in) {
    RenderOptions opt;
    if (opt_in) opt = *opt_in;
    opt.stratified = false;
    opt.tr_mode = TrMode::kMarched;

    // pass 1: desired appearance from the virtual viewpoint (flood white)
    Model m = model;
    Pattern white = flood(m.projector.optics.width, m.projector.optics.height, 1.0);
    m.projector.pattern = &white.image;
    Image desired = render_image(m, virtual_view, opt).color;
    // partial visibility from the real camera scales every observed response;
    // the opacity buffer supplies that factor per camera pixel
    Image cam_opacity = render_image(m, camera_view, opt).opacity;

    // pass 2: camera at the projector; a virtual projector at the real
    // camera's pose shines the desired view.  Dividing the reprojected
    // target by the reflectance transfer toward the real projector and
    // inverting the response yields the pattern in closed form.
    const Pinhole& po = model.projector.optics;
    Image out(po.width, po.height, 3);
    Vec3 gain = model.projector.gain();
    real inv_gamma = 1.0 / model.projector.gamma();
    Vec3 proj_center = po.center();
    Vec3 cam_center = camera_view.center();

    parallel_for(std::size_t(po.height), [&](std::size_t y0, std::size_t y1, int) {
        RayRecord rec;
        for (std::size_t y = y0; y < y1; ++y)
            for (int x = 0; x < po.width; ++x) {
                Ray ray = po.ray(real(x), real(y));
                real t0, t1;
                if (!intersect_aabb(model.fields.domain, ray.origin, ray.dir, 1e-9, t0, t1))
                    continue;
                march(model.fields, ray, opt.n_primary, std::max(t0, real(0)), t1, false,
                      nullptr, rec);
                Vec3 want{0, 0, 0}, transfer{0, 0, 0};
                for (const auto& s : rec.samples) {
                    if (s.weight <= 0) continue;
                    auto pr = camera_view.project(s.p);
                    if (!pr.in_front() || !camera_view.pixel_in_bounds(pr.pix)) continue;
                    want += desired.bilinear(pr.pix.x, pr.pix.y) * s.weight;

                    auto ns = model.fields.normal.sample(s.p);
                    auto as_ = model.fields.albedo.sample(s.p);
                    auto rs = model.fields.roughness.sample(s.p);
                    if (!ns.inside || !as_.inside || !rs.inside) continue;
                    real nr[3], ar[3], rr;
                    model.fields.normal.eval(ns, nr);
                    model.fields.albedo.eval(as_, ar);
                    model.fields.roughness.eval(rs, &rr);
                    Vec3 n = normalized(Vec3{nr[0], nr[1], nr[2]});
                    Vec3 alb{sigmoid(ar[0]), sigmoid(ar[1]), sigmoid(ar[2])};
                    real rho = model.fields.activate_rough(rr);
                    real taup = transmittance_to_projector(s.p, model.fields, model.projector,
                                                          TrMode::kMarched, opt.n_secondary);
                    Vec3 v = normalized(cam_center - s.p);
                    Vec3 l = normalized(proj_center - s.p);
                    real vis = cam_opacity.bilinear(pr.pix.x, pr.pix.y).x;
                    // camera-observed color per unit pattern irradiance
                    transfer += shade({v, l, n, alb, rho, Vec3{taup, taup, taup}}) *
                                (s.weight * vis);
                }
                Vec3 pat;
                for (int c = 0; c < 3; ++c) {
                    real e = transfer[c] > 1e-6 ? want[c] / transfer[c] : 0.0;
                    pat[c] = clamp01(std::pow(std::max(e / gain[c], real(0)), inv_gamma));
                }
                out.set_rgb(x, int(y), pat);
            }
    });
    return out;
}

}  // namespace procam
