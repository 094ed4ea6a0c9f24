// SPDX-License-Identifier: Apache-2.0
#include "procam/losses.hpp"

namespace procam {

void RayAdjoints::reset(std::size_t n_samples) {
    d_color = {0, 0, 0};
    d_tau_end = 0;
    d_tau.assign(n_samples, 0.0);
    d_tau_hat.assign(n_samples, 0.0);
    d_normal.assign(n_samples, Vec3{0, 0, 0});
}

LossTerms ray_loss(const FieldSet& fields, const RayRecord& rec, const Vec3& c_gt,
                   bool in_mask, const LossWeights& w, const LossFlags& flags,
                   const BatchNorms& norms, RayAdjoints* adj) {
    LossTerms out;
    std::size_t n = rec.samples.size();
    if (adj) adj->reset(n);

    if (flags.img && in_mask) {
        Vec3 e = rec.color - c_gt;
        out.img = dot(e, e) / norms.img;
        if (adj) adj->d_color += e * (2.0 * w.w_img / norms.img);
    }
    if (flags.bg && !in_mask) {
        // opacity -> 0 outside the foreground
        real op = rec.opacity;
        out.bg = op * op / norms.bg;
        if (adj) adj->d_tau_end += -2.0 * op * w.w_bg / norms.bg;  // op = 1 - tau_end
    }
    if (!rec.hit_box || n == 0) return out;

    if (flags.tr) {
        for (std::size_t i = 0; i < n; ++i) {
            real d = rec.samples[i].tau_hat - rec.samples[i].tau;  // target detached
            out.tr += d * d / norms.samples;
            if (adj) adj->d_tau_hat[i] += 2.0 * d * w.w_tr / norms.samples;
        }
    }
    if (flags.normals) {
        Vec3 acc{0, 0, 0};  // sum W_i n_i for the orientation term
        for (std::size_t i = 0; i < n; ++i) {
            const SampleRec& s = rec.samples[i];
            acc += s.n * s.weight;
            auto nhat = fields.density_gradient_normal(s.p);
            if (!nhat) continue;  // degenerate density gradient: skip in n1
            Vec3 d = s.n - *nhat;
            out.n1 += s.weight * dot(d, d) / norms.samples;
            if (adj) adj->d_normal[i] += d * (2.0 * s.weight * w.w_n1 / norms.samples);
        }
        real back = dot(acc, rec.ray.dir);  // camera->scene: positive = back-facing
        if (back > 0) {
            out.n2 = back / norms.rays;
            if (adj)
                for (std::size_t i = 0; i < n; ++i)
                    adj->d_normal[i] +=
                        rec.ray.dir * (rec.samples[i].weight * w.w_n2 / norms.rays);
        }
    }
    if (flags.fog) {
        for (std::size_t i = 0; i < n; ++i) {
            real tau = rec.samples[i].tau;
            out.fog += -w.b * (tau * tau - tau) / norms.samples;
            if (adj) adj->d_tau[i] += -w.w_fog * w.b * (2 * tau - 1) / norms.samples;
        }
    }
    return out;
}

real loss_img_mse(const std::vector<Vec3>& rendered, const std::vector<Vec3>& captured) {
    if (rendered.empty()) return 0;
    real acc = 0;
    for (std::size_t i = 0; i < rendered.size(); ++i) {
        Vec3 e = rendered[i] - captured[i];
        acc += dot(e, e);
    }
    return acc / (3.0 * real(rendered.size()));
}

real loss_tr_term(const std::vector<real>& tau_hat, const std::vector<real>& tau) {
    if (tau_hat.empty()) return 0;
    real acc = 0;
    for (std::size_t i = 0; i < tau_hat.size(); ++i) {
        real d = tau_hat[i] - tau[i];
        acc += d * d;
    }
    return acc / real(tau_hat.size());
}

real loss_fog_term(const std::vector<real>& tau, real b) {
    if (tau.empty()) return 0;
    real acc = 0;
    for (real t : tau) acc += t * t - t;
    return -b * acc / real(tau.size());
}

}  // namespace procam
