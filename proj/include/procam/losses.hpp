// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

#include "procam/renderer.hpp"

namespace procam {

// Weights for the training objectives.  The renders-vs-capture term is an
// MSE over masked pixels; tr distills the learned transmittance toward the
// marched one; n1/n2 regularize normals; fog pushes per-sample
// transmittance toward {0,1} with parabola coefficient b; bg forces
// opacity to zero outside the foreground mask.
struct LossWeights {
    real w_img = 1.0;
    real w_bg = 1.0;
    real w_tr = 0.1;
    real w_n1 = 3e-2;
    real w_n2 = 1e-1;
    real w_fog = 1e-2;
    real b = 1.0;
};

// Unweighted term values (already normalized to batch means).
struct LossTerms {
    real img = 0, bg = 0, tr = 0, n1 = 0, n2 = 0, fog = 0;

    real total(const LossWeights& w) const {
        return w.w_img * img + w.w_bg * bg + w.w_tr * tr + w.w_n1 * n1 +
               w.w_n2 * n2 + w.w_fog * fog;
    }
    LossTerms& operator+=(const LossTerms& o) {
        img += o.img; bg += o.bg; tr += o.tr;
        n1 += o.n1; n2 += o.n2; fog += o.fog;
        return *this;
    }
};

// Fixed denominators so every term is a batch mean.  Sample-level terms use
// batch_rays * n_primary; rays that miss the bounds or saturate early simply
// contribute zero, keeping the denominators known before rendering.
struct BatchNorms {
    real img = 1;      // 3 * (#mask rays), >= 1
    real bg = 1;       // #background rays, >= 1
    real rays = 1;     // batch size
    real samples = 1;  // batch size * samples per ray

    static BatchNorms make(std::size_t mask_rays, std::size_t bg_rays,
                           std::size_t batch_rays, int n_primary) {
        BatchNorms n;
        n.img = real(3 * (mask_rays ? mask_rays : 1));
        n.bg = real(bg_rays ? bg_rays : 1);
        n.rays = real(batch_rays ? batch_rays : 1);
        n.samples = n.rays * real(n_primary > 0 ? n_primary : 1);
        return n;
    }
};

// Which terms are active (the three-step schedule toggles these).
struct LossFlags {
    bool img = true;
    bool bg = true;
    bool tr = true;      // requires RenderOptions::eval_tau_primary
    bool normals = true;
    bool fog = true;
};

// Owned storage behind a RayUpstream.
struct RayAdjoints {
    Vec3 d_color{0, 0, 0};
    real d_tau_end = 0;
    std::vector<real> d_tau, d_tau_hat;
    std::vector<Vec3> d_normal;

    void reset(std::size_t n_samples);
    RayUpstream view() const {
        RayUpstream u;
        u.d_color = d_color;
        u.d_tau_end = d_tau_end;
        u.d_tau = &d_tau;
        u.d_normal = &d_normal;
        u.d_tau_hat = &d_tau_hat;
        return u;
    }
};

// Per-ray loss terms and, when adj is non-null, the matching upstream
// adjoints of total() w.r.t. the ray outputs.  Detach rules: the tr target
// tau, the n1 weights W and targets n-hat, and the n2 weights W are all
// treated as constants.
LossTerms ray_loss(const FieldSet& fields, const RayRecord& rec, const Vec3& c_gt,
                   bool in_mask, const LossWeights& w, const LossFlags& flags,
                   const BatchNorms& norms, RayAdjoints* adj);

// Standalone batch-mean helpers (shared by tests and reporting).
real loss_img_mse(const std::vector<Vec3>& rendered, const std::vector<Vec3>& captured);
real loss_tr_term(const std::vector<real>& tau_hat, const std::vector<real>& tau);
real loss_fog_term(const std::vector<real>& tau, real b);

}  // namespace procam
