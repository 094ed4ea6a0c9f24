// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "procam/optimizer.hpp"

namespace procam {

// One desired appearance: viewpoint + target image (+ optional mask; an
// empty mask means the whole frame counts).
struct EditTarget {
    Pinhole view;
    Image target;
    Image mask;
};

struct ProjectionReport {
    std::vector<real> psnr_whole, psnr_masked;  // per view, final marched render
    real final_loss = 0;
    int steps = 0;
    bool diverged = false;
};

// Pixels where the view sees any density and the surface is reachable by the
// projector (composited projector transmittance above the threshold).
Image build_edit_mask(const Model& model, const Pinhole& view, real tau_threshold = 0.5,
                      real opacity_threshold = 1e-3, const RenderOptions* opt = nullptr);

// Gradient fit of a projection image to the targets.  The pattern is
// sigmoid(logits) with logits starting at zero (mid-gray); every model
// parameter stays frozen.  Targets are pre-scaled by beta so the projector's
// range can express them; reported PSNRs compare against the scaled targets.
Image compensate(const Model& model, const std::vector<EditTarget>& targets, real beta,
                 int steps, real lr, uint64_t seed, int pat_w, int pat_h,
                 ProjectionReport* report = nullptr);

// Same optimization restricted to per-view edit masks built from the model
// (user masks are intersected when present).  A single view reduces exactly
// to compensate on that view.
Image multiview_project(const Model& model, const std::vector<EditTarget>& targets,
                        real beta, real tau_threshold, int steps, real lr, uint64_t seed,
                        int pat_w, int pat_h, ProjectionReport* report = nullptr);

// Occluder-bypass projection without optimization.  Pass 1 renders the
// desired view from the virtual viewpoint (flood-white projector +
// co-located light).  Pass 2 swaps roles: a camera at the projector renders
// the scene while a virtual projector at the real camera's pose shines the
// desired view; dividing by the per-pixel reflectance transfer and inverting
// the projector response (gain, gamma) yields the projection image directly.
Image xray(const Model& model, const Pinhole& camera_view, const Pinhole& virtual_view,
           const RenderOptions* opt = nullptr);

}  // namespace procam
