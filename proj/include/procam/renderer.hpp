// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "procam/brdf.hpp"
#include "procam/model.hpp"
#include "procam/rng.hpp"

namespace procam {

enum class TrMode { kMarched, kLearned };

struct RenderOptions {
    int n_primary = 64;
    int n_secondary = 32;
    bool stratified = true;  // false: fixed midpoints
    TrMode tr_mode = TrMode::kLearned;
    bool colight = true;
    bool literal_combined_brdf = false;  // one BRDF term fed L_proj+L_co
    bool eval_tau_primary = false;       // also evaluate tau-hat along the ray (training)
    real d2_floor = 1e-6;
    real f0 = kDefaultF0;
};

// Everything the backward pass needs about one sample.
struct SampleRec {
    real t = 0, delta = 0, u = 0;  // u: stratified coordinate in [0,1)
    Vec3 p;
    real sig_raw = 0, sigma = 0, alpha = 0, tau = 1, weight = 0;
    Vec3 n_raw, n;
    Vec3 alb_raw, albedo;
    real rho_raw = 0, rho = 0;
    // projector path
    bool in_frustum = false;
    Vec2 pix;
    Vec3 pat, irr_proj;  // pattern sample; G*pat^gamma
    real tau_proj = 1;
    real tau_proj_s = 0;  // pre-sigmoid (learned mode)
    Vec3 light_dir;       // unit, sample -> projector
    // co-located light
    Vec3 irr_co;
    real d2 = 0;
    // tau-hat along the primary ray (training-time distillation pairs)
    real tau_hat_s = 0, tau_hat = 1;
    Vec3 emis_raw, emis;  // baseline mode
    Vec3 color;           // C(s_i)
};

struct RayRecord {
    Ray ray;
    bool hit_box = false;
    real near = 0, far = 0;
    int entry_axis = -1, exit_axis = -1;
    std::vector<SampleRec> samples;
    real tau_end = 1;
    Vec3 color;
    real depth = 0, opacity = 0;
};

// Which parameter blocks receive gradients.
struct GradRequest {
    bool fields = false;          // density/normal/albedo/roughness grids
    bool tau_field = false;       // tau-hat grid
    bool projector_pose = false;  // omega, translation, fx
    bool projector_color = false; // log gamma, log gain
    bool colight = false;         // co-located log gain
    bool emission = false;
    bool pattern = false;         // projected image (compensation)
    bool camera = false;          // per-view pose
    int view_index = -1;          // slot in ModelGrads::cam_* when camera set
    const Pinhole* cam = nullptr; // pose of the view (required when camera set)
};

// Upstream adjoints for one ray.  Per-sample vectors may be empty (= zero).
struct RayUpstream {
    Vec3 d_color;
    real d_tau_end = 0;
    const std::vector<real>* d_tau = nullptr;      // fog loss etc.
    const std::vector<Vec3>* d_normal = nullptr;   // normal losses
    const std::vector<real>* d_tau_hat = nullptr;  // transmittance distillation
};

// Stratified march + full light transport.  rng may be null (midpoints).
void render_ray(const Model& m, const Ray& ray, const RenderOptions& o, Rng* rng,
                RayRecord& rec);

void render_ray_backward(const Model& m, const RenderOptions& o, const RayRecord& rec,
                         const RayUpstream& up, const GradRequest& req, ModelGrads& g);

// Density-only march (alpha/transmittance/weight per sample; no shading).
void march(const FieldSet& fields, const Ray& ray, int n_samples, real near, real far,
           bool stratified, Rng* rng, RayRecord& rec);

// tau between p and the projector: marched re-uses the compositing product
// along the secondary ray; learned queries the tau-hat field.
real transmittance_to_projector(const Vec3& p, const FieldSet& fields,
                                const ProjectorDevice& proj, TrMode mode,
                                int n_secondary = 32);

struct RenderBuffers {
    Image color, depth, opacity, normal, albedo, rough, tauproj;
};

Vec3 render_pixel(const Model& m, const Pinhole& cam, real px, real py,
                  const RenderOptions& o, Rng* rng);

// Full-frame render with auxiliary attribute buffers (weights composited over
// normals, albedo, roughness, and projector transmittance).
RenderBuffers render_image(const Model& m, const Pinhole& cam, const RenderOptions& o,
                           uint64_t seed = 0);

}  // namespace procam
