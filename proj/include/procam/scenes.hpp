// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "procam/geometry.hpp"
#include "procam/model.hpp"
#include "procam/patterns.hpp"

namespace procam {

// Analytic test scenes built from signed-distance primitives.  These provide
// the independent ground truth the training pipeline must reconstruct: the
// captures are ray traced against the SDF surface, not rendered through the
// volumetric model.
struct Primitive {
    enum Kind { kSphere, kBox, kTorus } kind = kSphere;
    Vec3 center;
    Quat rot;           // world->local
    real radius = 0.5;  // sphere/torus major radius
    real minor = 0.1;   // torus minor radius
    Vec3 half{0.5, 0.5, 0.5};  // box half extents

    // procedural material: checker between two albedos (checker=0: solid a)
    Vec3 albedo_a{0.6, 0.6, 0.6}, albedo_b{0.6, 0.6, 0.6};
    real checker_scale = 0;  // cells per unit, in local coordinates
    // roughness: rough_a on local x < split_x, rough_b otherwise
    real rough_a = 0.5, rough_b = 0.5, split_x = -1e9;

    real sdf(const Vec3& p_world) const;
    Vec3 albedo_at(const Vec3& p_world) const;
    real rough_at(const Vec3& p_world) const;
};

struct AnalyticScene {
    std::string name;
    std::vector<Primitive> prims;
    AABB bounds;

    real sdf(const Vec3& p) const;
    int nearest_prim(const Vec3& p) const;
    // normalized SDF gradient by central differences
    Vec3 normal(const Vec3& p, real eps = 1e-5) const;
    Vec3 albedo_at(const Vec3& p) const { return prims[nearest_prim(p)].albedo_at(p); }
    real rough_at(const Vec3& p) const { return prims[nearest_prim(p)].rough_at(p); }
};

// Committed fixtures: "slab" (textured plane + occluding box, exercises
// projector shadows), "shiny-patch" (sphere with a piecewise roughness map),
// "teapot-analog" (two spheres + a handle torus with a self-occluded face).
AnalyticScene make_scene(const std::string& name);
std::vector<std::string> scene_names();

struct SphereTraceResult {
    bool hit = false;
    real t = 0;
    Vec3 p;
};
SphereTraceResult sphere_trace(const AnalyticScene& scene, const Ray& ray,
                               int max_steps = 256, real eps = 1e-6);

// Surface ray tracer sharing the volumetric renderer's BRDF: first SDF hit,
// projector irradiance with a sphere-traced shadow ray, co-located light
// with inverse-square falloff.  mask (optional) gets 1 on hit, 0 otherwise.
Image ground_truth_render(const AnalyticScene& scene, const Pinhole& cam,
                          const ProjectorDevice* proj, const Vec3& co_gain,
                          Image* mask = nullptr);

struct CaptureView {
    Pinhole cam;
    std::string pattern_kind;  // white | black | lollipop
    std::string pattern_file, image_file, mask_file;
    bool colight = true;
};

struct CaptureSet {
    std::string scene_name;
    uint64_t seed = 0;
    std::string dir;
    AABB domain;  // suggested reconstruction bounds
    std::vector<CaptureView> views;
    // ground-truth projector (evaluation / baseline injection only)
    bool has_projector_gt = false;
    Pinhole projector_optics_gt;
    real proj_log_gamma_gt = 0;
    Vec3 proj_log_gain_gt{0, 0, 0};
    Vec3 co_log_gain_gt{0, 0, 0};
};

struct CaptureOptions {
    int n_views = 12;
    std::string protocol = "triplet";  // triplet | cycled
    int width = 96, height = 96;
    int pattern_size = 128;
    int lollipop_pops = 16;
};

// Renders the corpus: hemisphere orbit of cameras looking at the scene
// center, each view lit by the protocol's pattern plus the co-located
// light; writes images (PFM + PNG preview), exact masks, patterns, and
// capture.json into out_dir.
CaptureSet generate_capture(const AnalyticScene& scene, const CaptureOptions& opt,
                            uint64_t seed, const std::string& out_dir);

CaptureSet load_capture(const std::string& dir);
void save_capture_manifest(const CaptureSet& cs);

// Ground-truth projector rig used by generate_capture (deterministic per seed).
void default_projector_rig(const AnalyticScene& scene, uint64_t seed, Pinhole& optics,
                           real& log_gamma, Vec3& log_gain, Vec3& co_log_gain,
                           int pattern_size);

// Poses on the upper hemisphere looking at the bounds center.
Pinhole orbit_camera(const AnalyticScene& scene, real azimuth, real elevation,
                     int width, int height);

// Bakes the analytic scene into field grids (soft density ramp of the given
// sharpness around the surface, materials and normals sampled per node).
// Projector and lights are left default.  Useful as a reference model for
// the downstream projection tasks without running the trainer.
Model model_from_scene(const AnalyticScene& scene, int geo_res, int mat_res,
                       real sharpness = 40.0);

struct ReconstructionMetrics {
    real normal_err_deg_mean = 0, normal_err_deg_median = 0;
    real albedo_mse = 0;
    real rough_mse = 0;
    real depth_mae = 0;
    int n_probes = 0;
};

// Probes the trained fields on sphere-traced surface points and compares
// with the analytic materials and geometry.
ReconstructionMetrics evaluate_reconstruction(const Model& model,
                                              const AnalyticScene& scene,
                                              int n_probes, uint64_t seed);

}  // namespace procam
