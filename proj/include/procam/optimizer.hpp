// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "procam/losses.hpp"
#include "procam/scenes.hpp"

namespace procam {

struct AdamParams {
    real lr = 1e-3, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
};

// First/second moment state for one parameter block.  Steps are counted per
// block so late-activated blocks get fresh bias correction.
struct AdamBlock {
    std::vector<real> m, v;
    long t = 0;

    void resize(std::size_t n);  // zero-fills moments when the size changes
    void step(real* p, const real* g, std::size_t n, const AdamParams& ap);
};

enum class Stage { kScene = 0, kProjector = 1, kFinetune = 2 };
const char* stage_name(Stage s);

// Step counts, learning rates and the coarse-to-fine ladder.
struct ScheduleConfig {
    int scene_steps = 600;
    int projector_steps = 300;
    int finetune_steps = 600;
    int batch_rays = 512;

    real lr_fields = 1e-2;
    real lr_rot = 1e-3;        // projector orientation (axis-angle increment)
    real lr_trans = 1e-2;      // projector translation
    real lr_intrinsics = 1e-3; // focal length (fy tied to fx)
    real lr_color = 1e-2;      // log gamma, log gains (projector + co-located)
    real lr_emission = 1e-2;
    real cosine_floor = 0.05;  // lr fraction at the end of each stage

    // geometry grids are upsampled to geo_res[k] when the scene stage passes
    // fraction geo_at[k]; material/tau grids keep a fixed resolution
    std::vector<int> geo_res = {16, 32};
    std::vector<real> geo_at = {0.0, 0.4};
    int mat_res = 24;
    int tau_res = 16;

    real diverge_factor = 10.0;
    int diverge_patience = 200;
};

struct TrainConfig {
    ScheduleConfig sched;
    LossWeights weights;
    RenderOptions render;
    uint64_t seed = 0;
    std::string run_dir;  // when set: telemetry.csv + stage checkpoints

    bool optimize_projector_pose = true;
    bool optimize_projector_intrinsics = true;
    bool optimize_projector_color = true;
    bool optimize_colight = true;
};

// One capture view with its images resident in memory.
struct ViewData {
    Pinhole cam;
    Image img, mask, pattern;
    std::string pattern_kind;
    bool colight = true;
};

std::vector<ViewData> load_views(const CaptureSet& cs);

enum TrainStatus { kTrainOk = 0, kTrainDiverged = 3 };

// Three-step schedule:
//   1. scene: black-pattern views, field grids (+ co-located gain), all terms
//   2. projector: all views, image term only, pose/focal/gamma/gain
//   3. fine-tune: everything together
// A model with emission_mode set instead runs a single stage fitting density
// and emissive color to all views (the shadow-free baseline).
class Trainer {
  public:
    Trainer(Model model, std::vector<ViewData> views, const TrainConfig& cfg);

    TrainStatus run();
    TrainStatus run_stage(Stage st, int steps);
    // One batch; returns the weighted total loss.
    LossTerms train_step(Stage st, int step, int total_steps);

    Model& model() { return model_; }
    const Model& model() const { return model_; }
    const TrainConfig& config() const { return cfg_; }
    long global_step() const { return global_step_; }

    // Bit-exact resume: raw parameters, moments, counters and RNG state.
    void save_state(const std::string& path) const;
    void load_state(const std::string& path);

  private:
    struct Batch {
        int view = 0;
        std::vector<Vec2> pix;
        std::vector<bool> in_mask;
        BatchNorms norms;
    };

    std::vector<int> allowed_views(Stage st) const;
    void sample_batch(Stage st, Batch& b);
    void maybe_upsample(int scene_step);
    void apply_updates(Stage st, real lr_scale);
    void telemetry_row(Stage st, const LossTerms& t, real lr_scale);

    Model model_;
    std::vector<ViewData> views_;
    TrainConfig cfg_;
    Rng rng_;
    long global_step_ = 0;
    int geo_level_ = 0;

    ModelGrads grads_;
    std::vector<ModelGrads> worker_grads_;
    AdamBlock ab_density_, ab_normal_, ab_albedo_, ab_rough_, ab_tau_, ab_emission_;
    AdamBlock ab_rot_, ab_trans_, ab_fx_, ab_gamma_, ab_gain_, ab_co_;
};

// Baseline model: emissive volume (density + per-voxel color), no materials.
Model make_emission_model(const AABB& domain, int geo_res, int emis_res,
                          const ProjectorDevice& projector, const ColocatedLight& colight);

}  // namespace procam
