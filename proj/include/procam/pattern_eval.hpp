// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "procam/optimizer.hpp"

namespace procam {

// One self-calibration trial: perturb the projector pose, rerun the
// projector stage against captures lit by the family's pattern, record the
// recovered pose error.
struct PatternTrial {
    std::string family;
    int trial = 0;
    real perturb_rot_deg = 0, perturb_trans = 0;
    real final_l2 = 0;       // projector center error
    real final_rot_rad = 0;  // rotation distance to the true pose
    bool converged = true;
};

struct PatternFamilyStats {
    std::string family;
    real l2_mean = 0, l2_median = 0, l2_max = 0;
    real rot_mean = 0, rot_median = 0, rot_max = 0;
    int n = 0;
};

struct PatternEvalOptions {
    int n_views = 4;
    int width = 48, height = 48;
    int pattern_size = 64;
    int n_pops = 9;
    int steps = 150;
    int batch_rays = 384;
    int n_primary = 24, n_secondary = 8;
};

// Families: any of "lollipop", "white", "black", "noise", "circles".
// The scene fields are frozen (baked from the fixture, or the given trained
// model); targets are the frozen model's own renders at the reference pose,
// so zero perturbation sits exactly at the optimum.  Deterministic per seed.
std::vector<PatternTrial> evaluate_pattern(const std::vector<std::string>& families,
                                           const AnalyticScene& scene, int n_trials,
                                           const std::vector<std::pair<real, real>>&
                                               perturb_levels,  // (deg, translation)
                                           uint64_t seed, const PatternEvalOptions& opt,
                                           const Model* trained_frozen = nullptr);

std::vector<PatternFamilyStats> pattern_eval_stats(const std::vector<PatternTrial>& table);

// CSV: family, trial, perturb_rot_deg, perturb_trans, final_l2, final_rot_rad, converged
void write_pattern_eval_csv(const std::string& path, const std::vector<PatternTrial>& table);

Pattern make_family_pattern(const std::string& family, int size, int n_pops, uint64_t seed);

}  // namespace procam
