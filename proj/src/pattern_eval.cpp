// SPDX-License-Identifier: Apache-2.0
#include "procam/pattern_eval.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

namespace procam {

Pattern make_family_pattern(const std::string& family, int size, int n_pops,
                            uint64_t seed) {
    if (family == "lollipop") return lollipop(size, size, n_pops, seed);
    if (family == "white") return flood(size, size, 1.0);
    if (family == "black") return flood(size, size, 0.0);
    if (family == "noise") return noise_pattern(size, size, seed);
    if (family == "circles") return concentric_circles(size, size, 6, seed);
    throw std::invalid_argument("unknown pattern family: " + family);
}

namespace {

uint64_t family_tag(const std::string& f) {
    uint64_t h = 1469598103934665603ULL;
    for (char c : f) h = (h ^ uint64_t(uint8_t(c))) * 1099511628211ULL;
    return h;
}

}  // namespace

std::vector<PatternTrial> evaluate_pattern(const std::vector<std::string>& families,
                                           const AnalyticScene& scene, int n_trials,
                                           const std::vector<std::pair<real, real>>&
                                               perturb_levels,
                                           uint64_t seed, const PatternEvalOptions& opt,
                                           const Model* trained_frozen) {
    // frozen scene fields shared by every trial
    Model frozen;
    if (trained_frozen) {
        frozen = *trained_frozen;
    } else {
        frozen = model_from_scene(scene, 24, 16);
        Pinhole po;
        real lg;
        Vec3 gain, cg;
        default_projector_rig(scene, seed, po, lg, gain, cg, opt.pattern_size);
        frozen.projector.optics = po;
        frozen.projector.log_gamma = lg;
        frozen.projector.log_gain = gain;
        frozen.colight.log_gain = cg;
    }
    const Pinhole po_gt = frozen.projector.optics;
    Vec3 center_gt = po_gt.center();
    Mat3 R_gt = po_gt.R();

    RenderOptions ropt;
    ropt.n_primary = opt.n_primary;
    ropt.n_secondary = opt.n_secondary;
    ropt.stratified = false;  // exact self-consistency at the true pose
    ropt.tr_mode = TrMode::kMarched;

    std::vector<PatternTrial> table;
    for (const auto& family : families) {
        for (int trial = 0; trial < n_trials; ++trial) {
            Rng trng(seed ^ family_tag(family) ^ (0x9e3779b97f4a7c15ULL * (trial + 1)));
            // pattern resolution must match the projector raster
            Pattern pat = make_family_pattern(family, po_gt.width, opt.n_pops,
                                              seed * 131 + trial);

            // targets: the frozen model's own renders at the true pose
            Model gt = frozen;
            gt.projector.pattern = &pat.image;
            std::vector<ViewData> views;
            for (int v = 0; v < opt.n_views; ++v) {
                real az = trng.uniform(0, 2 * M_PI);
                real el = deg2rad(trng.uniform(25, 60));
                ViewData vd;
                vd.cam = orbit_camera(scene, az, el, opt.width, opt.height);
                RenderBuffers buf = render_image(gt, vd.cam, ropt);
                vd.img = buf.color;
                vd.mask = Image(opt.width, opt.height, 1);
                for (std::size_t k = 0; k < vd.mask.data.size(); ++k)
                    vd.mask.data[k] = buf.opacity.data[k] > 0.5 ? 1.0 : 0.0;
                vd.pattern = pat.image;
                vd.pattern_kind = pat.kind;
                views.push_back(std::move(vd));
            }

            for (auto [rot_deg, trans] : perturb_levels) {
                Model m = frozen;
                m.projector.optics = pose_perturb(po_gt, rot_deg, trans, trng);

                TrainConfig cfg;
                cfg.sched.batch_rays = opt.batch_rays;
                cfg.render = ropt;
                cfg.seed = trng.next_u64();
                cfg.optimize_projector_intrinsics = false;  // isolate the pose
                cfg.optimize_projector_color = false;
                cfg.optimize_colight = false;

                Trainer tr(std::move(m), views, cfg);
                TrainStatus st = tr.run_stage(Stage::kProjector, opt.steps);

                PatternTrial row;
                row.family = family;
                row.trial = trial;
                row.perturb_rot_deg = rot_deg;
                row.perturb_trans = trans;
                const Pinhole& rec = tr.model().projector.optics;
                row.final_l2 = norm(rec.center() - center_gt);
                row.final_rot_rad = rotation_distance(rec.R(), R_gt);
                row.converged = st == kTrainOk;
                table.push_back(row);
            }
        }
    }
    return table;
}

std::vector<PatternFamilyStats> pattern_eval_stats(const std::vector<PatternTrial>& table) {
    std::vector<PatternFamilyStats> out;
    for (const auto& row : table) {
        PatternFamilyStats* s = nullptr;
        for (auto& c : out)
            if (c.family == row.family) s = &c;
        if (!s) {
            out.push_back({});
            out.back().family = row.family;
            s = &out.back();
        }
        ++s->n;
    }
    for (auto& s : out) {
        std::vector<real> l2, rot;
        for (const auto& row : table)
            if (row.family == s.family) {
                l2.push_back(row.final_l2);
                rot.push_back(row.final_rot_rad);
            }
        auto summarize = [](std::vector<real>& v, real& mean, real& median, real& mx) {
            if (v.empty()) return;
            real acc = 0;
            mx = 0;
            for (real x : v) {
                acc += x;
                mx = std::max(mx, x);
            }
            mean = acc / real(v.size());
            std::sort(v.begin(), v.end());
            median = v[v.size() / 2];
        };
        summarize(l2, s.l2_mean, s.l2_median, s.l2_max);
        summarize(rot, s.rot_mean, s.rot_median, s.rot_max);
    }
    return out;
}

void write_pattern_eval_csv(const std::string& path, const std::vector<PatternTrial>& table) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << "family,trial,perturb_rot_deg,perturb_trans,final_l2,final_rot_rad,converged\n";
    for (const auto& r : table)
        f << r.family << "," << r.trial << "," << r.perturb_rot_deg << ","
          << r.perturb_trans << "," << r.final_l2 << "," << r.final_rot_rad << ","
          << (r.converged ? 1 : 0) << "\n";
}

}  // namespace procam
