// SPDX-License-Identifier: Apache-2.0
//
// procam: one binary, subcommand style.  Exit codes: 0 success, 2 usage or
// config error, 3 runtime divergence.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "procam/applications.hpp"
#include "procam/config.hpp"
#include "procam/metrics.hpp"
#include "procam/parallel.hpp"
#include "procam/pattern_eval.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace procam;

namespace {

constexpr int kExitOk = 0, kExitUsage = 2, kExitDiverged = 3;

// every run directory records what produced it
void write_run_info(const std::string& out_dir, const RunConfig& cfg) {
    fs::create_directories(out_dir);
    save_run_config(out_dir + "/config.resolved.toml", cfg);
    std::ofstream v(out_dir + "/version.txt");
    v << PROCAM_GIT_DESCRIBE << "\n";
}

void write_report(const std::string& out_dir, json& rep) {
    rep["version"] = PROCAM_GIT_DESCRIBE;
    std::ofstream f(out_dir + "/report.json");
    f << rep.dump(2) << "\n";
}

Pinhole load_pose(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::invalid_argument("cannot read pose file " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return Pinhole::from_json(ss.str());
}

Image load_image(const std::string& path) {
    if (path.size() > 4 && path.substr(path.size() - 4) == ".pfm") return read_pfm(path);
    return read_png(path);
}

// "pose.json:image.png[:mask.png]"
EditTarget parse_target(const std::string& spec) {
    std::vector<std::string> parts;
    std::stringstream ss(spec);
    std::string p;
    while (std::getline(ss, p, ':')) parts.push_back(p);
    if (parts.size() < 2 || parts.size() > 3)
        throw std::invalid_argument("target spec must be pose.json:image[:mask]: " + spec);
    EditTarget t;
    t.view = load_pose(parts[0]);
    t.target = load_image(parts[1]);
    if (parts.size() == 3) t.mask = load_image(parts[2]);
    return t;
}

json pose_error_json(const Pinhole& got, const Pinhole& gt) {
    json j;
    j["rot_deg"] = rad2deg(rotation_distance(got.R(), gt.R()));
    j["center_l2"] = norm(got.center() - gt.center());
    j["fx_rel"] = std::abs(got.fx - gt.fx) / gt.fx;
    return j;
}

// ------------------------------------------------------------- subcommands

int cmd_scene_gen(const std::string& scene, int views, const std::string& protocol,
                  uint64_t seed, const std::string& out, int size, int pattern_size) {
    AnalyticScene sc = make_scene(scene);
    CaptureOptions opt;
    opt.n_views = views;
    opt.protocol = protocol;
    opt.width = opt.height = size;
    opt.pattern_size = pattern_size;
    CaptureSet cs = generate_capture(sc, opt, seed, out);

    RunConfig rc;
    rc.scene_name = scene;
    rc.views = views;
    rc.protocol = protocol;
    rc.image_size = size;
    rc.pattern_size = pattern_size;
    rc.seed = seed;
    write_run_info(out, rc);
    json rep;
    rep["command"] = "scene-gen";
    rep["scene"] = scene;
    rep["views"] = int(cs.views.size());
    write_report(out, rep);
    std::cout << "wrote " << cs.views.size() << " views to " << out << "\n";
    return kExitOk;
}

int cmd_train(const std::string& capture_dir, const std::string& config_path,
              const std::string& out, uint64_t seed_override, bool have_seed,
              const std::string& baseline, bool resume) {
    RunConfig cfg = config_path.empty() ? RunConfig{} : load_run_config(config_path);
    if (have_seed) cfg.seed = seed_override;
    if (cfg.threads > 0) set_thread_count(cfg.threads);

    CaptureSet cs = load_capture(capture_dir);
    std::vector<ViewData> views = load_views(cs);
    if (!cs.has_projector_gt)
        throw std::invalid_argument("capture manifest lacks the projector rig needed "
                                    "for initialization");

    TrainConfig tc = to_train_config(cfg);
    tc.run_dir = out;
    write_run_info(out, cfg);

    Rng rng(cfg.seed ^ 0x696e6974ULL);
    Model m;
    if (baseline == "emission") {
        ProjectorDevice proj;
        proj.optics = cs.projector_optics_gt;
        proj.log_gamma = cs.proj_log_gamma_gt;
        proj.log_gain = cs.proj_log_gain_gt;
        ColocatedLight co;
        co.log_gain = cs.co_log_gain_gt;
        m = make_emission_model(cs.domain, cfg.sched.geo_res.back(), cfg.sched.mat_res,
                                proj, co);
    } else {
        m.fields = FieldSet::create(cs.domain, cfg.sched.geo_res.front(),
                                    cfg.sched.mat_res, cfg.sched.tau_res);
        // uniform fog start carves better than the near-empty default
        m.fields.density.fill(0.0);
        m.projector.optics = pose_perturb(cs.projector_optics_gt, cfg.init_rot_deg,
                                          cfg.init_trans, rng);
        m.projector.log_gamma = std::log(2.0);
        m.projector.log_gain = {std::log(2.0), std::log(2.0), std::log(2.0)};
        m.colight.log_gain = {std::log(2.0), std::log(2.0), std::log(2.0)};
    }

    Trainer tr(std::move(m), std::move(views), tc);
    std::string state_path = out + "/state.bin";
    if (resume) tr.load_state(state_path);

    const auto& S = cfg.sched;
    struct StageStep {
        Stage st;
        int steps;
    };
    std::vector<StageStep> plan;
    if (baseline == "emission")
        plan = {{Stage::kScene, S.scene_steps}};
    else
        plan = {{Stage::kScene, S.scene_steps},
                {Stage::kProjector, S.projector_steps},
                {Stage::kFinetune, S.finetune_steps}};

    TrainStatus status = kTrainOk;
    long done = 0;
    for (const auto& [st, steps] : plan) {
        done += steps;
        if (tr.global_step() >= done) continue;  // stage finished before resume
        status = tr.run_stage(st, steps);
        tr.save_state(state_path);
        tr.model().save(out + "/model_" + stage_name(st) + ".npmf");
        if (status != kTrainOk) break;
    }
    tr.model().save(out + "/model.npmf");

    json rep;
    rep["command"] = "train";
    rep["status"] = status == kTrainOk ? "ok" : "diverged";
    rep["steps"] = tr.global_step();
    rep["baseline"] = baseline.empty() ? "none" : baseline;
    if (cs.has_projector_gt && baseline.empty())
        rep["projector_pose_error"] =
            pose_error_json(tr.model().projector.optics, cs.projector_optics_gt);
    write_report(out, rep);
    std::cout << "training " << rep["status"].get<std::string>() << " after "
              << tr.global_step() << " steps\n";
    return status == kTrainOk ? kExitOk : kExitDiverged;
}

int cmd_render(const std::string& model_path, const std::string& pose_path,
               const std::string& pattern_path, const std::string& out,
               const std::string& buffers, int n_primary, int n_secondary, bool learned,
               bool colight) {
    Model m = Model::load(model_path);
    Pinhole cam = load_pose(pose_path);
    Pattern pat;
    if (pattern_path.empty())
        pat = flood(m.projector.optics.width, m.projector.optics.height, 1.0);
    else
        pat.image = load_image(pattern_path);
    m.projector.pattern = &pat.image;

    RenderOptions opt;
    opt.n_primary = n_primary;
    opt.n_secondary = n_secondary;
    opt.stratified = false;
    opt.tr_mode = learned ? TrMode::kLearned : TrMode::kMarched;
    opt.colight = colight;
    RenderBuffers buf = render_image(m, cam, opt);

    fs::create_directories(out);
    write_pfm(out + "/color.pfm", buf.color);
    write_png(out + "/color.png", buf.color);
    if (buffers == "all") {
        write_pfm(out + "/depth.pfm", buf.depth);
        write_pfm(out + "/opacity.pfm", buf.opacity);
        write_pfm(out + "/normal.pfm", buf.normal);
        write_pfm(out + "/albedo.pfm", buf.albedo);
        write_pfm(out + "/roughness.pfm", buf.rough);
        write_pfm(out + "/transmittance.pfm", buf.tauproj);
    }
    json rep;
    rep["command"] = "render";
    rep["buffers"] = buffers;
    write_report(out, rep);
    return kExitOk;
}

int cmd_eval(const std::string& model_path, const std::string& scene, int probes,
             uint64_t seed, const std::string& out) {
    Model m = Model::load(model_path);
    AnalyticScene sc = make_scene(scene);
    ReconstructionMetrics rm = evaluate_reconstruction(m, sc, probes, seed);
    fs::create_directories(out);
    json rep;
    rep["command"] = "eval";
    rep["scene"] = scene;
    rep["n_probes"] = rm.n_probes;
    rep["normal_err_deg_mean"] = rm.normal_err_deg_mean;
    rep["normal_err_deg_median"] = rm.normal_err_deg_median;
    rep["albedo_mse"] = rm.albedo_mse;
    rep["rough_mse"] = rm.rough_mse;
    rep["depth_mae"] = rm.depth_mae;
    write_report(out, rep);
    std::cout << rep.dump(2) << "\n";
    return kExitOk;
}

int cmd_eval_patterns(const std::string& scene, const std::vector<std::string>& families,
                      int trials, const std::vector<double>& rot_levels,
                      const std::vector<double>& trans_levels, uint64_t seed,
                      const std::string& out, int steps) {
    if (rot_levels.size() != trans_levels.size())
        throw std::invalid_argument("--rot and --trans need the same count");
    std::vector<std::pair<real, real>> levels;
    for (std::size_t i = 0; i < rot_levels.size(); ++i)
        levels.push_back({rot_levels[i], trans_levels[i]});
    AnalyticScene sc = make_scene(scene);
    PatternEvalOptions opt;
    if (steps > 0) opt.steps = steps;
    auto table = evaluate_pattern(families, sc, trials, levels, seed, opt);
    fs::create_directories(out);
    write_pattern_eval_csv(out + "/pattern_eval.csv", table);
    json rep;
    rep["command"] = "eval-patterns";
    for (const auto& s : pattern_eval_stats(table)) {
        json row;
        row["n"] = s.n;
        row["rot_median_deg"] = rad2deg(s.rot_median);
        row["rot_mean_deg"] = rad2deg(s.rot_mean);
        row["l2_median"] = s.l2_median;
        row["l2_mean"] = s.l2_mean;
        rep["families"][s.family] = row;
    }
    write_report(out, rep);
    std::cout << rep.dump(2) << "\n";
    return kExitOk;
}

int write_projection_outputs(const std::string& out, const Image& pat,
                             const ProjectionReport& pr, const char* command) {
    fs::create_directories(out);
    write_pfm(out + "/projection.pfm", pat);
    write_png(out + "/projection.png", pat);
    json rep;
    rep["command"] = command;
    rep["steps"] = pr.steps;
    rep["final_loss"] = pr.final_loss;
    rep["diverged"] = pr.diverged;
    rep["psnr_whole"] = pr.psnr_whole;
    rep["psnr_masked"] = pr.psnr_masked;
    write_report(out, rep);
    std::cout << rep.dump(2) << "\n";
    return pr.diverged ? kExitDiverged : kExitOk;
}

int cmd_compensate(const std::string& model_path, const std::vector<std::string>& targets,
                   double beta, int steps, double lr, uint64_t seed, int pattern_size,
                   const std::string& out) {
    Model m = Model::load(model_path);
    std::vector<EditTarget> ts;
    for (const auto& s : targets) ts.push_back(parse_target(s));
    ProjectionReport pr;
    Image pat = compensate(m, ts, beta, steps, lr, seed,
                           pattern_size > 0 ? pattern_size : m.projector.optics.width,
                           pattern_size > 0 ? pattern_size : m.projector.optics.height,
                           &pr);
    return write_projection_outputs(out, pat, pr, "compensate");
}

int cmd_multiview(const std::string& model_path, const std::vector<std::string>& targets,
                  double beta, double tau_threshold, int steps, double lr, uint64_t seed,
                  int pattern_size, const std::string& out) {
    Model m = Model::load(model_path);
    std::vector<EditTarget> ts;
    for (const auto& s : targets) ts.push_back(parse_target(s));
    ProjectionReport pr;
    Image pat = multiview_project(m, ts, beta, tau_threshold, steps, lr, seed,
                                  pattern_size > 0 ? pattern_size
                                                   : m.projector.optics.width,
                                  pattern_size > 0 ? pattern_size
                                                   : m.projector.optics.height,
                                  &pr);
    return write_projection_outputs(out, pat, pr, "multiview");
}

int cmd_xray(const std::string& model_path, const std::string& camera_pose,
             const std::string& virtual_pose, int n_primary, int n_secondary,
             const std::string& out) {
    Model m = Model::load(model_path);
    Pinhole cam = load_pose(camera_pose);
    Pinhole virt = virtual_pose.empty() ? cam : load_pose(virtual_pose);
    RenderOptions opt;
    opt.n_primary = n_primary;
    opt.n_secondary = n_secondary;
    Image pat = xray(m, cam, virt, &opt);
    fs::create_directories(out);
    write_pfm(out + "/projection.pfm", pat);
    write_png(out + "/projection.png", pat);
    json rep;
    rep["command"] = "xray";
    rep["optimizer_iterations"] = 0;
    write_report(out, rep);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Differentiable projector-camera light transport toolkit"};
    app.require_subcommand(1);

    int threads = 0;
    app.add_option("--threads", threads, "worker threads (0: all cores)")
        ->capture_default_str();

    // scene-gen
    auto* sg = app.add_subcommand("scene-gen", "render a synthetic capture corpus");
    std::string sg_scene = "slab", sg_protocol = "triplet", sg_out;
    int sg_views = 12, sg_size = 96, sg_pattern = 128;
    uint64_t sg_seed = 1;
    sg->add_option("--scene", sg_scene, "fixture name")->capture_default_str();
    sg->add_option("--views", sg_views, "camera poses")->capture_default_str();
    sg->add_option("--protocol", sg_protocol, "triplet | cycled")->capture_default_str();
    sg->add_option("--seed", sg_seed)->capture_default_str();
    sg->add_option("--size", sg_size, "image size")->capture_default_str();
    sg->add_option("--pattern-size", sg_pattern)->capture_default_str();
    sg->add_option("--out", sg_out)->required();

    // train
    auto* tn = app.add_subcommand("train", "three-stage reconstruction");
    std::string tn_capture, tn_config, tn_out, tn_baseline;
    uint64_t tn_seed = 0;
    bool tn_resume = false;
    tn->add_option("--capture", tn_capture)->required();
    tn->add_option("--config", tn_config, "TOML run config (defaults if omitted)");
    tn->add_option("--out", tn_out)->required();
    auto* tn_seed_opt = tn->add_option("--seed", tn_seed, "overrides io.seed");
    tn->add_option("--baseline", tn_baseline, "emission: shadow-free baseline");
    tn->add_flag("--resume", tn_resume, "continue from state.bin in --out");

    // render
    auto* rd = app.add_subcommand("render", "render a checkpoint");
    std::string rd_model, rd_pose, rd_pattern, rd_out, rd_buffers = "color";
    int rd_np = 64, rd_ns = 32;
    bool rd_learned = false, rd_no_colight = false;
    rd->add_option("--model", rd_model)->required();
    rd->add_option("--pose", rd_pose, "camera JSON")->required();
    rd->add_option("--pattern", rd_pattern, "projector image (default flood white)");
    rd->add_option("--buffers", rd_buffers, "color | all")->capture_default_str();
    rd->add_option("--samples", rd_np, "primary samples per ray")->capture_default_str();
    rd->add_option("--secondary", rd_ns)->capture_default_str();
    rd->add_flag("--learned-transmittance", rd_learned);
    rd->add_flag("--no-colight", rd_no_colight);
    rd->add_option("--out", rd_out)->required();

    // eval
    auto* ev = app.add_subcommand("eval", "compare a checkpoint with its scene");
    std::string ev_model, ev_scene = "slab", ev_out;
    int ev_probes = 2000;
    uint64_t ev_seed = 1;
    ev->add_option("--model", ev_model)->required();
    ev->add_option("--scene", ev_scene)->capture_default_str();
    ev->add_option("--probes", ev_probes)->capture_default_str();
    ev->add_option("--seed", ev_seed)->capture_default_str();
    ev->add_option("--out", ev_out)->required();

    // eval-patterns
    auto* ep = app.add_subcommand("eval-patterns", "pose-recovery trials per pattern family");
    std::string ep_scene = "slab", ep_out;
    std::vector<std::string> ep_families = {"lollipop", "white", "black", "noise"};
    std::vector<double> ep_rot = {4.0}, ep_trans = {0.08};
    int ep_trials = 3, ep_steps = 0;
    uint64_t ep_seed = 1;
    ep->add_option("--scene", ep_scene)->capture_default_str();
    ep->add_option("--families", ep_families, "pattern families")->delimiter(',');
    ep->add_option("--trials", ep_trials)->capture_default_str();
    ep->add_option("--rot", ep_rot, "perturbation rotations, deg")->delimiter(',');
    ep->add_option("--trans", ep_trans, "perturbation translations")->delimiter(',');
    ep->add_option("--steps", ep_steps, "calibration steps per trial (0: default)");
    ep->add_option("--seed", ep_seed)->capture_default_str();
    ep->add_option("--out", ep_out)->required();

    // compensate
    auto* cp = app.add_subcommand("compensate", "fit a projection to target appearances");
    std::string cp_model, cp_out;
    std::vector<std::string> cp_targets;
    double cp_beta = 0.7, cp_lr = 5e-2;
    int cp_steps = 300, cp_psize = 0;
    uint64_t cp_seed = 1;
    cp->add_option("--model", cp_model)->required();
    cp->add_option("--target", cp_targets, "pose.json:image[:mask]")->required();
    cp->add_option("--beta", cp_beta, "target brightness scale")->capture_default_str();
    cp->add_option("--steps", cp_steps)->capture_default_str();
    cp->add_option("--lr", cp_lr)->capture_default_str();
    cp->add_option("--seed", cp_seed)->capture_default_str();
    cp->add_option("--pattern-size", cp_psize, "0: projector resolution");
    cp->add_option("--out", cp_out)->required();

    // multiview
    auto* mv = app.add_subcommand("multiview", "per-view targets limited to doubly "
                                               "visible surface");
    std::string mv_model, mv_out;
    std::vector<std::string> mv_targets;
    double mv_beta = 0.7, mv_tau = 0.5, mv_lr = 5e-2;
    int mv_steps = 300, mv_psize = 0;
    uint64_t mv_seed = 1;
    mv->add_option("--model", mv_model)->required();
    mv->add_option("--target", mv_targets, "pose.json:image[:mask]")->required();
    mv->add_option("--beta", mv_beta)->capture_default_str();
    mv->add_option("--tau-threshold", mv_tau)->capture_default_str();
    mv->add_option("--steps", mv_steps)->capture_default_str();
    mv->add_option("--lr", mv_lr)->capture_default_str();
    mv->add_option("--seed", mv_seed)->capture_default_str();
    mv->add_option("--pattern-size", mv_psize, "0: projector resolution");
    mv->add_option("--out", mv_out)->required();

    // xray
    auto* xr = app.add_subcommand("xray", "2-pass occluder bypass projection");
    std::string xr_model, xr_cam, xr_virtual, xr_out;
    int xr_np = 64, xr_ns = 32;
    xr->add_option("--model", xr_model)->required();
    xr->add_option("--camera", xr_cam, "real camera JSON")->required();
    xr->add_option("--virtual", xr_virtual, "desired viewpoint (default: camera)");
    xr->add_option("--samples", xr_np)->capture_default_str();
    xr->add_option("--secondary", xr_ns)->capture_default_str();
    xr->add_option("--out", xr_out)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }
    if (threads > 0) set_thread_count(threads);

    try {
        if (*sg)
            return cmd_scene_gen(sg_scene, sg_views, sg_protocol, sg_seed, sg_out, sg_size,
                                 sg_pattern);
        if (*tn)
            return cmd_train(tn_capture, tn_config, tn_out, tn_seed, !tn_seed_opt->empty(),
                             tn_baseline, tn_resume);
        if (*rd)
            return cmd_render(rd_model, rd_pose, rd_pattern, rd_out, rd_buffers, rd_np,
                              rd_ns, rd_learned, !rd_no_colight);
        if (*ev) return cmd_eval(ev_model, ev_scene, ev_probes, ev_seed, ev_out);
        if (*ep)
            return cmd_eval_patterns(ep_scene, ep_families, ep_trials, ep_rot, ep_trans,
                                     ep_seed, ep_out, ep_steps);
        if (*cp)
            return cmd_compensate(cp_model, cp_targets, cp_beta, cp_steps, cp_lr, cp_seed,
                                  cp_psize, cp_out);
        if (*mv)
            return cmd_multiview(mv_model, mv_targets, mv_beta, mv_tau, mv_steps, mv_lr,
                                 mv_seed, mv_psize, mv_out);
        if (*xr) return cmd_xray(xr_model, xr_cam, xr_virtual, xr_np, xr_ns, xr_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
