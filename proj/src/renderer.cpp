// SPDX-License-Identifier: Apache-2.0
#include "procam/renderer.hpp"

#include "procam/parallel.hpp"

namespace procam {

namespace {

constexpr real kTauCutoff = 1e-7;  // stop marching once the ray is saturated
constexpr real kOmEps = 1e-12;     // guard for 1-alpha divisions

// Transmittance along p -> cp with fixed midpoints; shared by the forward
// pass and the backward recompute so the two agree exactly.
real secondary_tau(const FieldSet& F, const Vec3& p, const Vec3& cp, int ns) {
    Vec3 seg = cp - p;
    real len = norm(seg);
    if (len < 1e-12) return 1;
    real delta = len / ns, tau = 1;
    for (int k = 0; k < ns; ++k) {
        real f = (k + 0.5) / ns;
        real a = 1 - std::exp(-delta * F.sigma_at(p + seg * f));
        tau *= 1 - a;
    }
    return tau;
}

struct SecondaryGradOut {
    Vec3 dcp{0, 0, 0};
    Vec3 dp{0, 0, 0};
};

void secondary_tau_backward(const FieldSet& F, const Vec3& p, const Vec3& cp, int ns,
                            real dtau_up, bool want_sigma, std::vector<real>* g_density,
                            bool want_cp, bool want_p, SecondaryGradOut& out) {
    Vec3 seg = cp - p;
    real len = norm(seg);
    if (len < 1e-12) return;
    Vec3 u = seg / len;
    real delta = len / ns;

    // forward values
    std::vector<real> sig_raw(ns), alpha(ns);
    std::vector<VoxelGrid3::Sample> samp(ns);
    real tau = 1;
    for (int k = 0; k < ns; ++k) {
        real f = (k + 0.5) / ns;
        Vec3 q = p + seg * f;
        samp[k] = F.density.sample(q);
        real raw = 0;
        if (samp[k].inside) F.density.eval(samp[k], &raw);
        sig_raw[k] = raw;
        real sg = samp[k].inside ? F.activate_density(raw) : 0;
        alpha[k] = 1 - std::exp(-delta * sg);
        tau *= 1 - alpha[k];
    }

    real dlen = 0;
    for (int k = 0; k < ns; ++k) {
        real om = std::max(1 - alpha[k], kOmEps);
        real dalpha = -dtau_up * tau / om;
        real sg = samp[k].inside ? F.activate_density(sig_raw[k]) : 0;
        real E = std::exp(-delta * sg);
        real dsig = dalpha * delta * E;
        real ddelta = dalpha * sg * E;
        dlen += ddelta / ns;
        if (!samp[k].inside) continue;
        real act_d = F.activate_density_deriv(sig_raw[k]);
        if (want_sigma && g_density) {
            real upstream = dsig * act_d;
            F.density.scatter(samp[k], &upstream, g_density->data());
        }
        if (want_cp || want_p) {
            Vec3 draw;
            F.density.eval_spatial_grad(samp[k], &draw);
            Vec3 dq = draw * (dsig * act_d);
            real f = (k + 0.5) / ns;
            if (want_cp) out.dcp += dq * f;
            if (want_p) out.dp += dq * (1 - f);
        }
    }
    if (want_cp) out.dcp += u * dlen;
    if (want_p) out.dp -= u * dlen;
}

Vec3 pow_gamma(const Vec3& pat, real gamma, const Vec3& gain) {
    return {gain.x * std::pow(pat.x, gamma), gain.y * std::pow(pat.y, gamma),
            gain.z * std::pow(pat.z, gamma)};
}

}  // namespace

void march(const FieldSet& fields, const Ray& ray, int n_samples, real near, real far,
           bool stratified, Rng* rng, RayRecord& rec) {
    rec = RayRecord{};
    rec.ray = ray;
    rec.hit_box = true;
    rec.near = near;
    rec.far = far;
    int n = std::max(2, n_samples);
    rec.samples.resize(n);
    for (int i = 0; i < n; ++i) {
        real u = (i + (stratified && rng ? rng->uniform() : 0.5)) / n;
        rec.samples[i].u = u;
        rec.samples[i].t = near + u * (far - near);
    }
    for (int i = 0; i < n; ++i) {
        SampleRec& s = rec.samples[i];
        s.delta = (i + 1 < n ? rec.samples[i + 1].t : far) - s.t;
        s.p = ray.origin + ray.dir * s.t;
    }
    real tau_run = 1;
    for (int i = 0; i < n; ++i) {
        SampleRec& s = rec.samples[i];
        auto ds = fields.density.sample(s.p);
        if (ds.inside) fields.density.eval(ds, &s.sig_raw);
        s.sigma = ds.inside ? fields.activate_density(s.sig_raw) : 0;
        s.alpha = 1 - std::exp(-s.delta * s.sigma);
        s.tau = tau_run;
        s.weight = s.alpha * tau_run;
        tau_run *= 1 - s.alpha;
        rec.depth += s.weight * s.t;
    }
    rec.tau_end = tau_run;
    rec.opacity = 1 - tau_run;
}

real transmittance_to_projector(const Vec3& p, const FieldSet& fields,
                                const ProjectorDevice& proj, TrMode mode,
                                int n_secondary) {
    Vec3 cp = proj.optics.center();
    if (mode == TrMode::kMarched) return secondary_tau(fields, p, cp, n_secondary);
    Vec3 u = normalized(cp - p);
    if (norm(u) == 0) return 1;
    return fields.tau_at(p, u);
}

void render_ray(const Model& m, const Ray& ray, const RenderOptions& o, Rng* rng,
                RayRecord& rec) {
    const FieldSet& F = m.fields;
    rec = RayRecord{};
    rec.ray = ray;
    real t0, t1;
    if (!intersect_aabb(F.domain, ray.origin, ray.dir, 1e-6, t0, t1, &rec.entry_axis,
                        &rec.exit_axis)) {
        rec.tau_end = 1;
        return;
    }
    rec.hit_box = true;
    rec.near = t0;
    rec.far = t1;

    int n = std::max(2, o.n_primary);
    rec.samples.resize(n);
    for (int i = 0; i < n; ++i) {
        real u = (i + (o.stratified && rng ? rng->uniform() : 0.5)) / n;
        rec.samples[i].u = u;
        rec.samples[i].t = t0 + u * (t1 - t0);
    }
    for (int i = 0; i < n; ++i) {
        rec.samples[i].delta = (i + 1 < n ? rec.samples[i + 1].t : t1) - rec.samples[i].t;
        rec.samples[i].p = ray.origin + ray.dir * rec.samples[i].t;
    }

    const Pinhole& po = m.projector.optics;
    Mat3 Rp = po.R();
    Vec3 cp = po.center();
    real gamma = m.projector.gamma();
    Vec3 Gp = m.projector.gain();
    Vec3 Gco = m.colight.gain();
    Vec3 v = ray.dir * -1.0;

    real tau_run = 1;
    int used = n;
    for (int i = 0; i < n; ++i) {
        SampleRec& s = rec.samples[i];
        if (tau_run < kTauCutoff) {
            used = i;
            break;
        }
        auto ds = F.density.sample(s.p);
        if (ds.inside) F.density.eval(ds, &s.sig_raw);
        s.sigma = ds.inside ? F.activate_density(s.sig_raw) : 0;
        s.alpha = 1 - std::exp(-s.delta * s.sigma);
        s.tau = tau_run;
        s.weight = s.alpha * tau_run;
        tau_run *= 1 - s.alpha;

        // projector irradiance at the sample
        Vec3 pc = Rp * s.p + po.trans;
        if (pc.z > 0 && m.projector.pattern) {
            real iz = 1.0 / pc.z;
            s.pix = {po.fx * pc.x * iz + po.cx, po.fy * pc.y * iz + po.cy};
            if (po.pixel_in_bounds(s.pix)) {
                s.in_frustum = true;
                s.pat = m.projector.pattern->bilinear(s.pix.x, s.pix.y);
                s.irr_proj = pow_gamma(s.pat, gamma, Gp);
                s.light_dir = normalized(cp - s.p);
                if (m.emission_mode) {
                    s.tau_proj = 1;  // baseline: no shadowing toward the light
                } else if (o.tr_mode == TrMode::kMarched) {
                    s.tau_proj = secondary_tau(F, s.p, cp, o.n_secondary);
                } else {
                    auto ts = F.tau.sample(s.p);
                    real c[9], y[9];
                    F.tau.eval(ts, c);
                    sh9(s.light_dir, y);
                    s.tau_proj_s = 0;
                    for (int k = 0; k < 9; ++k) s.tau_proj_s += c[k] * y[k];
                    s.tau_proj = ts.inside ? sigmoid(s.tau_proj_s) : 1;
                }
            }
        }
        Vec3 Lp = s.in_frustum ? s.irr_proj * s.tau_proj : Vec3{0, 0, 0};

        // co-located light at the ray origin
        if (o.colight && m.colight.enabled) {
            s.d2 = std::max(norm2(s.p - ray.origin), o.d2_floor);
            s.irr_co = Gco * (s.tau / s.d2);
        }

        if (m.emission_mode) {
            auto es = m.emission.sample(s.p);
            if (es.inside) {
                real raw[3];
                m.emission.eval(es, raw);
                s.emis_raw = {raw[0], raw[1], raw[2]};
            }
            s.emis = {sigmoid(s.emis_raw.x), sigmoid(s.emis_raw.y), sigmoid(s.emis_raw.z)};
            s.color = s.emis * (Lp + s.irr_co);
        } else {
            auto ns_ = F.normal.sample(s.p);
            real nr[3] = {0, 0, 1};
            if (ns_.inside) F.normal.eval(ns_, nr);
            s.n_raw = {nr[0], nr[1], nr[2]};
            s.n = normalized(s.n_raw);
            auto as_ = F.albedo.sample(s.p);
            real ar[3] = {0, 0, 0};
            if (as_.inside) F.albedo.eval(as_, ar);
            s.alb_raw = {ar[0], ar[1], ar[2]};
            s.albedo = {sigmoid(ar[0]), sigmoid(ar[1]), sigmoid(ar[2])};
            auto rs_ = F.roughness.sample(s.p);
            if (rs_.inside) F.roughness.eval(rs_, &s.rho_raw);
            s.rho = F.activate_rough(s.rho_raw);

            if (o.literal_combined_brdf) {
                Vec3 l = s.in_frustum ? s.light_dir : v;
                s.color = shade({v, l, s.n, s.albedo, s.rho, Lp + s.irr_co}, o.f0);
            } else {
                Vec3 c{0, 0, 0};
                if (s.in_frustum)
                    c += shade({v, s.light_dir, s.n, s.albedo, s.rho, Lp}, o.f0);
                if (o.colight && m.colight.enabled)
                    c += shade({v, v, s.n, s.albedo, s.rho, s.irr_co}, o.f0);
                s.color = c;
            }

            if (o.eval_tau_primary) {
                auto ts = F.tau.sample(s.p);
                if (ts.inside) {
                    real c9[9], y[9];
                    F.tau.eval(ts, c9);
                    sh9(v, y);
                    s.tau_hat_s = 0;
                    for (int k = 0; k < 9; ++k) s.tau_hat_s += c9[k] * y[k];
                    s.tau_hat = sigmoid(s.tau_hat_s);
                } else {
                    s.tau_hat = 1;
                }
            }
        }

        rec.color += s.color * s.weight;
        rec.depth += s.weight * s.t;
    }
    rec.samples.resize(used);
    rec.tau_end = tau_run;
    rec.opacity = 1 - tau_run;
}

void render_ray_backward(const Model& m, const RenderOptions& o, const RayRecord& rec,
                         const RayUpstream& up, const GradRequest& req, ModelGrads& g) {
    if (!rec.hit_box || rec.samples.empty()) return;
    const FieldSet& F = m.fields;
    const Ray& ray = rec.ray;
    int n = int(rec.samples.size());

    const Pinhole& po = m.projector.optics;
    Mat3 Rp = po.R();
    Vec3 cp = po.center();
    real gamma = m.projector.gamma();
    Vec3 Gco = m.colight.gain();
    Vec3 v = ray.dir * -1.0;
    bool want_p = req.camera;

    std::vector<real> g_alpha(n, 0), g_tau(n, 0), dLdt(n, 0);
    std::vector<Vec3> dLdp;
    if (want_p) dLdp.assign(n, Vec3{0, 0, 0});
    Vec3 dL_do{0, 0, 0}, dL_dd{0, 0, 0};
    Vec3 dv_total_ray{0, 0, 0};

    for (int i = 0; i < n; ++i) {
        const SampleRec& s = rec.samples[i];
        Vec3 dC = up.d_color * s.weight;
        real dW = dot(up.d_color, s.color);
        g_alpha[i] += dW * s.tau;
        g_tau[i] += dW * s.alpha;
        if (up.d_tau && !up.d_tau->empty()) g_tau[i] += (*up.d_tau)[i];

        Vec3 dp_i{0, 0, 0};
        Vec3 dn_total{0, 0, 0}, dv_total{0, 0, 0}, dlight{0, 0, 0};
        Vec3 dalb{0, 0, 0};
        real drho = 0;
        Vec3 dLp{0, 0, 0}, dLco{0, 0, 0};
        Vec3 demis{0, 0, 0};

        Vec3 Lp = s.in_frustum ? s.irr_proj * s.tau_proj : Vec3{0, 0, 0};
        bool colight_on = o.colight && m.colight.enabled;

        if (m.emission_mode) {
            Vec3 Ltot = Lp + s.irr_co;
            demis = dC * Ltot;
            Vec3 dLtot = dC * s.emis;
            dLp = dLtot;
            dLco = dLtot;
        } else {
            if (o.literal_combined_brdf) {
                Vec3 l = s.in_frustum ? s.light_dir : v;
                ShadeGrads sg;
                shade_backward({v, l, s.n, s.albedo, s.rho, Lp + s.irr_co}, dC, sg, o.f0);
                dn_total += sg.dn;
                dv_total += sg.dv;
                if (s.in_frustum) dlight += sg.dl; else dv_total += sg.dl;
                dalb += sg.dalbedo;
                drho += sg.drho;
                dLp = sg.dirr;
                dLco = sg.dirr;
            } else {
                if (s.in_frustum) {
                    ShadeGrads sg;
                    shade_backward({v, s.light_dir, s.n, s.albedo, s.rho, Lp}, dC, sg, o.f0);
                    dn_total += sg.dn;
                    dv_total += sg.dv;
                    dlight += sg.dl;
                    dalb += sg.dalbedo;
                    drho += sg.drho;
                    dLp = sg.dirr;
                }
                if (colight_on) {
                    ShadeGrads sg;
                    shade_backward({v, v, s.n, s.albedo, s.rho, s.irr_co}, dC, sg, o.f0);
                    dn_total += sg.dn;
                    dv_total += sg.dv + sg.dl;
                    dalb += sg.dalbedo;
                    drho += sg.drho;
                    dLco = sg.dirr;
                }
            }
            if (up.d_normal && !up.d_normal->empty()) dn_total += (*up.d_normal)[i];
        }

        // co-located light: irr_co = Gco * tau_i / d2
        if (colight_on && s.d2 > 0) {
            g_tau[i] += dot(dLco, Gco) / s.d2;
            if (req.colight) g.co_log_gain += dLco * s.irr_co;
            if (want_p && s.d2 > o.d2_floor) {
                real dd2 = -dot(dLco, s.irr_co) / s.d2;
                Vec3 w = s.p - ray.origin;
                dp_i += w * (2 * dd2);
                dL_do -= w * (2 * dd2);
            }
        }

        // projector path
        if (s.in_frustum) {
            Vec3 dirr = dLp * s.tau_proj;
            real dtau_proj = dot(dLp, s.irr_proj);
            if (req.projector_color) {
                g.proj_log_gain += dirr * s.irr_proj;
                real dgam = 0;
                for (int ch = 0; ch < 3; ++ch) {
                    real pch = s.pat[ch];
                    if (pch > 1e-12) dgam += dirr[ch] * s.irr_proj[ch] * std::log(pch);
                }
                g.proj_log_gamma += gamma * dgam;
            }
            bool need_pix = req.projector_pose || req.pattern || want_p;
            if (need_pix && m.projector.pattern) {
                Vec3 dpat{0, 0, 0};
                for (int ch = 0; ch < 3; ++ch) {
                    real pch = s.pat[ch];
                    if (pch > 1e-12) dpat[ch] = dirr[ch] * gamma * s.irr_proj[ch] / pch;
                }
                Vec2 dpix = m.projector.pattern->bilinear_backward(
                    s.pix.x, s.pix.y, dpat, req.pattern ? &g.pattern : nullptr);
                Vec3 pc = Rp * s.p + po.trans;
                real iz = 1.0 / pc.z;
                if (req.projector_pose)
                    g.proj_fx += dpix.x * pc.x * iz + dpix.y * pc.y * iz;
                Vec3 dpc{dpix.x * po.fx * iz, dpix.y * po.fy * iz,
                         -(dpix.x * po.fx * pc.x + dpix.y * po.fy * pc.y) * iz * iz};
                if (req.projector_pose) {
                    Vec3 q = pc - po.trans;  // R * p
                    g.proj_omega += cross(q, dpc);
                    g.proj_trans += dpc;
                }
                if (want_p) dp_i += tmul(Rp, dpc);
            }

            Vec3 dcp{0, 0, 0};
            if (!m.emission_mode) {
                if (o.tr_mode == TrMode::kMarched) {
                    bool want_cp = req.projector_pose;
                    if (req.fields || want_cp || want_p) {
                        SecondaryGradOut so;
                        secondary_tau_backward(F, s.p, cp, o.n_secondary, dtau_proj,
                                               req.fields, req.fields ? &g.density : nullptr,
                                               want_cp, want_p, so);
                        dcp += so.dcp;
                        if (want_p) dp_i += so.dp;
                    }
                } else {
                    real ds_ = dtau_proj * s.tau_proj * (1 - s.tau_proj);
                    if (ds_ != 0) {
                        auto ts = F.tau.sample(s.p);
                        if (ts.inside) {
                            real y[9];
                            sh9(s.light_dir, y);
                            if (req.tau_field) {
                                real ups[9];
                                for (int k = 0; k < 9; ++k) ups[k] = ds_ * y[k];
                                F.tau.scatter(ts, ups, g.tau.data());
                            }
                            real c9[9];
                            F.tau.eval(ts, c9);
                            Vec3 dy[9];
                            sh9_jacobian(s.light_dir, dy);
                            Vec3 du{0, 0, 0};
                            for (int k = 0; k < 9; ++k) du += dy[k] * (ds_ * c9[k]);
                            dlight += du;
                            if (want_p) {
                                Vec3 dc9[9];
                                F.tau.eval_spatial_grad(ts, dc9);
                                for (int k = 0; k < 9; ++k) dp_i += dc9[k] * (ds_ * y[k]);
                            }
                        }
                    }
                }
            }

            // light_dir = normalize(cp - p)
            if (max_abs(dlight) > 0) {
                Vec3 dw = normalize_backward(cp - s.p, dlight);
                dcp += dw;
                if (want_p) dp_i -= dw;
            }
            if (req.projector_pose && max_abs(dcp) > 0) {
                // cp = -R^T t:  dL/domega = t x (R dcp), dL/dt = -R dcp
                Vec3 Rdcp = Rp * dcp;
                g.proj_omega += cross(po.trans, Rdcp);
                g.proj_trans -= Rdcp;
            }
        }

        // tau-hat along the primary ray (distillation pairs)
        if (up.d_tau_hat && !up.d_tau_hat->empty() && (*up.d_tau_hat)[i] != 0) {
            real dth = (*up.d_tau_hat)[i];
            auto ts = F.tau.sample(s.p);
            if (ts.inside) {
                real ds_ = dth * s.tau_hat * (1 - s.tau_hat);
                real y[9];
                sh9(v, y);
                if (req.tau_field) {
                    real ups[9];
                    for (int k = 0; k < 9; ++k) ups[k] = ds_ * y[k];
                    F.tau.scatter(ts, ups, g.tau.data());
                }
                if (want_p) {
                    Vec3 dc9[9];
                    F.tau.eval_spatial_grad(ts, dc9);
                    for (int k = 0; k < 9; ++k) dp_i += dc9[k] * (ds_ * y[k]);
                    real c9[9];
                    F.tau.eval(ts, c9);
                    Vec3 dy[9];
                    sh9_jacobian(v, dy);
                    Vec3 du{0, 0, 0};
                    for (int k = 0; k < 9; ++k) du += dy[k] * (ds_ * c9[k]);
                    dv_total += du;
                }
            }
        }

        // material fields
        if (m.emission_mode) {
            if (req.emission && max_abs(demis) > 0) {
                auto es = m.emission.sample(s.p);
                if (es.inside) {
                    real ups[3];
                    for (int ch = 0; ch < 3; ++ch)
                        ups[ch] = demis[ch] * s.emis[ch] * (1 - s.emis[ch]);
                    m.emission.scatter(es, ups, g.emission.data());
                }
            }
        } else if (req.fields || want_p) {
            if (max_abs(dn_total) > 0) {
                Vec3 dnraw = normalize_backward(s.n_raw, dn_total);
                auto ns_ = F.normal.sample(s.p);
                if (ns_.inside) {
                    if (req.fields) {
                        real ups[3] = {dnraw.x, dnraw.y, dnraw.z};
                        F.normal.scatter(ns_, ups, g.normal.data());
                    }
                    if (want_p) {
                        Vec3 dch[3];
                        F.normal.eval_spatial_grad(ns_, dch);
                        for (int ch = 0; ch < 3; ++ch) dp_i += dch[ch] * dnraw[ch];
                    }
                }
            }
            if (max_abs(dalb) > 0) {
                auto as_ = F.albedo.sample(s.p);
                if (as_.inside) {
                    real ups[3];
                    for (int ch = 0; ch < 3; ++ch)
                        ups[ch] = dalb[ch] * s.albedo[ch] * (1 - s.albedo[ch]);
                    if (req.fields) F.albedo.scatter(as_, ups, g.albedo.data());
                    if (want_p) {
                        Vec3 dch[3];
                        F.albedo.eval_spatial_grad(as_, dch);
                        for (int ch = 0; ch < 3; ++ch) dp_i += dch[ch] * ups[ch];
                    }
                }
            }
            if (drho != 0) {
                auto rs_ = F.roughness.sample(s.p);
                if (rs_.inside) {
                    real ups = drho * F.activate_rough_deriv(s.rho_raw);
                    if (req.fields) F.roughness.scatter(rs_, &ups, g.roughness.data());
                    if (want_p) {
                        Vec3 dch;
                        F.roughness.eval_spatial_grad(rs_, &dch);
                        dp_i += dch * ups;
                    }
                }
            }
        }

        if (want_p) dLdp[i] += dp_i;
        dv_total_ray += dv_total;
    }

    // composite: convert tau adjoints to alpha adjoints (suffix trick)
    real S = up.d_tau_end * rec.tau_end;
    for (int j = n - 1; j >= 0; --j) {
        real om = std::max(1 - rec.samples[j].alpha, kOmEps);
        g_alpha[j] -= S / om;
        S += g_tau[j] * rec.samples[j].tau;
    }

    // alpha -> sigma, delta; scatter density
    real dfar_extra = 0;  // last delta references far directly
    for (int i = 0; i < n; ++i) {
        const SampleRec& s = rec.samples[i];
        if (g_alpha[i] == 0) continue;
        real E = std::exp(-s.delta * s.sigma);
        real dsig = g_alpha[i] * s.delta * E;
        real ddelta = g_alpha[i] * s.sigma * E;
        auto ds = F.density.sample(s.p);
        if (ds.inside) {
            real act_d = F.activate_density_deriv(s.sig_raw);
            if (req.fields || (m.emission_mode && req.emission)) {
                real ups = dsig * act_d;
                F.density.scatter(ds, &ups, g.density.data());
            }
            if (want_p) {
                Vec3 draw;
                F.density.eval_spatial_grad(ds, &draw);
                dLdp[i] += draw * (dsig * act_d);
            }
        }
        if (want_p) {
            // delta_i = t_{i+1} - t_i (last: far - t_last)
            if (i + 1 < n) dLdt[i + 1] += ddelta; else dfar_extra += ddelta;
            dLdt[i] -= ddelta;
        }
    }

    if (!want_p) return;

    // camera chain
    real dnear = 0, dfar = dfar_extra;
    for (int i = 0; i < n; ++i) {
        dLdt[i] += dot(dLdp[i], ray.dir);
        dL_dd += dLdp[i] * rec.samples[i].t;
        dL_do += dLdp[i];
        dnear += dLdt[i] * (1 - rec.samples[i].u);
        dfar += dLdt[i] * rec.samples[i].u;
    }
    // near/far from the box faces: t = (B - o_ax)/d_ax on the recorded axis
    auto face_chain = [&](int axis, real tval, real dt) {
        if (axis < 0 || dt == 0) return;
        real dax = ray.dir[axis];
        if (std::abs(dax) < 1e-12) return;
        dL_do[axis] += dt * (-1.0 / dax);
        dL_dd[axis] += dt * (-tval / dax);
    };
    face_chain(rec.entry_axis, rec.near, dnear);
    face_chain(rec.exit_axis, rec.far, dfar);

    dL_dd -= dv_total_ray;  // v = -d

    // o = -R^T t and d = R^T mhat with R = exp(omega) R_base at omega = 0.
    int vi = req.view_index;
    if (req.cam && vi >= 0 && vi < int(g.cam_omega.size())) {
        Mat3 Rb = req.cam->R();
        Vec3 Rdo = Rb * dL_do;
        g.cam_omega[vi] += cross(req.cam->trans, Rdo);
        g.cam_trans[vi] -= Rdo;
        Vec3 mhat = Rb * ray.dir;
        g.cam_omega[vi] += cross(Rb * dL_dd, mhat);
    }
}

Vec3 render_pixel(const Model& m, const Pinhole& cam, real px, real py,
                  const RenderOptions& o, Rng* rng) {
    RayRecord rec;
    render_ray(m, cam.ray(px, py), o, rng, rec);
    return rec.color;
}

RenderBuffers render_image(const Model& m, const Pinhole& cam, const RenderOptions& o,
                           uint64_t seed) {
    RenderBuffers b;
    int W = cam.width, H = cam.height;
    b.color = Image(W, H);
    b.depth = Image(W, H, 1);
    b.opacity = Image(W, H, 1);
    b.normal = Image(W, H);
    b.albedo = Image(W, H);
    b.rough = Image(W, H, 1);
    b.tauproj = Image(W, H, 1);

    Rng master(seed);
    parallel_for(std::size_t(H), [&](std::size_t y0, std::size_t y1, int) {
        for (std::size_t y = y0; y < y1; ++y) {
            for (int x = 0; x < W; ++x) {
                Rng rng = master.fork(y * W + x);
                RayRecord rec;
                render_ray(m, cam.ray(real(x), real(y)), o,
                           o.stratified ? &rng : nullptr, rec);
                b.color.set_rgb(x, int(y), rec.color);
                b.depth.at(x, int(y), 0) = rec.depth;
                b.opacity.at(x, int(y), 0) = rec.opacity;
                Vec3 na{0, 0, 0}, aa{0, 0, 0};
                real ra = 0, ta = 0;
                for (const auto& s : rec.samples) {
                    na += s.n * s.weight;
                    aa += s.albedo * s.weight;
                    ra += s.rho * s.weight;
                    ta += s.tau_proj * s.weight;
                }
                b.normal.set_rgb(x, int(y), na);
                b.albedo.set_rgb(x, int(y), aa);
                b.rough.at(x, int(y), 0) = ra;
                b.tauproj.at(x, int(y), 0) = ta;
            }
        }
    });
    return b;
}

}  // namespace procam
