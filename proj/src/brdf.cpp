// SPDX-License-Identifier: Apache-2.0
#include "procam/brdf.hpp"

namespace procam {

Vec3 shade_backward(const ShadingContext& ctx, const Vec3& upstream, ShadeGrads& g,
                    real f0) {
    using ad::Tape;
    using ad::Var;
    thread_local Tape tape;
    tape.clear();

    auto lift3 = [&](const Vec3& x, Var* out) {
        out[0] = Var::input(tape, x.x);
        out[1] = Var::input(tape, x.y);
        out[2] = Var::input(tape, x.z);
    };
    Var n[3], v[3], l[3], a[3], L[3];
    lift3(ctx.normal, n);
    lift3(ctx.view, v);
    lift3(ctx.light, l);
    lift3(ctx.albedo, a);
    lift3(ctx.irradiance, L);
    Var rho = Var::input(tape, ctx.roughness);

    Var out[3];
    detail::shade_t(n, v, l, a, rho, L, f0, out);

    std::vector<std::pair<int, real>> seeds = {
        {out[0].i, upstream.x}, {out[1].i, upstream.y}, {out[2].i, upstream.z}};
    thread_local std::vector<real> adj;
    tape.backward(seeds, adj);

    auto grab3 = [&](const Var* x) {
        return Vec3{adj[x[0].i], adj[x[1].i], adj[x[2].i]};
    };
    g.dn = grab3(n);
    g.dv = grab3(v);
    g.dl = grab3(l);
    g.dalbedo = grab3(a);
    g.dirr = grab3(L);
    g.drho = adj[rho.i];
    return {out[0].v, out[1].v, out[2].v};
}

}  // namespace procam
