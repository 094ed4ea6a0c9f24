// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "procam/autodiff.hpp"
#include "procam/math.hpp"

namespace procam {

// Cook-Torrance microfacet: GGX distribution, height-correlated Smith
// visibility, Schlick Fresnel with fixed dielectric F0, plus Lambertian
// diffuse.  Outgoing radiance toward the viewer:
//   c = L * (a/pi + D*V*F) * max(0, n.l)
// All direction vectors unit length; v toward the viewer, l toward the light.
struct ShadingContext {
    Vec3 view;    // v
    Vec3 light;   // l
    Vec3 normal;  // n
    Vec3 albedo;
    real roughness = 0.5;
    Vec3 irradiance;  // L
};

inline constexpr real kDefaultF0 = 0.04;

namespace detail {

using ad::Var;
inline real vmax(real a, real floor) { return a > floor ? a : floor; }
using ad::vmax;

template <class T>
T dot3(const T* a, const T* b) {
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

// Templated so the same arithmetic serves the plain forward pass and the
// taped backward pass.
template <class T>
void shade_t(const T n[3], const T v[3], const T l[3], const T a[3], const T& rho,
             const T Lirr[3], real f0, T out[3]) {
    using std::sqrt;
    using ad::sqrt;
    T nl = vmax(dot3(n, l), 0.0);
    T nv = vmax(dot3(n, v), 0.0);

    T h[3] = {l[0] + v[0], l[1] + v[1], l[2] + v[2]};
    T hn = sqrt(vmax(dot3(h, h), 1e-18));
    for (int k = 0; k < 3; ++k) h[k] = h[k] / hn;
    T nh = vmax(dot3(n, h), 0.0);
    T vh = vmax(dot3(v, h), 0.0);

    T alpha = rho * rho;
    T a2 = alpha * alpha;
    T dd = nh * nh * (a2 - 1.0) + 1.0;
    T D = a2 / (M_PI * dd * dd);
    T lv = nl * sqrt(nv * nv * (1.0 - a2) + a2) + nv * sqrt(nl * nl * (1.0 - a2) + a2);
    T V = 0.5 / vmax(lv, 1e-9);
    T omvh = 1.0 - vh;
    T omvh2 = omvh * omvh;
    T F = f0 + (1 - f0) * omvh2 * omvh2 * omvh;
    T spec = D * V * F;
    for (int k = 0; k < 3; ++k) out[k] = Lirr[k] * (a[k] * (1.0 / M_PI) + spec) * nl;
}

}  // namespace detail

inline Vec3 shade(const ShadingContext& ctx, real f0 = kDefaultF0) {
    real n[3] = {ctx.normal.x, ctx.normal.y, ctx.normal.z};
    real v[3] = {ctx.view.x, ctx.view.y, ctx.view.z};
    real l[3] = {ctx.light.x, ctx.light.y, ctx.light.z};
    real a[3] = {ctx.albedo.x, ctx.albedo.y, ctx.albedo.z};
    real L[3] = {ctx.irradiance.x, ctx.irradiance.y, ctx.irradiance.z};
    real out[3];
    detail::shade_t(n, v, l, a, ctx.roughness, L, f0, out);
    return {out[0], out[1], out[2]};
}

struct ShadeGrads {
    Vec3 dn, dv, dl, dalbedo, dirr;
    real drho = 0;
};

// Backward via the scalar tape: upstream is dLoss/d(out rgb).  Returns the
// forward color and fills grads (accumulating is the caller's job).
Vec3 shade_backward(const ShadingContext& ctx, const Vec3& upstream, ShadeGrads& g,
                    real f0 = kDefaultF0);

}  // namespace procam
