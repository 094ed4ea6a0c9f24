// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "procam/geometry.hpp"
#include "procam/grid.hpp"
#include "procam/math.hpp"

namespace procam {

struct FieldOptions {
    bool softplus_density = true;   // false: literal max(0, x) clip
    bool flip_normal_sign = false;  // default n_hat = -grad(sigma)/|grad|
    real rho_min = 0.02;            // roughness floor, shading stability
};

// Second-order real spherical harmonics basis (9 values) and its Jacobian
// w.r.t. the (unit) direction.
void sh9(const Vec3& d, real* y);
void sh9_jacobian(const Vec3& d, Vec3* dy);  // dy[k] = d y_k / d d

// All trainable scene fields.  Grids hold raw parameters; activations:
//   density:   softplus (or clip), exterior 0
//   normal:    normalized on read, exterior +z
//   albedo:    sigmoid into (0,1)
//   roughness: rho_min + (1-rho_min)*sigmoid
//   tau:       sigmoid( sum_k c_k(p) Y_k(dir) ), exterior 1
struct FieldSet {
    AABB domain;
    VoxelGrid3 density;    // 1 ch
    VoxelGrid3 normal;     // 3 ch
    VoxelGrid3 albedo;     // 3 ch
    VoxelGrid3 roughness;  // 1 ch
    VoxelGrid3 tau;        // 9 ch (SH coefficients)
    FieldOptions opt;

    static FieldSet create(const AABB& box, int geo_res, int mat_res, int tau_res,
                           const FieldOptions& opt = {});

    real activate_density(real raw) const {
        return opt.softplus_density ? softplus(raw) : std::max(real(0), raw);
    }
    real activate_density_deriv(real raw) const {
        return opt.softplus_density ? softplus_deriv(raw) : (raw > 0 ? 1.0 : 0.0);
    }
    real activate_rough(real raw) const {
        return opt.rho_min + (1 - opt.rho_min) * sigmoid(raw);
    }
    real activate_rough_deriv(real raw) const {
        return (1 - opt.rho_min) * sigmoid_deriv(raw);
    }

    // Activated density; 0 outside the domain.
    real sigma_at(const Vec3& p) const;
    // tau-hat field; 1 outside the domain.  dir: unit, pointing from p
    // toward the light/origin side of the path.
    real tau_at(const Vec3& p, const Vec3& dir) const;

    // Unit normal along -grad(sigma) (flip_normal_sign reverses it); nullopt
    // when |grad| <= eps (sample skipped by the normal loss).
    std::optional<Vec3> density_gradient_normal(const Vec3& p, real eps = 1e-9) const;
};

// Gradient accumulator mirroring every trainable block.
struct ModelGrads {
    std::vector<real> density, normal, albedo, roughness, tau, emission;
    Vec3 proj_omega{}, proj_trans{};
    real proj_fx = 0;
    real proj_log_gamma = 0;
    Vec3 proj_log_gain{}, co_log_gain{};
    std::vector<real> pattern;          // sized only when the pattern is optimized
    std::vector<Vec3> cam_omega, cam_trans;  // per view, sized when cameras optimized

    void zero();
    void add(const ModelGrads& o);
    bool finite() const;
};

// The trained artifact: scene fields + projector + co-located light.
struct Model {
    FieldSet fields;
    ProjectorDevice projector;
    ColocatedLight colight;
    // Axis-angle increment composed onto the projector rotation; held at
    // zero between optimizer steps (exponential-map update).
    Vec3 proj_omega{0, 0, 0};

    bool emission_mode = false;
    VoxelGrid3 emission;  // 3 ch raw, sigmoid-activated (baseline model)

    void fold_projector_omega() {
        if (norm(proj_omega) == 0) return;
        projector.optics.rot = (quat_exp(proj_omega) * projector.optics.rot).normalized();
        proj_omega = {0, 0, 0};
    }

    void init_grads(ModelGrads& g) const;

    void save(const std::string& path) const;
    static Model load(const std::string& path);

    // Order-stable digest of every trainable parameter (frozen-model checks).
    uint64_t checksum() const;
};

}  // namespace procam
