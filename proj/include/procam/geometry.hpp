// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>

#include "procam/image.hpp"
#include "procam/math.hpp"
#include "procam/rng.hpp"

namespace procam {

struct Ray {
    Vec3 origin;
    Vec3 dir;  // unit
};

// Shared optical model for cameras and the projector (an inverse camera:
// same pinhole, light leaves the image plane instead of entering it).
// Pose is world->device: x_dev = R x_world + t.
struct Pinhole {
    real fx = 1, fy = 1, cx = 0.5, cy = 0.5;
    int width = 1, height = 1;
    Quat rot;    // world->device rotation
    Vec3 trans;  // world->device translation

    Mat3 R() const { return rot.to_matrix(); }
    Vec3 center() const { return tmul(R(), trans) * -1.0; }

    // Ray through pixel (u, v); the half-pixel center offset is applied here.
    Ray ray(real u, real v) const {
        Mat3 Rm = R();
        Vec3 dir_cam{(u + 0.5 - cx) / fx, (v + 0.5 - cy) / fy, 1.0};
        return {tmul(Rm, trans) * -1.0, normalized(tmul(Rm, dir_cam))};
    }

    // Continuous pixel + signed depth along the optical axis.  depth <= 0
    // means the point is behind the device; the pixel is still returned.
    struct Projection {
        Vec2 pix;
        real depth;
        bool in_front() const { return depth > 0; }
    };
    Projection project(const Vec3& p_world) const {
        Vec3 pc = R() * p_world + trans;
        real z = pc.z;
        real iz = std::abs(z) > 1e-15 ? 1.0 / z : 0.0;
        return {{fx * pc.x * iz + cx, fy * pc.y * iz + cy}, z};
    }

    Vec3 back_project(const Vec2& pix, real depth) const {
        Vec3 pc{(pix.x - cx) / fx * depth, (pix.y - cy) / fy * depth, depth};
        return tmul(R(), pc - trans);
    }

    bool pixel_in_bounds(const Vec2& pix) const {
        return pix.x >= 0 && pix.x <= width && pix.y >= 0 && pix.y <= height;
    }

    bool valid() const {
        return fx > 0 && fy > 0 && cx > 0 && cx < width && cy > 0 && cy < height;
    }

    std::string to_json() const;
    static Pinhole from_json(const std::string& text);
};

// Rotates the pose by exactly rot_deg about a random axis and moves the
// device center by trans along a random direction.  Deterministic per rng.
Pinhole pose_perturb(const Pinhole& p, real rot_deg, real trans, Rng& rng);

struct ProjectorDevice {
    Pinhole optics;
    real log_gamma = 0;              // gamma = exp(log_gamma) > 0
    Vec3 log_gain{0, 0, 0};          // per-channel gain G_p = exp(log_gain)
    const Image* pattern = nullptr;  // current projected image, [0,1]

    real gamma() const { return std::exp(log_gamma); }
    Vec3 gain() const { return {std::exp(log_gain.x), std::exp(log_gain.y), std::exp(log_gain.z)}; }
};

struct ColocatedLight {
    Vec3 log_gain{0, 0, 0};
    bool enabled = true;

    Vec3 gain() const { return {std::exp(log_gain.x), std::exp(log_gain.y), std::exp(log_gain.z)}; }
};

// Incident irradiance at a world point: G_p * I[P_p]^gamma, bilinear in the
// pattern, exactly zero outside the frustum or behind the projector.
Vec3 projector_irradiance(const ProjectorDevice& dev, const Vec3& p_world);

}  // namespace procam
