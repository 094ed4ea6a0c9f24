// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

#include "procam/math.hpp"

namespace procam {

// Dense node-centered voxel grid over an axis-aligned box; trilinear
// interpolation with closed-form gradients w.r.t. both the parameters and
// the query point.  Values here are raw parameters; activations live in
// the field wrappers.
struct VoxelGrid3 {
    int nx = 2, ny = 2, nz = 2;
    int channels = 1;
    AABB domain;
    std::vector<real> data;  // [z][y][x][channel]

    VoxelGrid3() = default;
    VoxelGrid3(int n, int c, const AABB& box) : VoxelGrid3(n, n, n, c, box) {}
    VoxelGrid3(int nx_, int ny_, int nz_, int c, const AABB& box)
        : nx(nx_), ny(ny_), nz(nz_), channels(c), domain(box),
          data(std::size_t(nx_) * ny_ * nz_ * c, 0.0) {}

    std::size_t size() const { return data.size(); }
    std::size_t node_index(int ix, int iy, int iz) const {
        return (std::size_t(iz) * ny + iy) * nx + ix;
    }

    struct Sample {
        bool inside = false;
        std::size_t base[8];  // node index * channels
        real w[8];
        Vec3 dw[8];  // dw_k/dp
    };

    Sample sample(const Vec3& p) const {
        Sample s;
        if (!domain.contains(p)) return s;
        s.inside = true;
        Vec3 ext = domain.extent();
        real gx = (p.x - domain.lo.x) / ext.x * (nx - 1);
        real gy = (p.y - domain.lo.y) / ext.y * (ny - 1);
        real gz = (p.z - domain.lo.z) / ext.z * (nz - 1);
        int ix = std::min(int(gx), nx - 2);
        int iy = std::min(int(gy), ny - 2);
        int iz = std::min(int(gz), nz - 2);
        real tx = gx - ix, ty = gy - iy, tz = gz - iz;
        real sx = (nx - 1) / ext.x, sy = (ny - 1) / ext.y, sz = (nz - 1) / ext.z;
        int k = 0;
        for (int dz = 0; dz < 2; ++dz)
            for (int dy = 0; dy < 2; ++dy)
                for (int dx = 0; dx < 2; ++dx, ++k) {
                    real wx = dx ? tx : 1 - tx;
                    real wy = dy ? ty : 1 - ty;
                    real wz = dz ? tz : 1 - tz;
                    s.base[k] = node_index(ix + dx, iy + dy, iz + dz) * channels;
                    s.w[k] = wx * wy * wz;
                    s.dw[k] = {(dx ? 1.0 : -1.0) * sx * wy * wz,
                               (dy ? 1.0 : -1.0) * sy * wx * wz,
                               (dz ? 1.0 : -1.0) * sz * wx * wy};
                }
        return s;
    }

    // Raw interpolated values, one per channel.
    void eval(const Sample& s, real* out) const {
        for (int c = 0; c < channels; ++c) out[c] = 0;
        if (!s.inside) return;
        for (int k = 0; k < 8; ++k)
            for (int c = 0; c < channels; ++c) out[c] += s.w[k] * data[s.base[k] + c];
    }

    // d(raw value)/d(query point), one Vec3 per channel.
    void eval_spatial_grad(const Sample& s, Vec3* dout) const {
        for (int c = 0; c < channels; ++c) dout[c] = {0, 0, 0};
        if (!s.inside) return;
        for (int k = 0; k < 8; ++k)
            for (int c = 0; c < channels; ++c) dout[c] += s.dw[k] * data[s.base[k] + c];
    }

    // Accumulate upstream * d(raw)/d(theta) into grad (same layout as data).
    void scatter(const Sample& s, const real* upstream, real* grad) const {
        if (!s.inside) return;
        for (int k = 0; k < 8; ++k)
            for (int c = 0; c < channels; ++c)
                grad[s.base[k] + c] += s.w[k] * upstream[c];
    }

    // Chain for losses that consume the spatial gradient of the field:
    // accumulate upstream[c] . d(d raw_c/dp)/d(theta).
    void scatter_spatial(const Sample& s, const Vec3* upstream, real* grad) const {
        if (!s.inside) return;
        for (int k = 0; k < 8; ++k)
            for (int c = 0; c < channels; ++c)
                grad[s.base[k] + c] += dot(s.dw[k], upstream[c]);
    }

    // Trilinear resample onto a new resolution (coarse-to-fine schedule).
    VoxelGrid3 resampled(int new_nx, int new_ny, int new_nz) const;

    void fill(real v) { std::fill(data.begin(), data.end(), v); }
    void fill_channel(int c, real v) {
        for (std::size_t i = c; i < data.size(); i += channels) data[i] = v;
    }
};

}  // namespace procam
