// SPDX-License-Identifier: Apache-2.0
#include "procam/grid.hpp"

namespace procam {

VoxelGrid3 VoxelGrid3::resampled(int new_nx, int new_ny, int new_nz) const {
    VoxelGrid3 out(new_nx, new_ny, new_nz, channels, domain);
    std::vector<real> vals(channels);
    for (int iz = 0; iz < new_nz; ++iz)
        for (int iy = 0; iy < new_ny; ++iy)
            for (int ix = 0; ix < new_nx; ++ix) {
                Vec3 p{domain.lo.x + domain.extent().x * ix / (new_nx - 1),
                       domain.lo.y + domain.extent().y * iy / (new_ny - 1),
                       domain.lo.z + domain.extent().z * iz / (new_nz - 1)};
                // nudge boundary nodes inside so the sample is valid
                p = cwise_min(cwise_max(p, domain.lo), domain.hi);
                Sample s = sample(p);
                eval(s, vals.data());
                std::size_t base = out.node_index(ix, iy, iz) * channels;
                for (int c = 0; c < channels; ++c) out.data[base + c] = vals[c];
            }
    return out;
}

}  // namespace procam
