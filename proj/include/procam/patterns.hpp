// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "procam/image.hpp"
#include "procam/rng.hpp"

namespace procam {

struct Pattern {
    Image image;
    std::string kind;  // white | black | flood | lollipop | noise | circles | custom
    uint64_t seed = 0;
};

// Constant image.
Pattern flood(int width, int height, real value);

// Dense packing of disc+dot+stick glyphs on a jittered grid.  Each glyph is
// a filled disc of saturated color, a small contrasting center dot, and a
// radial stick of random orientation that breaks the circular symmetry.
// Deterministic per seed; with n_pops = 1 the single glyph is centered.
Pattern lollipop(int width, int height, int n_pops, uint64_t seed);

// Per-pixel uniform RGB noise.
Pattern noise_pattern(int width, int height, uint64_t seed);

// Alternating-color concentric rings around the image center.
Pattern concentric_circles(int width, int height, int n_rings, uint64_t seed);

// Fraction of pixels with any nonzero channel.
real coverage(const Image& img);

// Saturated color wheel (S = V = 1).
Vec3 hsv_saturated(real hue);

}  // namespace procam
