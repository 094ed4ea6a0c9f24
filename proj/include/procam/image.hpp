// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "procam/math.hpp"

namespace procam {

// Row-major RGB (or single channel) raster, linear values, doubles.
struct Image {
    int width = 0, height = 0, channels = 3;
    std::vector<real> data;

    Image() = default;
    Image(int w, int h, int c = 3) : width(w), height(h), channels(c),
                                     data(std::size_t(w) * h * c, 0.0) {}

    real& at(int x, int y, int c) { return data[(std::size_t(y) * width + x) * channels + c]; }
    real at(int x, int y, int c) const { return data[(std::size_t(y) * width + x) * channels + c]; }

    Vec3 rgb(int x, int y) const {
        if (channels == 1) { real v = at(x, y, 0); return {v, v, v}; }
        return {at(x, y, 0), at(x, y, 1), at(x, y, 2)};
    }
    void set_rgb(int x, int y, const Vec3& v) {
        if (channels == 1) { at(x, y, 0) = v.x; return; }
        at(x, y, 0) = v.x; at(x, y, 1) = v.y; at(x, y, 2) = v.z;
    }

    void fill(real v) { std::fill(data.begin(), data.end(), v); }

    // Bilinear sample at continuous pixel coordinates (pixel centers at
    // integer+0.5).  Clamps to the border.
    Vec3 bilinear(real px, real py) const;
    // Backward: scatters dL/drgb into grad (same layout as data) and returns
    // dL/d(px,py).
    Vec2 bilinear_backward(real px, real py, const Vec3& drgb,
                           std::vector<real>* grad) const;

    real max_value() const;
    real mse(const Image& ref) const;  // mean over all pixels x channels
};

// PFM: little-endian float32, linear ("PF" color / "Pf" gray).
void write_pfm(const std::string& path, const Image& img);
Image read_pfm(const std::string& path);

// PNG: 8-bit, values gamma-encoded (1/2.2) on write and decoded on read
// when `display_gamma` is set; raw [0,1]<->[0,255] otherwise.
void write_png(const std::string& path, const Image& img, bool display_gamma = true);
Image read_png(const std::string& path, bool display_gamma = true);

// Convenience: routes by extension (.pfm/.png).
void write_image(const std::string& path, const Image& img);
Image read_image(const std::string& path);

}  // namespace procam
