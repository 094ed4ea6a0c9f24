// SPDX-License-Identifier: Apache-2.0
#include "procam/metrics.hpp"

#include <stdexcept>

namespace procam {

namespace {

real masked_mse(const Image& img, const Image& ref, const Image* mask) {
    if (img.width != ref.width || img.height != ref.height || img.channels != ref.channels)
        throw std::invalid_argument("psnr: image shapes differ");
    real acc = 0;
    std::size_t count = 0;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            if (mask && mask->at(x, y, 0) <= 0.5) continue;
            for (int c = 0; c < img.channels; ++c) {
                real d = img.at(x, y, c) - ref.at(x, y, c);
                acc += d * d;
                ++count;
            }
        }
    return count ? acc / real(count) : 0.0;
}

real to_db(real ratio) { return std::min(kPsnrCap, 10.0 * std::log10(ratio)); }

}  // namespace

real psnr_refmax(const Image& img, const Image& ref) {
    real mse = masked_mse(img, ref, nullptr);
    if (mse <= 0) return kPsnrCap;
    return to_db(ref.max_value() / mse);
}

real psnr_std(const Image& img, const Image& ref, real peak) {
    real mse = masked_mse(img, ref, nullptr);
    if (mse <= 0) return kPsnrCap;
    return to_db(peak * peak / mse);
}

real psnr_refmax_masked(const Image& img, const Image& ref, const Image& mask) {
    real mse = masked_mse(img, ref, &mask);
    if (mse <= 0) return kPsnrCap;
    return to_db(ref.max_value() / mse);
}

real psnr_std_masked(const Image& img, const Image& ref, const Image& mask, real peak) {
    real mse = masked_mse(img, ref, &mask);
    if (mse <= 0) return kPsnrCap;
    return to_db(peak * peak / mse);
}

real angular_error_deg(const Vec3& a, const Vec3& b) {
    real c = dot(normalized(a), normalized(b));
    return rad2deg(std::acos(std::clamp(c, real(-1), real(1))));
}

}  // namespace procam
