// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "procam/image.hpp"
#include "procam/math.hpp"

namespace procam {

inline constexpr real kPsnrCap = 99.0;

// 10*log10(max(ref)/MSE), the ratio convention used for the reconstruction
// tables; capped at kPsnrCap when the images match.
real psnr_refmax(const Image& img, const Image& ref);

// Standard 10*log10(peak^2/MSE) with peak 1.
real psnr_std(const Image& img, const Image& ref, real peak = 1.0);

// Masked variants: only pixels where mask(x,y,0) > 0.5 enter the MSE.
real psnr_refmax_masked(const Image& img, const Image& ref, const Image& mask);
real psnr_std_masked(const Image& img, const Image& ref, const Image& mask, real peak = 1.0);

// Angle between two directions, degrees in [0, 180].
real angular_error_deg(const Vec3& a, const Vec3& b);

}  // namespace procam
