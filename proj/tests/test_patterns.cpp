// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "doctest.h"
#include "procam/patterns.hpp"

using namespace procam;

TEST_CASE("flood patterns are constant and named") {
    Pattern w = flood(32, 16, 1.0);
    CHECK(w.kind == "white");
    for (real v : w.image.data) CHECK(v == 1.0);
    Pattern b = flood(32, 16, 0.0);
    CHECK(b.kind == "black");
    CHECK(coverage(b.image) == 0.0);
    CHECK(coverage(w.image) == 1.0);
    Pattern g = flood(8, 8, 0.5);
    CHECK(g.kind == "flood");
}

TEST_CASE("saturated color wheel stays on the max-channel surface") {
    for (int i = 0; i < 24; ++i) {
        Vec3 c = hsv_saturated(i / 24.0);
        real mx = std::max({c.x, c.y, c.z});
        real mn = std::min({c.x, c.y, c.z});
        CHECK(mx == doctest::Approx(1.0));  // value 1
        CHECK(mn == doctest::Approx(0.0));  // saturation 1
    }
    // wraps
    Vec3 a = hsv_saturated(0.25), b = hsv_saturated(1.25);
    CHECK(norm(a - b) < 1e-12);
}

TEST_CASE("lollipop boards are deterministic, dense, and seed-sensitive") {
    Pattern a = lollipop(128, 128, 16, 7);
    Pattern b = lollipop(128, 128, 16, 7);
    Pattern c = lollipop(128, 128, 16, 8);
    CHECK(a.image.data == b.image.data);
    CHECK(a.image.data != c.image.data);
    CHECK(coverage(a.image) >= 0.8);
    CHECK(a.kind == "lollipop");
}

TEST_CASE("single lollipop glyph sits at the center with a contrasting dot") {
    Pattern p = lollipop(64, 64, 1, 3);
    Vec3 center = p.image.rgb(32, 32);
    CHECK(max_abs(center) > 0);  // dot covers the center
    // the dot color differs from the disc; probe several directions so the
    // (dot-colored) stick cannot mask the contrast
    real best = 0;
    for (int k = 0; k < 8; ++k) {
        real ang = 2 * M_PI * k / 8.0;
        Vec3 disc = p.image.rgb(32 + int(18 * std::cos(ang)), 32 + int(18 * std::sin(ang)));
        best = std::max(best, norm(center - disc));
    }
    CHECK(best > 0.5);
}

TEST_CASE("noise differs per seed and fills the unit range") {
    Pattern a = noise_pattern(64, 64, 1), b = noise_pattern(64, 64, 2);
    CHECK(a.image.data != b.image.data);
    real mn = 1, mx = 0, mean = 0;
    for (real v : a.image.data) {
        mn = std::min(mn, v);
        mx = std::max(mx, v);
        mean += v;
    }
    mean /= real(a.image.data.size());
    CHECK(mn >= 0.0);
    CHECK(mx <= 1.0);
    CHECK(std::abs(mean - 0.5) < 0.02);
}

TEST_CASE("concentric rings are radially constant") {
    Pattern p = concentric_circles(96, 96, 6, 11);
    // pixels at the same radius share a color
    Vec3 a = p.image.rgb(48 + 20, 48);
    Vec3 b = p.image.rgb(48, 48 + 20);
    CHECK(norm(a - b) < 1e-12);
    CHECK(coverage(p.image) > 0.9);
}
