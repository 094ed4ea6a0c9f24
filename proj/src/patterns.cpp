// SPDX-License-Identifier: Apache-2.0
#include "procam/patterns.hpp"

#include <cmath>

namespace procam {

Vec3 hsv_saturated(real hue) {
    real h = (hue - std::floor(hue)) * 6.0;
    int i = int(h) % 6;
    real f = h - std::floor(h);
    switch (i) {
        case 0: return {1, f, 0};
        case 1: return {1 - f, 1, 0};
        case 2: return {0, 1, f};
        case 3: return {0, 1 - f, 1};
        case 4: return {f, 0, 1};
        default: return {1, 0, 1 - f};
    }
}

Pattern flood(int width, int height, real value) {
    Pattern p;
    p.kind = value <= 0 ? "black" : (value >= 1 ? "white" : "flood");
    p.image = Image(width, height, 3);
    p.image.fill(value);
    return p;
}

namespace {

void fill_disc(Image& img, real cx, real cy, real r, const Vec3& color) {
    int x0 = std::max(0, int(cx - r) - 1), x1 = std::min(img.width - 1, int(cx + r) + 1);
    int y0 = std::max(0, int(cy - r) - 1), y1 = std::min(img.height - 1, int(cy + r) + 1);
    real r2 = r * r;
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            real dx = x + 0.5 - cx, dy = y + 0.5 - cy;
            if (dx * dx + dy * dy <= r2) img.set_rgb(x, y, color);
        }
}

// capsule from (cx,cy) along angle, used for the glyph stick
void fill_stick(Image& img, real cx, real cy, real angle, real len, real half_w,
                const Vec3& color) {
    Vec2 d{std::cos(angle), std::sin(angle)};
    int x0 = std::max(0, int(cx - len) - 2), x1 = std::min(img.width - 1, int(cx + len) + 2);
    int y0 = std::max(0, int(cy - len) - 2), y1 = std::min(img.height - 1, int(cy + len) + 2);
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            real px = x + 0.5 - cx, py = y + 0.5 - cy;
            real along = px * d.x + py * d.y;
            if (along < 0 || along > len) continue;
            real across = std::abs(px * d.y - py * d.x);
            if (across <= half_w) img.set_rgb(x, y, color);
        }
}

}  // namespace

Pattern lollipop(int width, int height, int n_pops, uint64_t seed) {
    Pattern p;
    p.kind = "lollipop";
    p.seed = seed;
    p.image = Image(width, height, 3);
    Rng rng(seed ^ 0x6c6f6c6cULL);

    int grid = std::max(1, int(std::ceil(std::sqrt(real(n_pops)))));
    real cw = real(width) / grid, ch = real(height) / grid;
    real radius = 0.62 * std::min(cw, ch);  // oversized so neighbors touch
    real jitter = grid == 1 ? 0.0 : 0.14;

    struct Glyph {
        real cx, cy, angle;
        Vec3 disc, dot;
    };
    std::vector<Glyph> glyphs;
    int placed = 0;
    for (int gy = 0; gy < grid && placed < n_pops; ++gy)
        for (int gx = 0; gx < grid && placed < n_pops; ++gx, ++placed) {
            Glyph g;
            g.cx = (gx + 0.5 + rng.uniform(-jitter, jitter)) * cw;
            g.cy = (gy + 0.5 + rng.uniform(-jitter, jitter)) * ch;
            real hue = rng.uniform();
            g.disc = hsv_saturated(hue);
            g.dot = hsv_saturated(hue + 0.5);  // complementary: maximal contrast
            g.angle = rng.uniform(0, 2 * M_PI);
            glyphs.push_back(g);
        }

    // discs first so dots and sticks stay on top of overlaps
    for (const auto& g : glyphs) fill_disc(p.image, g.cx, g.cy, radius, g.disc);
    for (const auto& g : glyphs) {
        fill_stick(p.image, g.cx, g.cy, g.angle, 1.05 * radius,
                   std::max(real(1), 0.10 * radius), g.dot);
        fill_disc(p.image, g.cx, g.cy, std::max(real(1.5), 0.18 * radius), g.dot);
    }
    return p;
}

Pattern noise_pattern(int width, int height, uint64_t seed) {
    Pattern p;
    p.kind = "noise";
    p.seed = seed;
    p.image = Image(width, height, 3);
    Rng rng(seed ^ 0x6e6f6973ULL);
    for (auto& v : p.image.data) v = rng.uniform();
    return p;
}

Pattern concentric_circles(int width, int height, int n_rings, uint64_t seed) {
    Pattern p;
    p.kind = "circles";
    p.seed = seed;
    p.image = Image(width, height, 3);
    Rng rng(seed ^ 0x63697263ULL);
    std::vector<Vec3> colors;
    for (int i = 0; i < n_rings; ++i) colors.push_back(hsv_saturated(rng.uniform()));
    real cx = width * 0.5, cy = height * 0.5;
    real rmax = 0.5 * std::hypot(real(width), real(height));
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            real r = std::hypot(x + 0.5 - cx, y + 0.5 - cy);
            int ring = std::min(n_rings - 1, int(r / rmax * n_rings));
            p.image.set_rgb(x, y, colors[ring]);
        }
    return p;
}

real coverage(const Image& img) {
    std::size_t lit = 0, total = std::size_t(img.width) * img.height;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            Vec3 c = img.rgb(x, y);
            if (max_abs(c) > 0) ++lit;
        }
    return total ? real(lit) / real(total) : 0.0;
}

}  // namespace procam
