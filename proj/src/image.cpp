// SPDX-License-Identifier: Apache-2.0
#include "procam/image.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace procam {

Vec3 Image::bilinear(real px, real py) const {
    real fx = px - 0.5, fy = py - 0.5;
    real x0f = std::floor(fx), y0f = std::floor(fy);
    real tx = fx - x0f, ty = fy - y0f;
    int x0 = std::clamp(int(x0f), 0, width - 1);
    int x1 = std::clamp(int(x0f) + 1, 0, width - 1);
    int y0 = std::clamp(int(y0f), 0, height - 1);
    int y1 = std::clamp(int(y0f) + 1, 0, height - 1);
    Vec3 c00 = rgb(x0, y0), c10 = rgb(x1, y0), c01 = rgb(x0, y1), c11 = rgb(x1, y1);
    Vec3 c0 = c00 * (1 - tx) + c10 * tx;
    Vec3 c1 = c01 * (1 - tx) + c11 * tx;
    return c0 * (1 - ty) + c1 * ty;
}

Vec2 Image::bilinear_backward(real px, real py, const Vec3& drgb,
                              std::vector<real>* grad) const {
    real fx = px - 0.5, fy = py - 0.5;
    real x0f = std::floor(fx), y0f = std::floor(fy);
    real tx = fx - x0f, ty = fy - y0f;
    int x0 = std::clamp(int(x0f), 0, width - 1);
    int x1 = std::clamp(int(x0f) + 1, 0, width - 1);
    int y0 = std::clamp(int(y0f), 0, height - 1);
    int y1 = std::clamp(int(y0f) + 1, 0, height - 1);
    real w00 = (1 - tx) * (1 - ty), w10 = tx * (1 - ty);
    real w01 = (1 - tx) * ty, w11 = tx * ty;
    if (grad) {
        auto add = [&](int x, int y, real w) {
            std::size_t base = (std::size_t(y) * width + x) * channels;
            if (channels == 1) {
                (*grad)[base] += w * (drgb.x + drgb.y + drgb.z);
            } else {
                (*grad)[base + 0] += w * drgb.x;
                (*grad)[base + 1] += w * drgb.y;
                (*grad)[base + 2] += w * drgb.z;
            }
        };
        add(x0, y0, w00); add(x1, y0, w10); add(x0, y1, w01); add(x1, y1, w11);
    }
    Vec3 c00 = rgb(x0, y0), c10 = rgb(x1, y0), c01 = rgb(x0, y1), c11 = rgb(x1, y1);
    // d/dtx and d/dty of the lerp; zero at the clamped border (x1==x0).
    Vec3 dtx = (c10 - c00) * (1 - ty) + (c11 - c01) * ty;
    Vec3 dty = (c01 - c00) * (1 - tx) + (c11 - c10) * tx;
    bool inx = fx >= 0 && fx <= width - 1;
    bool iny = fy >= 0 && fy <= height - 1;
    return {inx ? dot(dtx, drgb) : 0.0, iny ? dot(dty, drgb) : 0.0};
}

real Image::max_value() const {
    real m = 0;
    for (real v : data) m = std::max(m, v);
    return m;
}

real Image::mse(const Image& ref) const {
    if (data.size() != ref.data.size())
        throw std::runtime_error("image mse: shape mismatch");
    real acc = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        real d = data[i] - ref.data[i];
        acc += d * d;
    }
    return acc / real(data.size());
}

// ---------------------------------------------------------------- PFM

void write_pfm(const std::string& path, const Image& img) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path);
    bool color = img.channels >= 3;
    f << (color ? "PF" : "Pf") << "\n" << img.width << " " << img.height << "\n-1.0\n";
    // PFM scanlines run bottom-to-top.
    int c = color ? 3 : 1;
    std::vector<float> row(std::size_t(img.width) * c);
    for (int y = img.height - 1; y >= 0; --y) {
        for (int x = 0; x < img.width; ++x)
            for (int k = 0; k < c; ++k)
                row[std::size_t(x) * c + k] = float(img.at(x, y, std::min(k, img.channels - 1)));
        f.write(reinterpret_cast<const char*>(row.data()), row.size() * sizeof(float));
    }
}

Image read_pfm(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path);
    std::string magic;
    int w, h;
    double scale;
    f >> magic >> w >> h >> scale;
    f.get();  // single whitespace after the header
    if (magic != "PF" && magic != "Pf") throw std::runtime_error("not a PFM: " + path);
    if (scale > 0) throw std::runtime_error("big-endian PFM unsupported: " + path);
    int c = magic == "PF" ? 3 : 1;
    Image img(w, h, c);
    std::vector<float> row(std::size_t(w) * c);
    for (int y = h - 1; y >= 0; --y) {
        f.read(reinterpret_cast<char*>(row.data()), row.size() * sizeof(float));
        if (!f) throw std::runtime_error("truncated PFM: " + path);
        for (int x = 0; x < w; ++x)
            for (int k = 0; k < c; ++k) img.at(x, y, k) = row[std::size_t(x) * c + k];
    }
    return img;
}

// ---------------------------------------------------------------- PNG

namespace {

void put_u32(std::vector<unsigned char>& v, uint32_t x) {
    v.push_back(x >> 24); v.push_back(x >> 16); v.push_back(x >> 8); v.push_back(x);
}

uint32_t get_u32(const unsigned char* p) {
    return (uint32_t(p[0]) << 24) | (uint32_t(p[1]) << 16) | (uint32_t(p[2]) << 8) | p[3];
}

void write_chunk(std::ofstream& f, const char type[4], const std::vector<unsigned char>& payload) {
    std::vector<unsigned char> hdr;
    put_u32(hdr, uint32_t(payload.size()));
    f.write(reinterpret_cast<const char*>(hdr.data()), 4);
    f.write(type, 4);
    if (!payload.empty())
        f.write(reinterpret_cast<const char*>(payload.data()), payload.size());
    uLong crc = crc32(0L, Z_NULL, 0);
    crc = crc32(crc, reinterpret_cast<const Bytef*>(type), 4);
    if (!payload.empty()) crc = crc32(crc, payload.data(), uInt(payload.size()));
    std::vector<unsigned char> tail;
    put_u32(tail, uint32_t(crc));
    f.write(reinterpret_cast<const char*>(tail.data()), 4);
}

unsigned char encode_value(real v, bool display_gamma) {
    v = clamp01(v);
    if (display_gamma) v = std::pow(v, 1.0 / 2.2);
    return static_cast<unsigned char>(std::lround(v * 255.0));
}

int paeth(int a, int b, int c) {
    int p = a + b - c;
    int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    if (pb <= pc) return b;
    return c;
}

}  // namespace

void write_png(const std::string& path, const Image& img, bool display_gamma) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path);
    static const unsigned char sig[8] = {137, 80, 78, 71, 13, 10, 26, 10};
    f.write(reinterpret_cast<const char*>(sig), 8);

    std::vector<unsigned char> ihdr;
    put_u32(ihdr, uint32_t(img.width));
    put_u32(ihdr, uint32_t(img.height));
    ihdr.push_back(8);                              // bit depth
    ihdr.push_back(img.channels == 1 ? 0 : 2);      // gray / RGB
    ihdr.push_back(0); ihdr.push_back(0); ihdr.push_back(0);
    write_chunk(f, "IHDR", ihdr);

    int c = img.channels == 1 ? 1 : 3;
    std::vector<unsigned char> raw;
    raw.reserve(std::size_t(img.height) * (1 + std::size_t(img.width) * c));
    for (int y = 0; y < img.height; ++y) {
        raw.push_back(0);  // filter: none
        for (int x = 0; x < img.width; ++x)
            for (int k = 0; k < c; ++k)
                raw.push_back(encode_value(img.at(x, y, std::min(k, img.channels - 1)),
                                           display_gamma));
    }
    uLongf dst_len = compressBound(uLong(raw.size()));
    std::vector<unsigned char> idat(dst_len);
    if (compress2(idat.data(), &dst_len, raw.data(), uLong(raw.size()), 6) != Z_OK)
        throw std::runtime_error("png deflate failed");
    idat.resize(dst_len);
    write_chunk(f, "IDAT", idat);
    write_chunk(f, "IEND", {});
}

Image read_png(const std::string& path, bool display_gamma) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path);
    std::vector<unsigned char> buf((std::istreambuf_iterator<char>(f)),
                                   std::istreambuf_iterator<char>());
    static const unsigned char sig[8] = {137, 80, 78, 71, 13, 10, 26, 10};
    if (buf.size() < 8 || std::memcmp(buf.data(), sig, 8) != 0)
        throw std::runtime_error("not a PNG: " + path);

    uint32_t w = 0, h = 0;
    int bit_depth = 0, color_type = 0;
    std::vector<unsigned char> idat;
    std::size_t pos = 8;
    while (pos + 8 <= buf.size()) {
        uint32_t len = get_u32(&buf[pos]);
        std::string type(reinterpret_cast<const char*>(&buf[pos + 4]), 4);
        const unsigned char* payload = &buf[pos + 8];
        if (type == "IHDR") {
            w = get_u32(payload);
            h = get_u32(payload + 4);
            bit_depth = payload[8];
            color_type = payload[9];
            if (payload[12] != 0) throw std::runtime_error("interlaced PNG unsupported");
        } else if (type == "IDAT") {
            idat.insert(idat.end(), payload, payload + len);
        } else if (type == "IEND") {
            break;
        }
        pos += 12 + len;
    }
    if (bit_depth != 8) throw std::runtime_error("only 8-bit PNG supported");
    int nch;
    switch (color_type) {
        case 0: nch = 1; break;
        case 2: nch = 3; break;
        case 4: nch = 2; break;
        case 6: nch = 4; break;
        default: throw std::runtime_error("unsupported PNG color type");
    }

    std::size_t stride = std::size_t(w) * nch;
    std::vector<unsigned char> raw(h * (stride + 1));
    uLongf dst_len = uLongf(raw.size());
    if (uncompress(raw.data(), &dst_len, idat.data(), uLong(idat.size())) != Z_OK ||
        dst_len != raw.size())
        throw std::runtime_error("png inflate failed: " + path);

    std::vector<unsigned char> img8(h * stride);
    for (uint32_t y = 0; y < h; ++y) {
        int filt = raw[y * (stride + 1)];
        const unsigned char* src = &raw[y * (stride + 1) + 1];
        unsigned char* dst = &img8[y * stride];
        const unsigned char* up = y > 0 ? &img8[(y - 1) * stride] : nullptr;
        for (std::size_t i = 0; i < stride; ++i) {
            int a = i >= std::size_t(nch) ? dst[i - nch] : 0;
            int b = up ? up[i] : 0;
            int cc = (up && i >= std::size_t(nch)) ? up[i - nch] : 0;
            int v = src[i];
            switch (filt) {
                case 0: break;
                case 1: v += a; break;
                case 2: v += b; break;
                case 3: v += (a + b) / 2; break;
                case 4: v += paeth(a, b, cc); break;
                default: throw std::runtime_error("bad PNG filter");
            }
            dst[i] = static_cast<unsigned char>(v);
        }
    }

    Image img(int(w), int(h), nch >= 3 ? 3 : 1);
    for (uint32_t y = 0; y < h; ++y)
        for (uint32_t x = 0; x < w; ++x)
            for (int k = 0; k < img.channels; ++k) {
                real v = img8[y * stride + x * nch + std::min(k, nch - 1)] / 255.0;
                if (display_gamma) v = std::pow(v, 2.2);
                img.at(int(x), int(y), k) = v;
            }
    return img;
}

void write_image(const std::string& path, const Image& img) {
    if (path.size() >= 4 && path.substr(path.size() - 4) == ".pfm")
        write_pfm(path, img);
    else
        write_png(path, img);
}

Image read_image(const std::string& path) {
    if (path.size() >= 4 && path.substr(path.size() - 4) == ".pfm")
        return read_pfm(path);
    return read_png(path);
}

}  // namespace procam
