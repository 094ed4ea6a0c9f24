// SPDX-License-Identifier: Apache-2.0
#include "procam/geometry.hpp"

#include <json.hpp>

namespace procam {

std::string Pinhole::to_json() const {
    nlohmann::json j;
    j["rotation"] = {rot.w, rot.x, rot.y, rot.z};
    j["translation"] = {trans.x, trans.y, trans.z};
    j["fx"] = fx; j["fy"] = fy; j["cx"] = cx; j["cy"] = cy;
    j["width"] = width; j["height"] = height;
    return j.dump();
}

Pinhole Pinhole::from_json(const std::string& text) {
    auto j = nlohmann::json::parse(text);
    Pinhole p;
    auto r = j.at("rotation");
    p.rot = Quat{r[0], r[1], r[2], r[3]}.normalized();
    auto t = j.at("translation");
    p.trans = {t[0], t[1], t[2]};
    p.fx = j.at("fx"); p.fy = j.at("fy");
    p.cx = j.at("cx"); p.cy = j.at("cy");
    p.width = j.at("width"); p.height = j.at("height");
    return p;
}

Pinhole pose_perturb(const Pinhole& p, real rot_deg, real trans, Rng& rng) {
    Pinhole out = p;
    if (rot_deg <= 0 && trans <= 0) return out;  // bit-exact identity
    Vec3 c = p.center();
    if (rot_deg > 0) {
        Quat dq = quat_from_axis_angle(rng.unit_vector(), deg2rad(rot_deg));
        out.rot = (dq * p.rot).normalized();
    }
    if (trans > 0) c += rng.unit_vector() * trans;
    out.trans = (out.R() * c) * -1.0;
    return out;
}

Vec3 projector_irradiance(const ProjectorDevice& dev, const Vec3& p_world) {
    auto pr = dev.optics.project(p_world);
    if (!pr.in_front() || !dev.optics.pixel_in_bounds(pr.pix)) return {0, 0, 0};
    Vec3 I = dev.pattern->bilinear(pr.pix.x, pr.pix.y);
    real g = dev.gamma();
    Vec3 G = dev.gain();
    return {G.x * std::pow(I.x, g), G.y * std::pow(I.y, g), G.z * std::pow(I.z, g)};
}

}  // namespace procam
