// SPDX-License-Identifier: Apache-2.0
#include "procam/config.hpp"

#include <cctype>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace procam {

namespace {

// one registry entry per key: how to parse a raw value and how to print it
struct Key {
    std::string section, name;
    std::function<void(RunConfig&, const std::string&)> parse;
    std::function<std::string(const RunConfig&)> print;
};

[[noreturn]] void fail(const std::string& what) {
    throw std::invalid_argument("config: " + what);
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

real parse_real(const std::string& v) {
    std::size_t used = 0;
    real x;
    try {
        x = std::stod(v, &used);
    } catch (const std::exception&) {
        fail("bad number '" + v + "'");
    }
    if (used != v.size()) fail("bad number '" + v + "'");
    return x;
}

int parse_int(const std::string& v) {
    real x = parse_real(v);
    int i = int(x);
    if (real(i) != x) fail("expected integer, got '" + v + "'");
    return i;
}

uint64_t parse_u64(const std::string& v) {
    try {
        std::size_t used = 0;
        uint64_t x = std::stoull(v, &used);
        if (used != v.size()) fail("bad integer '" + v + "'");
        return x;
    } catch (const std::invalid_argument&) {
        fail("bad integer '" + v + "'");
    } catch (const std::out_of_range&) {
        fail("integer out of range '" + v + "'");
    }
}

bool parse_bool(const std::string& v) {
    if (v == "true") return true;
    if (v == "false") return false;
    fail("expected true/false, got '" + v + "'");
}

std::string parse_string(const std::string& v) {
    if (v.size() < 2 || v.front() != '"' || v.back() != '"')
        fail("expected quoted string, got '" + v + "'");
    return v.substr(1, v.size() - 2);
}

std::vector<std::string> parse_array(const std::string& v) {
    if (v.size() < 2 || v.front() != '[' || v.back() != ']')
        fail("expected [array], got '" + v + "'");
    std::vector<std::string> out;
    std::string body = v.substr(1, v.size() - 2);
    std::stringstream ss(body);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

// shortest decimal that parses back to the same double
std::string fmt(real x) {
    for (int prec = 1; prec <= 17; ++prec) {
        std::ostringstream o;
        o.precision(prec);
        o << x;
        if (std::stod(o.str()) == x) return o.str();
    }
    return std::to_string(x);
}

template <class T>
Key key_of(const char* sec, const char* name, T RunConfig::* mem);

template <>
Key key_of<int>(const char* sec, const char* name, int RunConfig::* mem) {
    return {sec, name, [mem](RunConfig& c, const std::string& v) { c.*mem = parse_int(v); },
            [mem](const RunConfig& c) { return std::to_string(c.*mem); }};
}

template <>
Key key_of<real>(const char* sec, const char* name, real RunConfig::* mem) {
    return {sec, name, [mem](RunConfig& c, const std::string& v) { c.*mem = parse_real(v); },
            [mem](const RunConfig& c) { return fmt(c.*mem); }};
}

template <>
Key key_of<bool>(const char* sec, const char* name, bool RunConfig::* mem) {
    return {sec, name, [mem](RunConfig& c, const std::string& v) { c.*mem = parse_bool(v); },
            [mem](const RunConfig& c) { return (c.*mem) ? "true" : "false"; }};
}

template <>
Key key_of<std::string>(const char* sec, const char* name, std::string RunConfig::* mem) {
    return {sec, name,
            [mem](RunConfig& c, const std::string& v) { c.*mem = parse_string(v); },
            [mem](const RunConfig& c) { return "\"" + c.*mem + "\""; }};
}

template <class T, class S>
Key nested_real(const char* sec, const char* name, S RunConfig::* outer, T S::* inner) {
    return {sec, name,
            [outer, inner](RunConfig& c, const std::string& v) {
                (c.*outer).*inner = T(parse_real(v));
            },
            [outer, inner](const RunConfig& c) { return fmt(real((c.*outer).*inner)); }};
}

template <class S>
Key nested_int(const char* sec, const char* name, S RunConfig::* outer, int S::* inner) {
    return {sec, name,
            [outer, inner](RunConfig& c, const std::string& v) {
                (c.*outer).*inner = parse_int(v);
            },
            [outer, inner](const RunConfig& c) {
                return std::to_string((c.*outer).*inner);
            }};
}

std::vector<Key> registry() {
    using RC = RunConfig;
    std::vector<Key> r;
    r.push_back(key_of("scene", "name", &RC::scene_name));
    r.push_back(key_of("scene", "views", &RC::views));
    r.push_back(key_of("scene", "protocol", &RC::protocol));
    r.push_back(key_of("scene", "image_size", &RC::image_size));
    r.push_back(key_of("scene", "pattern_size", &RC::pattern_size));

    r.push_back(nested_real("loss", "w_img", &RC::weights, &LossWeights::w_img));
    r.push_back(nested_real("loss", "w_bg", &RC::weights, &LossWeights::w_bg));
    r.push_back(nested_real("loss", "w_tr", &RC::weights, &LossWeights::w_tr));
    r.push_back(nested_real("loss", "w_n1", &RC::weights, &LossWeights::w_n1));
    r.push_back(nested_real("loss", "w_n2", &RC::weights, &LossWeights::w_n2));
    r.push_back(nested_real("loss", "w_fog", &RC::weights, &LossWeights::w_fog));
    r.push_back(nested_real("loss", "b", &RC::weights, &LossWeights::b));

    r.push_back(nested_int("schedule", "scene_steps", &RC::sched, &ScheduleConfig::scene_steps));
    r.push_back(nested_int("schedule", "projector_steps", &RC::sched,
                           &ScheduleConfig::projector_steps));
    r.push_back(nested_int("schedule", "finetune_steps", &RC::sched,
                           &ScheduleConfig::finetune_steps));
    r.push_back(nested_int("schedule", "batch_rays", &RC::sched, &ScheduleConfig::batch_rays));
    r.push_back(nested_real("schedule", "lr_fields", &RC::sched, &ScheduleConfig::lr_fields));
    r.push_back(nested_real("schedule", "lr_rot", &RC::sched, &ScheduleConfig::lr_rot));
    r.push_back(nested_real("schedule", "lr_trans", &RC::sched, &ScheduleConfig::lr_trans));
    r.push_back(nested_real("schedule", "lr_intrinsics", &RC::sched,
                            &ScheduleConfig::lr_intrinsics));
    r.push_back(nested_real("schedule", "lr_color", &RC::sched, &ScheduleConfig::lr_color));
    r.push_back(nested_real("schedule", "lr_emission", &RC::sched,
                            &ScheduleConfig::lr_emission));
    r.push_back(nested_real("schedule", "cosine_floor", &RC::sched,
                            &ScheduleConfig::cosine_floor));
    r.push_back({"schedule", "geo_res",
                 [](RunConfig& c, const std::string& v) {
                     c.sched.geo_res.clear();
                     for (const auto& it : parse_array(v))
                         c.sched.geo_res.push_back(parse_int(it));
                 },
                 [](const RunConfig& c) {
                     std::string s = "[";
                     for (std::size_t i = 0; i < c.sched.geo_res.size(); ++i)
                         s += (i ? ", " : "") + std::to_string(c.sched.geo_res[i]);
                     return s + "]";
                 }});
    r.push_back({"schedule", "geo_at",
                 [](RunConfig& c, const std::string& v) {
                     c.sched.geo_at.clear();
                     for (const auto& it : parse_array(v))
                         c.sched.geo_at.push_back(parse_real(it));
                 },
                 [](const RunConfig& c) {
                     std::string s = "[";
                     for (std::size_t i = 0; i < c.sched.geo_at.size(); ++i)
                         s += (i ? ", " : "") + fmt(c.sched.geo_at[i]);
                     return s + "]";
                 }});
    r.push_back(nested_int("schedule", "mat_res", &RC::sched, &ScheduleConfig::mat_res));
    r.push_back(nested_int("schedule", "tau_res", &RC::sched, &ScheduleConfig::tau_res));
    r.push_back(nested_real("schedule", "diverge_factor", &RC::sched,
                            &ScheduleConfig::diverge_factor));
    r.push_back(nested_int("schedule", "diverge_patience", &RC::sched,
                           &ScheduleConfig::diverge_patience));
    r.push_back(key_of("schedule", "n_primary", &RC::n_primary));
    r.push_back(key_of("schedule", "n_secondary", &RC::n_secondary));
    r.push_back(key_of("schedule", "stratified", &RC::stratified));
    r.push_back(key_of("schedule", "learned_transmittance", &RC::learned_transmittance));

    r.push_back(key_of("projector_init", "rot_deg", &RC::init_rot_deg));
    r.push_back(key_of("projector_init", "trans", &RC::init_trans));
    r.push_back(key_of("projector_init", "optimize_pose", &RC::optimize_pose));
    r.push_back(key_of("projector_init", "optimize_intrinsics", &RC::optimize_intrinsics));
    r.push_back(key_of("projector_init", "optimize_color", &RC::optimize_color));
    r.push_back(key_of("projector_init", "optimize_colight", &RC::optimize_colight));

    r.push_back({"io", "seed",
                 [](RunConfig& c, const std::string& v) { c.seed = parse_u64(v); },
                 [](const RunConfig& c) { return std::to_string(c.seed); }});
    r.push_back(key_of("io", "threads", &RC::threads));
    r.push_back(key_of("io", "deterministic", &RC::deterministic));
    r.push_back(key_of("io", "write_previews", &RC::write_previews));
    return r;
}

const std::vector<std::string> kSections = {"scene", "loss", "schedule", "projector_init",
                                            "io"};

}  // namespace

RunConfig parse_run_config(const std::string& text) {
    RunConfig cfg;
    std::vector<Key> keys = registry();
    std::string section;
    std::istringstream in(text);
    std::string line;
    int ln = 0;
    while (std::getline(in, line)) {
        ++ln;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') fail("line " + std::to_string(ln) + ": bad section");
            section = trim(line.substr(1, line.size() - 2));
            bool known = false;
            for (const auto& s : kSections) known = known || s == section;
            if (!known) fail("unknown section [" + section + "]");
            continue;
        }
        std::size_t eq = line.find('=');
        if (eq == std::string::npos) fail("line " + std::to_string(ln) + ": expected key = value");
        if (section.empty()) fail("key before any [section]");
        std::string name = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        bool handled = false;
        for (const auto& k : keys)
            if (k.section == section && k.name == name) {
                k.parse(cfg, value);
                handled = true;
                break;
            }
        if (!handled) fail("unknown key " + section + "." + name);
    }
    if (cfg.protocol != "triplet" && cfg.protocol != "cycled")
        fail("scene.protocol must be triplet or cycled");
    if (cfg.sched.geo_res.size() != cfg.sched.geo_at.size() || cfg.sched.geo_res.empty())
        fail("schedule.geo_res and schedule.geo_at must be non-empty and equal-length");
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) fail("cannot read " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_run_config(ss.str());
}

std::string serialize_run_config(const RunConfig& cfg) {
    std::vector<Key> keys = registry();
    std::ostringstream out;
    for (const auto& sec : kSections) {
        out << "[" << sec << "]\n";
        for (const auto& k : keys)
            if (k.section == sec) out << k.name << " = " << k.print(cfg) << "\n";
        out << "\n";
    }
    return out.str();
}

void save_run_config(const std::string& path, const RunConfig& cfg) {
    std::ofstream f(path);
    if (!f) fail("cannot write " + path);
    f << serialize_run_config(cfg);
}

TrainConfig to_train_config(const RunConfig& cfg) {
    TrainConfig t;
    t.sched = cfg.sched;
    t.weights = cfg.weights;
    t.render.n_primary = cfg.n_primary;
    t.render.n_secondary = cfg.n_secondary;
    t.render.stratified = cfg.stratified;
    t.render.tr_mode = cfg.learned_transmittance ? TrMode::kLearned : TrMode::kMarched;
    t.seed = cfg.seed;
    t.optimize_projector_pose = cfg.optimize_pose;
    t.optimize_projector_intrinsics = cfg.optimize_intrinsics;
    t.optimize_projector_color = cfg.optimize_color;
    t.optimize_colight = cfg.optimize_colight;
    return t;
}

}  // namespace procam
