#include "attune/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "attune/error.hpp"

namespace attune {

ScheduleProfile default_profile() {
    return ScheduleProfile{};
}

ScheduleProfile full_layer_profile(int n_layers, int n_steps) {
    ScheduleProfile p;
    p.n_layers = n_layers;
    p.n_steps = n_steps;
    p.window_steps = n_steps;
    const LayerRange all{1, n_layers};
    p.i2t_instance = all;
    p.i2t_background = all;
    p.i2t_attribute = all;
    p.t2t = all;
    p.i2i = all;
    return p;
}

ScheduleProfile empty_profile(int n_layers, int n_steps) {
    ScheduleProfile p = full_layer_profile(n_layers, n_steps);
    p.window_steps = 0;
    return p;
}

ScheduleProfile scale_profile(const ScheduleProfile& profile, int n_layers, int n_steps) {
    if (n_layers < 1 || n_steps < 1) {
        throw DimError("scale_profile: layer and step counts must be positive");
    }
    auto bound = [&](int b) {
        const double scaled = static_cast<double>(b) * n_layers / profile.n_layers;
        return std::max(1, static_cast<int>(std::llround(scaled)));
    };
    auto range = [&](LayerRange r) { return LayerRange{bound(r.lo), bound(r.hi)}; };

    ScheduleProfile out;
    out.n_layers = n_layers;
    out.n_steps = n_steps;
    out.window_steps = std::max(
        1, static_cast<int>(static_cast<long long>(profile.window_steps) * n_steps / profile.n_steps));
    out.i2t_instance = range(profile.i2t_instance);
    out.i2t_background = range(profile.i2t_background);
    out.i2t_attribute = range(profile.i2t_attribute);
    out.t2t = range(profile.t2t);
    out.i2i = range(profile.i2i);
    return out;
}

Activation activation_at(const ScheduleProfile& profile, int layer, int step) {
    Activation act;
    if (step >= profile.window_steps) return act;
    act.t2t = profile.t2t.contains(layer);
    act.i2i = profile.i2i.contains(layer);
    if (profile.i2t_instance.contains(layer)) act.i2t_classes.insert(TokenClass::Instance);
    if (profile.i2t_background.contains(layer)) act.i2t_classes.insert(TokenClass::Background);
    if (profile.i2t_attribute.contains(layer)) act.i2t_classes.insert(TokenClass::Attribute);
    return act;
}

namespace {

void validate(const ScheduleProfile& p) {
    if (p.n_layers < 1) throw FormatError("profile: layers must be >= 1");
    if (p.n_steps < 1) throw FormatError("profile: steps must be >= 1");
    if (p.window_steps < 0 || p.window_steps > p.n_steps) {
        throw FormatError("profile: window must be in [0, steps]");
    }
    auto check = [&](const LayerRange& r, const char* name) {
        if (r.lo < 1 || r.hi > p.n_layers || r.lo > r.hi) {
            throw FormatError(std::string("profile: range ") + name + " outside [1, layers]");
        }
    };
    check(p.i2t_instance, "i2t_instance");
    check(p.i2t_background, "i2t_background");
    check(p.i2t_attribute, "i2t_attribute");
    check(p.t2t, "t2t");
    check(p.i2i, "i2i");
}

}  // namespace

ScheduleProfile parse_profile(std::istream& in) {
    ScheduleProfile p;
    bool have_layers = false, have_steps = false, have_window = false;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string t = line;
        const auto hash = t.find('#');
        if (hash != std::string::npos) t = t.substr(0, hash);
        std::istringstream iss(t);
        std::string key;
        if (!(iss >> key)) continue;
        std::string eq;
        if (!(iss >> eq) || eq != "=") {
            throw FormatError("profile line " + std::to_string(line_no) + ": expected `<key> = ...`");
        }
        auto read_int = [&](int& dst) {
            if (!(iss >> dst)) {
                throw FormatError("profile line " + std::to_string(line_no) + ": expected integer");
            }
        };
        auto read_range = [&](LayerRange& dst) {
            read_int(dst.lo);
            read_int(dst.hi);
        };
        if (key == "layers") { read_int(p.n_layers); have_layers = true; }
        else if (key == "steps") { read_int(p.n_steps); have_steps = true; }
        else if (key == "window") { read_int(p.window_steps); have_window = true; }
        else if (key == "i2t_instance") read_range(p.i2t_instance);
        else if (key == "i2t_background") read_range(p.i2t_background);
        else if (key == "i2t_attribute") read_range(p.i2t_attribute);
        else if (key == "t2t") read_range(p.t2t);
        else if (key == "i2i") read_range(p.i2i);
        else throw FormatError("profile line " + std::to_string(line_no) + ": unknown key `" + key + "`");
    }
    if (!have_layers || !have_steps || !have_window) {
        throw FormatError("profile: `layers`, `steps` and `window` are required");
    }
    validate(p);
    return p;
}

ScheduleProfile parse_profile_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open profile: " + path.string());
    return parse_profile(in);
}

void write_profile(std::ostream& out, const ScheduleProfile& p) {
    out << "layers = " << p.n_layers << "\n";
    out << "steps = " << p.n_steps << "\n";
    out << "window = " << p.window_steps << "\n";
    out << "i2t_instance = " << p.i2t_instance.lo << " " << p.i2t_instance.hi << "\n";
    out << "i2t_background = " << p.i2t_background.lo << " " << p.i2t_background.hi << "\n";
    out << "i2t_attribute = " << p.i2t_attribute.lo << " " << p.i2t_attribute.hi << "\n";
    out << "t2t = " << p.t2t.lo << " " << p.t2t.hi << "\n";
    out << "i2i = " << p.i2i.lo << " " << p.i2i.hi << "\n";
}

}  // namespace attune
