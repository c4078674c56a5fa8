#include "hevdp/cycle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "hevdp/errors.hpp"

namespace hevdp {

namespace {

std::string trim(const std::string& s) {
    auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

double parse_double(const std::string& field, const std::string& path, int line) {
    const std::string t = trim(field);
    if (t.empty())
        throw ConfigError(path + ":" + std::to_string(line) + ": empty numeric field");
    char* end = nullptr;
    double value = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size() || !std::isfinite(value))
        throw ConfigError(path + ":" + std::to_string(line) + ": bad number '" + t + "'");
    return value;
}

std::string file_stem(const std::string& path) {
    auto slash = path.find_last_of("/\\");
    std::string name = slash == std::string::npos ? path : path.substr(slash + 1);
    auto dot = name.find_last_of('.');
    if (dot != std::string::npos && dot > 0) name = name.substr(0, dot);
    return name;
}

}  // namespace

double DriveCycle::distance_m() const {
    double d = 0.0;
    for (double v : speed_mps) d += v * timestep_s;
    return d;
}

void DriveCycle::validate() const {
    if (timestep_s <= 0.0)
        throw ConfigError("cycle '" + name + "': timestep must be positive");
    if (speed_mps.empty())
        throw ConfigError("cycle '" + name + "': no samples");
    if (accel_mps2.size() != speed_mps.size())
        throw ConfigError("cycle '" + name + "': accel/speed length mismatch");
    for (std::size_t k = 0; k < speed_mps.size(); ++k) {
        if (!(speed_mps[k] >= 0.0))
            throw ConfigError("cycle '" + name + "': negative speed at sample " +
                              std::to_string(k));
    }
    for (std::size_t k = 0; k + 1 < speed_mps.size(); ++k) {
        double expect = (speed_mps[k + 1] - speed_mps[k]) / timestep_s;
        if (std::abs(accel_mps2[k] - expect) > 1e-9 * std::max(1.0, std::abs(expect)))
            throw ConfigError("cycle '" + name + "': accel inconsistent at sample " +
                              std::to_string(k));
    }
    if (accel_mps2.back() != 0.0)
        throw ConfigError("cycle '" + name + "': last sample must have zero accel");
}

void recompute_accel(DriveCycle& cycle) {
    cycle.accel_mps2.assign(cycle.speed_mps.size(), 0.0);
    for (std::size_t k = 0; k + 1 < cycle.speed_mps.size(); ++k)
        cycle.accel_mps2[k] = (cycle.speed_mps[k + 1] - cycle.speed_mps[k]) / cycle.timestep_s;
}

DriveCycle load_cycle(const std::string& path, double timestep_s) {
    if (timestep_s <= 0.0) throw ConfigError("timestep must be positive");
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open cycle file '" + path + "'");

    std::vector<double> times;
    std::vector<double> speeds;
    std::string line;
    int line_no = 0;
    bool saw_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (!saw_header) {
            std::string squashed;
            for (char c : t)
                if (c != ' ' && c != '\t') squashed += c;
            if (squashed != "time_s,speed_mps")
                throw ConfigError(path + ":" + std::to_string(line_no) +
                                  ": expected header 'time_s,speed_mps'");
            saw_header = true;
            continue;
        }
        auto comma = t.find(',');
        if (comma == std::string::npos || t.find(',', comma + 1) != std::string::npos)
            throw ConfigError(path + ":" + std::to_string(line_no) +
                              ": expected exactly two fields");
        double time = parse_double(t.substr(0, comma), path, line_no);
        double speed = parse_double(t.substr(comma + 1), path, line_no);
        if (!times.empty() && time <= times.back())
            throw ConfigError(path + ":" + std::to_string(line_no) +
                              ": time must be strictly increasing");
        if (speed < 0.0)
            throw ConfigError(path + ":" + std::to_string(line_no) + ": negative speed");
        times.push_back(time);
        speeds.push_back(speed);
    }
    if (!saw_header) throw ConfigError(path + ": missing 'time_s,speed_mps' header");
    if (times.empty()) throw ConfigError(path + ": no samples");

    DriveCycle cycle;
    cycle.name = file_stem(path);
    cycle.timestep_s = timestep_s;

    const double t0 = times.front();
    const double span = times.back() - t0;
    const std::size_t samples = static_cast<std::size_t>(span / timestep_s + 1e-9) + 1;
    cycle.speed_mps.resize(samples);
    std::size_t seg = 0;
    for (std::size_t k = 0; k < samples; ++k) {
        const double t = t0 + static_cast<double>(k) * timestep_s;
        while (seg + 2 < times.size() && times[seg + 1] <= t) ++seg;
        const double t_lo = times[seg], t_hi = times[seg + 1 < times.size() ? seg + 1 : seg];
        if (times.size() == 1 || t <= t_lo) {
            cycle.speed_mps[k] = speeds[seg];
        } else if (t >= t_hi) {
            cycle.speed_mps[k] = speeds[seg + 1 < times.size() ? seg + 1 : seg];
        } else {
            const double w = (t - t_lo) / (t_hi - t_lo);
            cycle.speed_mps[k] = speeds[seg] + w * (speeds[seg + 1] - speeds[seg]);
        }
    }
    recompute_accel(cycle);

    if (cycle.speed_mps.front() != 0.0 || cycle.speed_mps.back() != 0.0)
        std::cerr << "warning: cycle '" << cycle.name
                  << "' does not start and end at rest\n";
    return cycle;
}

DriveCycle resample(const DriveCycle& cycle, double timestep_s) {
    if (timestep_s <= 0.0) throw ConfigError("timestep must be positive");
    if (cycle.timestep_s == timestep_s) return cycle;

    DriveCycle out;
    out.name = cycle.name;
    out.timestep_s = timestep_s;
    const double span = static_cast<double>(cycle.size() - 1) * cycle.timestep_s;
    const std::size_t samples = static_cast<std::size_t>(span / timestep_s + 1e-9) + 1;
    out.speed_mps.resize(samples);
    for (std::size_t k = 0; k < samples; ++k) {
        const double pos = static_cast<double>(k) * timestep_s / cycle.timestep_s;
        const std::size_t lo = std::min(static_cast<std::size_t>(pos), cycle.size() - 1);
        const double w = pos - static_cast<double>(lo);
        if (lo + 1 >= cycle.size() || w <= 0.0) {
            out.speed_mps[k] = cycle.speed_mps[lo];
        } else {
            out.speed_mps[k] =
                cycle.speed_mps[lo] + w * (cycle.speed_mps[lo + 1] - cycle.speed_mps[lo]);
        }
    }
    recompute_accel(out);
    return out;
}

DriveCycle compose(const std::vector<DriveCycle>& cycles) {
    if (cycles.empty()) throw ConfigError("compose: empty cycle list");
    DriveCycle out;
    out.timestep_s = cycles.front().timestep_s;
    for (const DriveCycle& c : cycles) {
        if (c.timestep_s != out.timestep_s)
            throw ConfigError("compose: mismatched timesteps (" + c.name + ")");
        out.speed_mps.insert(out.speed_mps.end(), c.speed_mps.begin(), c.speed_mps.end());
        if (!out.name.empty()) out.name += "+";
        out.name += c.name;
    }
    recompute_accel(out);
    return out;
}

DriveCycle synth_cycle(const std::vector<SpeedSegment>& segments, double timestep_s,
                       const std::string& name) {
    if (timestep_s <= 0.0) throw ConfigError("timestep must be positive");
    DriveCycle out;
    out.name = name;
    out.timestep_s = timestep_s;
    if (segments.empty()) {
        out.speed_mps = {0.0};
        out.accel_mps2 = {0.0};
        return out;
    }

    // Piecewise-linear knots: start at rest, ramp/hold per segment, then
    // ramp back to rest.
    std::vector<double> knot_t{0.0};
    std::vector<double> knot_v{0.0};
    double t = 0.0;
    for (const SpeedSegment& seg : segments) {
        if (seg.ramp_s <= 0.0)
            throw ConfigError("synth_cycle: ramp duration must be positive");
        if (seg.hold_s < 0.0)
            throw ConfigError("synth_cycle: hold duration must be non-negative");
        if (seg.target_mps < 0.0)
            throw ConfigError("synth_cycle: negative target speed");
        t += seg.ramp_s;
        knot_t.push_back(t);
        knot_v.push_back(seg.target_mps);
        if (seg.hold_s > 0.0) {
            t += seg.hold_s;
            knot_t.push_back(t);
            knot_v.push_back(seg.target_mps);
        }
    }
    if (knot_v.back() != 0.0) {
        t += segments.back().ramp_s;
        knot_t.push_back(t);
        knot_v.push_back(0.0);
    }

    const std::size_t samples = static_cast<std::size_t>(t / timestep_s + 1e-9) + 1;
    out.speed_mps.resize(samples);
    std::size_t seg = 0;
    for (std::size_t k = 0; k < samples; ++k) {
        const double tk = static_cast<double>(k) * timestep_s;
        while (seg + 2 < knot_t.size() && knot_t[seg + 1] <= tk) ++seg;
        const double t_lo = knot_t[seg], t_hi = knot_t[seg + 1];
        if (tk >= t_hi) {
            out.speed_mps[k] = knot_v[seg + 1];
        } else if (tk <= t_lo) {
            out.speed_mps[k] = knot_v[seg];
        } else {
            const double w = (tk - t_lo) / (t_hi - t_lo);
            out.speed_mps[k] = knot_v[seg] + w * (knot_v[seg + 1] - knot_v[seg]);
        }
        if (out.speed_mps[k] < 1e-12) out.speed_mps[k] = 0.0;
    }
    recompute_accel(out);
    return out;
}

namespace {

// Stretch the last hold so the generated cycle covers total_s exactly,
// leaving one sample slot for the closing ramp landing.
std::vector<SpeedSegment> pad_to(std::vector<SpeedSegment> segs, double total_s) {
    double t = 0.0;
    for (const SpeedSegment& s : segs) t += s.ramp_s + s.hold_s;
    if (!segs.empty() && segs.back().target_mps != 0.0) t += segs.back().ramp_s;
    if (t > total_s)
        throw ConfigError("cycle preset longer than its nominal duration");
    segs.back().hold_s += total_s - t;
    return segs;
}

std::vector<SpeedSegment> urban_segments() {
    return {
        {8.3, 6, 12},  {0.0, 5, 10},  {11.1, 8, 20}, {0.0, 6, 10},  {13.9, 10, 26},
        {0.0, 7, 12},  {5.6, 4, 8},   {0.0, 4, 10},  {11.1, 8, 20}, {0.0, 6, 10},
        {8.3, 6, 12},  {0.0, 5, 10},  {13.9, 10, 28}, {0.0, 7, 14}, {6.9, 5, 10},
        {0.0, 4, 10},  {11.1, 8, 22}, {0.0, 6, 10},  {12.5, 9, 24}, {0.0, 6, 12},
        {8.3, 6, 12},  {0.0, 5, 10},  {13.9, 10, 30}, {0.0, 7, 14}, {9.7, 7, 16},
        {0.0, 5, 10},  {11.1, 8, 20}, {0.0, 6, 10},  {11.1, 8, 24}, {0.0, 6, 12},
        {13.9, 10, 26}, {0.0, 7, 12}, {8.3, 6, 14},  {0.0, 5, 10},  {12.5, 9, 22},
        {0.0, 6, 12},  {9.7, 7, 14},  {0.0, 5, 10},  {13.9, 10, 28}, {0.0, 7, 12},
        {11.1, 8, 20}, {0.0, 6, 10},
    };
}

std::vector<SpeedSegment> urban_short_segments() {
    return {
        {8.3, 6, 12},  {0.0, 5, 10},  {11.1, 8, 20}, {0.0, 6, 10},  {13.9, 10, 26},
        {0.0, 7, 12},  {5.6, 4, 8},   {0.0, 4, 10},  {11.1, 8, 20}, {0.0, 6, 10},
        {8.3, 6, 12},  {0.0, 5, 10},  {13.9, 10, 28}, {0.0, 7, 14}, {6.9, 5, 10},
        {0.0, 4, 10},  {11.1, 8, 22}, {0.0, 6, 10},  {12.5, 9, 24}, {0.0, 6, 12},
        {8.3, 6, 12},  {0.0, 5, 10},  {13.9, 10, 30}, {0.0, 7, 14},
    };
}

std::vector<SpeedSegment> rural_segments() {
    return {
        {16.7, 12, 50}, {22.2, 10, 80}, {16.7, 8, 40},  {25.0, 12, 100},
        {19.4, 8, 50},  {0.0, 10, 15},  {22.2, 14, 110}, {16.7, 8, 40},
        {25.0, 12, 90}, {20.8, 8, 60},  {16.7, 6, 40},  {22.2, 10, 80},
        {25.0, 12, 90}, {0.0, 12, 20},
    };
}

std::vector<SpeedSegment> rural_short_segments() {
    return {
        {16.7, 12, 50}, {22.2, 10, 80}, {16.7, 8, 40}, {25.0, 12, 100},
        {19.4, 8, 50},  {0.0, 10, 15},  {22.2, 14, 90}, {0.0, 12, 20},
    };
}

std::vector<SpeedSegment> motorway_segments() {
    return {
        {25.0, 15, 30},  {33.3, 12, 130}, {36.1, 8, 180}, {30.6, 8, 60},
        {36.1, 8, 200},  {33.3, 6, 100},  {27.8, 8, 40},  {36.1, 10, 120},
        {0.0, 25, 20},
    };
}

std::vector<SpeedSegment> motorway_short_segments() {
    return {
        {25.0, 15, 30}, {33.3, 12, 120}, {36.1, 8, 160}, {30.6, 8, 60},
        {33.3, 6, 80},  {0.0, 25, 20},
    };
}

struct Preset {
    const char* name;
    double duration_s;
    std::vector<SpeedSegment> (*segments)();
};

// Durations chosen so the default trio totals 3120 samples at 1 s and each
// short variant is a 600 sample standalone mission.
const Preset kPresets[] = {
    {"urban", 999.0, urban_segments},
    {"rural", 1049.0, rural_segments},
    {"motorway", 1069.0, motorway_segments},
    {"urban-short", 599.0, urban_short_segments},
    {"rural-short", 599.0, rural_short_segments},
    {"motorway-short", 599.0, motorway_short_segments},
};

}  // namespace

const std::vector<std::string>& cycle_preset_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> out;
        for (const Preset& p : kPresets) out.push_back(p.name);
        return out;
    }();
    return names;
}

DriveCycle cycle_preset(const std::string& name, double timestep_s) {
    for (const Preset& p : kPresets) {
        if (name == p.name)
            return synth_cycle(pad_to(p.segments(), p.duration_s), timestep_s, p.name);
    }
    std::string known;
    for (const Preset& p : kPresets) {
        if (!known.empty()) known += ", ";
        known += p.name;
    }
    throw ConfigError("unknown cycle preset '" + name + "' (known: " + known + ")");
}

}  // namespace hevdp
