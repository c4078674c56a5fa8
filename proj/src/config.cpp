#include "hevdp/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
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

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

double to_double(const std::string& raw, const std::string& context) {
    const std::string t = trim(raw);
    char* end = nullptr;
    double v = std::strtod(t.c_str(), &end);
    if (t.empty() || end != t.c_str() + t.size())
        throw ConfigError(context + ": bad number '" + raw + "'");
    return v;
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<std::string> split_list(const std::string& raw) {
    std::vector<std::string> out;
    std::string item;
    std::stringstream ss(raw);
    while (std::getline(ss, item, ',')) {
        const std::string t = trim(item);
        if (!t.empty()) out.push_back(t);
    }
    return out;
}

}  // namespace

KeyValueFile KeyValueFile::parse_file(const std::string& path) {
    return parse_text(read_file(path), path);
}

KeyValueFile KeyValueFile::parse_text(const std::string& text, const std::string& origin) {
    KeyValueFile kv;
    kv.origin_ = origin;
    std::stringstream ss(text);
    std::string line;
    int line_no = 0;
    while (std::getline(ss, line)) {
        ++line_no;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const std::string t = trim(line);
        if (t.empty()) continue;
        auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(line_no) +
                              ": expected 'key = value'");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty())
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key");
        if (value.empty())
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty value for '" +
                              key + "'");
        if (kv.find(key))
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": duplicate key '" +
                              key + "'");
        kv.entries_.emplace_back(key, value);
    }
    kv.read_.assign(kv.entries_.size(), false);
    return kv;
}

const std::string* KeyValueFile::find(const std::string& key) const {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (entries_[i].first == key) {
            if (i < read_.size()) read_[i] = true;
            return &entries_[i].second;
        }
    }
    return nullptr;
}

bool KeyValueFile::has(const std::string& key) const {
    for (const auto& e : entries_)
        if (e.first == key) return true;
    return false;
}

std::string KeyValueFile::get_string(const std::string& key, const std::string& fallback) const {
    const std::string* v = find(key);
    return v ? *v : fallback;
}

double KeyValueFile::get_double(const std::string& key, double fallback) const {
    const std::string* v = find(key);
    if (!v) return fallback;
    return to_double(*v, origin_ + ": " + key);
}

int KeyValueFile::get_int(const std::string& key, int fallback) const {
    const std::string* v = find(key);
    if (!v) return fallback;
    const double d = to_double(*v, origin_ + ": " + key);
    if (d != std::floor(d) || std::abs(d) > 2e9)
        throw ConfigError(origin_ + ": " + key + ": expected an integer, got '" + *v + "'");
    return static_cast<int>(d);
}

bool KeyValueFile::get_bool(const std::string& key, bool fallback) const {
    const std::string* v = find(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1" || *v == "yes") return true;
    if (*v == "false" || *v == "0" || *v == "no") return false;
    throw ConfigError(origin_ + ": " + key + ": expected a boolean, got '" + *v + "'");
}

std::vector<double> KeyValueFile::get_double_list(const std::string& key,
                                                  const std::vector<double>& fallback) const {
    const std::string* v = find(key);
    if (!v) return fallback;
    std::vector<double> out;
    for (const std::string& item : split_list(*v))
        out.push_back(to_double(item, origin_ + ": " + key));
    if (out.empty()) throw ConfigError(origin_ + ": " + key + ": empty list");
    return out;
}

std::vector<std::string> KeyValueFile::get_string_list(const std::string& key) const {
    const std::string* v = find(key);
    if (!v) return {};
    return split_list(*v);
}

std::vector<std::string> KeyValueFile::unread_keys() const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < entries_.size(); ++i)
        if (!read_[i]) out.push_back(entries_[i].first);
    return out;
}

uint64_t fnv1a64(const std::string& text) {
    uint64_t hash = 1469598103934665603ull;
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 1099511628211ull;
    }
    return hash;
}

bool RunConfig::operator==(const RunConfig& other) const {
    return label == other.label && cycles == other.cycles &&
           timestep_s == other.timestep_s && soc_nodes == other.soc_nodes &&
           alpha_nodes == other.alpha_nodes && alpha_max == other.alpha_max &&
           soc_initial == other.soc_initial && initial_gear == other.initial_gear &&
           initial_engine_on == other.initial_engine_on && terminal == other.terminal &&
           weights.shift_g == other.weights.shift_g &&
           weights.start_g == other.weights.start_g &&
           weights.reserve_g == other.weights.reserve_g &&
           vehicle_config == other.vehicle_config &&
           engine_fuel_map == other.engine_fuel_map &&
           em_efficiency_map == other.em_efficiency_map &&
           battery_curve == other.battery_curve && threads == other.threads;
}

RunConfig parse_run_config(const std::string& text, const std::string& origin) {
    const KeyValueFile kv = KeyValueFile::parse_text(text, origin);
    RunConfig c;
    c.label = kv.get_string("label", c.label);
    if (kv.has("cycles")) {
        c.cycles = kv.get_string_list("cycles");
        if (c.cycles.empty()) throw ConfigError(origin + ": cycles: empty list");
    }
    c.timestep_s = kv.get_double("timestep_s", c.timestep_s);
    c.soc_nodes = kv.get_int("soc_nodes", c.soc_nodes);
    c.alpha_nodes = kv.get_int("alpha_nodes", c.alpha_nodes);
    c.alpha_max = kv.get_double("alpha_max", c.alpha_max);
    c.soc_initial = kv.get_double("soc_initial", c.soc_initial);
    c.initial_gear = kv.get_int("initial_gear", c.initial_gear);
    c.initial_engine_on = kv.get_bool("initial_engine_on", c.initial_engine_on);
    c.terminal = kv.get_string("terminal", c.terminal);
    c.weights.shift_g = kv.get_double("shift_penalty_g", 0.0);
    c.weights.start_g = kv.get_double("start_penalty_g", 0.0);
    c.weights.reserve_g = kv.get_double("reserve_penalty_g", 0.0);
    c.vehicle_config = kv.get_string("vehicle_config", "");
    c.engine_fuel_map = kv.get_string("engine_fuel_map", "");
    c.em_efficiency_map = kv.get_string("em_efficiency_map", "");
    c.battery_curve = kv.get_string("battery_curve", "");
    c.threads = kv.get_int("threads", c.threads);

    const auto unread = kv.unread_keys();
    if (!unread.empty()) {
        std::string msg = origin + ": unknown keys:";
        for (const std::string& k : unread) msg += " '" + k + "'";
        throw ConfigError(msg);
    }

    if (c.timestep_s <= 0.0) throw ConfigError(origin + ": timestep_s must be positive");
    if (c.soc_nodes < 2) throw ConfigError(origin + ": soc_nodes must be at least 2");
    if (c.alpha_nodes < 2) throw ConfigError(origin + ": alpha_nodes must be at least 2");
    if (c.alpha_max < 1.0) throw ConfigError(origin + ": alpha_max must be at least 1");
    if (c.initial_gear < 1) throw ConfigError(origin + ": initial_gear must be at least 1");
    if (c.threads < 1) throw ConfigError(origin + ": threads must be at least 1");
    if (c.weights.shift_g < 0.0 || c.weights.start_g < 0.0 || c.weights.reserve_g < 0.0)
        throw ConfigError(origin + ": penalty weights must be non-negative");
    if (c.terminal != "free" && c.terminal != "initial") {
        const double t = to_double(c.terminal, origin + ": terminal");
        if (t < 0.0 || t > 1.0)
            throw ConfigError(origin + ": terminal SOC must lie in [0, 1]");
    }
    return c;
}

RunConfig load_run_config(const std::string& path) {
    return parse_run_config(read_file(path), path);
}

std::string serialize(const RunConfig& c) {
    std::string out;
    auto put = [&out](const std::string& key, const std::string& value) {
        if (!value.empty()) out += key + " = " + value + "\n";
    };
    put("label", c.label);
    std::string cycles;
    for (const std::string& name : c.cycles) {
        if (!cycles.empty()) cycles += ", ";
        cycles += name;
    }
    put("cycles", cycles);
    put("timestep_s", fmt_double(c.timestep_s));
    put("soc_nodes", std::to_string(c.soc_nodes));
    put("alpha_nodes", std::to_string(c.alpha_nodes));
    put("alpha_max", fmt_double(c.alpha_max));
    put("soc_initial", fmt_double(c.soc_initial));
    put("initial_gear", std::to_string(c.initial_gear));
    put("initial_engine_on", c.initial_engine_on ? "true" : "false");
    put("terminal", c.terminal);
    put("shift_penalty_g", fmt_double(c.weights.shift_g));
    put("start_penalty_g", fmt_double(c.weights.start_g));
    put("reserve_penalty_g", fmt_double(c.weights.reserve_g));
    put("vehicle_config", c.vehicle_config);
    put("engine_fuel_map", c.engine_fuel_map);
    put("em_efficiency_map", c.em_efficiency_map);
    put("battery_curve", c.battery_curve);
    put("threads", std::to_string(c.threads));
    return out;
}

std::string config_fingerprint(const RunConfig& c) {
    RunConfig scrubbed = c;
    scrubbed.label.clear();
    scrubbed.threads = 1;
    // Referenced inputs enter by content, not by path: the serialized text
    // carries a placeholder where a path would be and the file body follows
    // as a content hash, so renaming a file keeps the run identity while
    // editing it does not.
    auto placeholder = [](std::string& path) {
        if (!path.empty()) path = "file";
    };
    placeholder(scrubbed.vehicle_config);
    placeholder(scrubbed.engine_fuel_map);
    placeholder(scrubbed.em_efficiency_map);
    placeholder(scrubbed.battery_curve);
    for (std::string& entry : scrubbed.cycles)
        if (entry.rfind("synth:", 0) != 0) entry = "file";
    std::string text = serialize(scrubbed);

    auto add_content = [&text](const std::string& tag, const std::string& path) {
        if (path.empty()) return;
        text += tag + "/content = " + std::to_string(fnv1a64(read_file(path))) + "\n";
    };
    for (std::size_t i = 0; i < c.cycles.size(); ++i)
        if (c.cycles[i].rfind("synth:", 0) != 0)
            add_content("cycle:" + std::to_string(i), c.cycles[i]);
    add_content("vehicle_config", c.vehicle_config);
    add_content("engine_fuel_map", c.engine_fuel_map);
    add_content("em_efficiency_map", c.em_efficiency_map);
    add_content("battery_curve", c.battery_curve);
    return text;
}

std::string config_hash(const RunConfig& c) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(config_fingerprint(c))));
    return buf;
}

MapGrid load_map_grid(const std::string& path) {
    const std::string text = read_file(path);
    std::stringstream ss(text);
    std::string line;
    int line_no = 0;
    MapGrid grid;
    std::vector<std::vector<double>> rows;
    while (std::getline(ss, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        std::vector<std::string> fields;
        std::string field;
        std::stringstream ls(t);
        while (std::getline(ls, field, ',')) fields.push_back(field);
        if (line.size() && line.back() == ',') fields.push_back("");
        if (grid.speed_bp.empty()) {
            // Header row: the corner cell is a label, the rest are speeds.
            for (std::size_t i = 1; i < fields.size(); ++i)
                grid.speed_bp.push_back(
                    to_double(fields[i], path + ":" + std::to_string(line_no)));
            if (grid.speed_bp.empty())
                throw ConfigError(path + ":" + std::to_string(line_no) +
                                  ": no speed breakpoints");
            continue;
        }
        if (fields.size() != grid.speed_bp.size() + 1)
            throw ConfigError(path + ":" + std::to_string(line_no) +
                              ": expected " + std::to_string(grid.speed_bp.size() + 1) +
                              " fields");
        grid.torque_bp.push_back(to_double(fields[0], path + ":" + std::to_string(line_no)));
        std::vector<double> row;
        for (std::size_t i = 1; i < fields.size(); ++i) {
            const std::string cell = trim(fields[i]);
            row.push_back(cell.empty()
                              ? std::numeric_limits<double>::quiet_NaN()
                              : to_double(cell, path + ":" + std::to_string(line_no)));
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ConfigError(path + ": no torque rows");
    for (const auto& row : rows)
        grid.values.insert(grid.values.end(), row.begin(), row.end());
    grid.validate(path);
    return grid;
}

BatteryCurve load_battery_curve(const std::string& path) {
    const std::string text = read_file(path);
    std::stringstream ss(text);
    std::string line;
    int line_no = 0;
    bool saw_header = false;
    BatteryCurve curve;
    while (std::getline(ss, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (!saw_header) {
            std::string squashed;
            for (char ch : t)
                if (ch != ' ' && ch != '\t') squashed += ch;
            if (squashed != "soc,voc_V,r0_ohm")
                throw ConfigError(path + ":" + std::to_string(line_no) +
                                  ": expected header 'soc,voc_V,r0_ohm'");
            saw_header = true;
            continue;
        }
        std::vector<std::string> fields;
        std::string field;
        std::stringstream ls(t);
        while (std::getline(ls, field, ',')) fields.push_back(field);
        if (fields.size() != 3)
            throw ConfigError(path + ":" + std::to_string(line_no) +
                              ": expected exactly three fields");
        const std::string ctx = path + ":" + std::to_string(line_no);
        curve.soc.push_back(to_double(fields[0], ctx));
        curve.voc_V.push_back(to_double(fields[1], ctx));
        curve.r0_ohm.push_back(to_double(fields[2], ctx));
    }
    if (!saw_header) throw ConfigError(path + ": missing 'soc,voc_V,r0_ohm' header");
    if (curve.soc.size() < 2) throw ConfigError(path + ": need at least two rows");
    for (std::size_t i = 1; i < curve.soc.size(); ++i)
        if (curve.soc[i] <= curve.soc[i - 1])
            throw ConfigError(path + ": SOC must be strictly increasing");
    return curve;
}

PowertrainModels load_vehicle_models(const std::string& path) {
    if (path.empty()) return default_models();
    const KeyValueFile kv = KeyValueFile::parse_file(path);

    PowertrainModels m;
    VehicleConfig& v = m.vehicle;
    v.mass_kg = kv.get_double("mass_kg", v.mass_kg);
    v.coastdown_k0_N = kv.get_double("coastdown_k0_N", v.coastdown_k0_N);
    v.coastdown_k1_N_per_mps = kv.get_double("coastdown_k1_N_per_mps", v.coastdown_k1_N_per_mps);
    v.coastdown_k2_N_per_mps2 =
        kv.get_double("coastdown_k2_N_per_mps2", v.coastdown_k2_N_per_mps2);
    v.wheel_radius_m = kv.get_double("wheel_radius_m", v.wheel_radius_m);
    v.final_drive_ratio = kv.get_double("final_drive_ratio", v.final_drive_ratio);
    v.coupler_ratio = kv.get_double("coupler_ratio", v.coupler_ratio);
    v.gear_ratios = kv.get_double_list("gear_ratios", v.gear_ratios);
    v.gear_efficiencies = kv.get_double_list("gear_efficiencies", v.gear_efficiencies);
    v.fuel_density_g_per_l = kv.get_double("fuel_density_g_per_l", v.fuel_density_g_per_l);
    v.validate();

    const double rpm = 3.14159265358979323846 / 30.0;
    WillansParams w;
    w.efficiency = kv.get_double("willans_efficiency", w.efficiency);
    w.lhv_J_per_kg = kv.get_double("willans_lhv_J_per_kg", w.lhv_J_per_kg);
    w.friction_a_W_per_rad_s = kv.get_double("willans_friction_a", w.friction_a_W_per_rad_s);
    w.friction_b_W_per_rad_s3 = kv.get_double("willans_friction_b", w.friction_b_W_per_rad_s3);
    m.engine = EngineModel::synthetic(
        kv.get_double("engine_max_torque_Nm", 85.0),
        kv.get_double("engine_rated_power_W", 52000.0),
        kv.get_double("engine_speed_min_rpm", 1000.0) * rpm,
        kv.get_double("engine_speed_max_rpm", 6000.0) * rpm, w);

    m.em = EMachineModel::synthetic(kv.get_double("em_max_torque_Nm", 200.0),
                                    kv.get_double("em_rated_power_W", 30000.0),
                                    kv.get_double("em_speed_max_rad_s", 900.0),
                                    kv.get_double("em_peak_efficiency", 0.93),
                                    kv.get_double("em_peak_torque_per_speed", 0.2));

    m.battery = BatteryModel::constant(kv.get_double("battery_voc_V", 295.0),
                                       kv.get_double("battery_r0_ohm", 0.1),
                                       kv.get_double("battery_capacity_Ah", 5.3),
                                       kv.get_double("soc_min", 0.3),
                                       kv.get_double("soc_max", 0.8),
                                       kv.get_double("battery_power_min_W", -40000.0),
                                       kv.get_double("battery_power_max_W", 40000.0));

    const auto unread = kv.unread_keys();
    if (!unread.empty()) {
        std::string msg = path + ": unknown keys:";
        for (const std::string& k : unread) msg += " '" + k + "'";
        throw ConfigError(msg);
    }
    return m;
}

PowertrainModels resolve_models(const RunConfig& config) {
    PowertrainModels m = load_vehicle_models(config.vehicle_config);
    if (!config.engine_fuel_map.empty()) {
        m.engine = EngineModel::from_grid(load_map_grid(config.engine_fuel_map),
                                          m.engine.speed_min(), m.engine.speed_max());
    }
    if (!config.em_efficiency_map.empty()) {
        m.em = EMachineModel::from_grid(load_map_grid(config.em_efficiency_map),
                                        m.em.max_torque(0.0), m.em.speed_max());
    }
    if (!config.battery_curve.empty()) {
        const BatteryCurve curve = load_battery_curve(config.battery_curve);
        m.battery = BatteryModel::from_curve(
            curve.soc, curve.voc_V, curve.r0_ohm, m.battery.capacity_Ah(),
            m.battery.soc_min(), m.battery.soc_max(), m.battery.power_min(),
            m.battery.power_max());
    }
    return m;
}

DriveCycle resolve_cycle(const RunConfig& config) {
    if (config.cycles.empty()) throw ConfigError("run config lists no cycles");
    std::vector<DriveCycle> parts;
    for (const std::string& entry : config.cycles) {
        if (entry.rfind("synth:", 0) == 0) {
            parts.push_back(cycle_preset(entry.substr(6), config.timestep_s));
        } else {
            parts.push_back(load_cycle(entry, config.timestep_s));
        }
    }
    DriveCycle cycle = parts.size() == 1 ? parts.front() : compose(parts);
    cycle.validate();
    return cycle;
}

Grids resolve_grids(const RunConfig& config, const PowertrainModels& models) {
    return Grids::uniform(config.soc_nodes, models.battery.soc_min(),
                          models.battery.soc_max(), config.alpha_nodes, config.alpha_max,
                          models.vehicle.gear_count());
}

TerminalSpec resolve_terminal(const RunConfig& config) {
    TerminalSpec t;
    if (config.terminal == "free") {
        t.kind = TerminalSpec::Kind::Free;
        return t;
    }
    t.kind = TerminalSpec::Kind::SustainAtOrAbove;
    t.target_soc = config.terminal == "initial"
                       ? config.soc_initial
                       : to_double(config.terminal, "terminal");
    return t;
}

State resolve_initial_state(const RunConfig& config, const BatteryModel& battery) {
    if (config.soc_initial < battery.soc_min() - 1e-12 ||
        config.soc_initial > battery.soc_max() + 1e-12)
        throw ConfigError("soc_initial lies outside the battery SOC window");
    State x;
    x.soc = config.soc_initial;
    x.gear_prev = config.initial_gear;
    x.engine_prev = config.initial_engine_on;
    return x;
}

}  // namespace hevdp
