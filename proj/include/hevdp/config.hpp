#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hevdp/cost.hpp"
#include "hevdp/cycle.hpp"
#include "hevdp/dp.hpp"
#include "hevdp/models.hpp"

namespace hevdp {

// "key = value" file with '#' comments. Keys keep insertion order; lookups
// are by exact key. Duplicate keys are rejected.
class KeyValueFile {
  public:
    static KeyValueFile parse_file(const std::string& path);
    static KeyValueFile parse_text(const std::string& text, const std::string& origin);

    bool has(const std::string& key) const;
    const std::string& origin() const { return origin_; }
    const std::vector<std::pair<std::string, std::string>>& entries() const {
        return entries_;
    }

    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<double> get_double_list(const std::string& key,
                                        const std::vector<double>& fallback) const;
    std::vector<std::string> get_string_list(const std::string& key) const;

    // Keys present in the file but never read; used to flag typos.
    std::vector<std::string> unread_keys() const;

  private:
    std::string origin_;
    std::vector<std::pair<std::string, std::string>> entries_;
    mutable std::vector<bool> read_;

    const std::string* find(const std::string& key) const;
};

uint64_t fnv1a64(const std::string& text);

// Everything one solve needs, as read from a run config file plus command
// line overrides.
struct RunConfig {
    std::string label;

    // Cycle sources in order: file paths or "synth:<preset>".
    std::vector<std::string> cycles{"synth:urban", "synth:rural", "synth:motorway"};
    double timestep_s = 1.0;

    int soc_nodes = 201;
    int alpha_nodes = 41;
    double alpha_max = 2.0;

    double soc_initial = 0.55;
    int initial_gear = 1;
    bool initial_engine_on = false;
    // "initial", "free", or a number.
    std::string terminal = "initial";

    PenaltyWeights weights{};

    std::string vehicle_config;      // optional key-value file, else defaults
    std::string engine_fuel_map;     // optional grid CSV, else synthetic
    std::string em_efficiency_map;   // optional grid CSV, else synthetic
    std::string battery_curve;       // optional soc,voc_V,r0_ohm CSV

    int threads = 1;

    bool operator==(const RunConfig& other) const;
};

RunConfig load_run_config(const std::string& path);
RunConfig parse_run_config(const std::string& text, const std::string& origin);

// Canonical text form; parse_run_config(serialize(c)) == c.
std::string serialize(const RunConfig& config);

// Stable fingerprint of the physics-relevant configuration. Referenced files
// enter by content, not by path; label and threads stay out.
std::string config_fingerprint(const RunConfig& config);
std::string config_hash(const RunConfig& config);  // 16 hex digits

// Grid CSV: first row lists speed breakpoints (rad/s), first column torque
// breakpoints (Nm), empty cells allowed above the torque curve.
MapGrid load_map_grid(const std::string& path);

struct BatteryCurve {
    std::vector<double> soc;
    std::vector<double> voc_V;
    std::vector<double> r0_ohm;
};

// "soc,voc_V,r0_ohm" CSV with strictly increasing SOC.
BatteryCurve load_battery_curve(const std::string& path);

PowertrainModels load_vehicle_models(const std::string& path);  // "" gives defaults
PowertrainModels resolve_models(const RunConfig& config);
DriveCycle resolve_cycle(const RunConfig& config);
Grids resolve_grids(const RunConfig& config, const PowertrainModels& models);
TerminalSpec resolve_terminal(const RunConfig& config);
State resolve_initial_state(const RunConfig& config, const BatteryModel& battery);

}  // namespace hevdp
