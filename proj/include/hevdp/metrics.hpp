#pragma once

#include <string>
#include <vector>

#include "hevdp/dp.hpp"

namespace hevdp {

// Time fractions per operating mode. "raw" shares cover the whole mission
// and sum to one together with regen and standstill; the hybrid view
// renormalizes the four driven modes over driven time only. The compat view
// instead folds regen and standstill into pure-electric, normalized over the
// whole mission.
struct ModeShares {
    double pure_electric = 0.0;
    double pure_thermal = 0.0;
    double power_split = 0.0;
    double battery_charging = 0.0;
};

struct StrategyReport {
    std::string cycle_name;
    double distance_km = 0.0;
    double duration_min = 0.0;

    double fuel_g = 0.0;
    double fuel_l_per_100km = 0.0;
    int shift_count = 0;
    int start_count = 0;
    double shifts_per_min = 0.0;
    double starts_per_min = 0.0;
    double avg_torque_reserve_pct = 0.0;  // over stages with positive demand
    double total_cost_g = 0.0;

    double soc_initial = 0.0;
    double soc_final = 0.0;

    double share_pure_electric = 0.0;
    double share_pure_thermal = 0.0;
    double share_power_split = 0.0;
    double share_battery_charging = 0.0;
    double share_regen = 0.0;
    double share_standstill = 0.0;
};

// Throws std::invalid_argument on a zero-distance trajectory.
StrategyReport make_report(const Trajectory& trajectory, double fuel_density_g_per_l);

ModeShares hybrid_mode_shares(const StrategyReport& report, bool fold_into_electric);

// One row per stage with an ignited engine.
struct OperatingPoint {
    double time_s = 0.0;
    double engine_speed_rpm = 0.0;
    double engine_torque_Nm = 0.0;
    double fuel_rate_g_s = 0.0;
    Mode mode = Mode::PureThermal;
};

std::vector<OperatingPoint> export_operating_points(const Trajectory& trajectory);

// One row per engine-involved stage (pure thermal, power split, charging):
// vehicle speed, engine power and the engaged gear.
struct GearPatternPoint {
    double time_s = 0.0;
    double speed_mps = 0.0;
    double engine_power_kW = 0.0;
    int gear = 0;
};

std::vector<GearPatternPoint> export_gear_pattern(const Trajectory& trajectory);

}  // namespace hevdp
