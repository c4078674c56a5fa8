#include "hevdp/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace hevdp {

namespace {
constexpr double kRadPerSecToRpm = 30.0 / 3.14159265358979323846;
}

StrategyReport make_report(const Trajectory& trajectory, double fuel_density_g_per_l) {
    if (fuel_density_g_per_l <= 0.0)
        throw std::invalid_argument("fuel density must be positive");
    StrategyReport r;
    r.cycle_name = trajectory.cycle_name;
    r.distance_km = trajectory.distance_m / 1000.0;
    r.duration_min = trajectory.steps.size() * trajectory.timestep_s / 60.0;
    if (!(trajectory.distance_m > 0.0))
        throw std::invalid_argument("cannot report on a zero-distance trajectory");
    if (trajectory.steps.empty())
        throw std::invalid_argument("cannot report on an empty trajectory");

    r.fuel_g = trajectory.fuel_g;
    r.total_cost_g = trajectory.total_cost_g;
    r.soc_initial = trajectory.soc_initial;
    r.soc_final = trajectory.soc_final;

    std::size_t mode_count[6] = {0, 0, 0, 0, 0, 0};
    double reserve_sum = 0.0;
    std::size_t reserve_samples = 0;
    for (const TrajectoryStep& step : trajectory.steps) {
        if (step.control.gear != step.state.gear_prev) ++r.shift_count;
        if (step.stage.engine_on && !step.state.engine_prev) ++r.start_count;
        ++mode_count[static_cast<int>(step.stage.mode)];
        if (step.stage.reserve_applies) {
            reserve_sum += 1.0 - step.stage.torque_utilization;
            ++reserve_samples;
        }
    }

    const double minutes = r.duration_min;
    r.shifts_per_min = r.shift_count / minutes;
    r.starts_per_min = r.start_count / minutes;
    r.avg_torque_reserve_pct =
        reserve_samples == 0 ? 0.0 : 100.0 * reserve_sum / reserve_samples;

    const double liters = trajectory.fuel_g / fuel_density_g_per_l;
    r.fuel_l_per_100km = liters / r.distance_km * 100.0;

    const double n = static_cast<double>(trajectory.steps.size());
    r.share_standstill = mode_count[static_cast<int>(Mode::Standstill)] / n;
    r.share_regen = mode_count[static_cast<int>(Mode::Regen)] / n;
    r.share_pure_electric = mode_count[static_cast<int>(Mode::PureElectric)] / n;
    r.share_pure_thermal = mode_count[static_cast<int>(Mode::PureThermal)] / n;
    r.share_power_split = mode_count[static_cast<int>(Mode::PowerSplit)] / n;
    r.share_battery_charging = mode_count[static_cast<int>(Mode::BatteryCharging)] / n;
    return r;
}

ModeShares hybrid_mode_shares(const StrategyReport& report, bool fold_into_electric) {
    ModeShares out;
    if (fold_into_electric) {
        // Everything that is not engine-involved counts as electric driving,
        // normalized over the whole mission.
        out.pure_electric =
            report.share_pure_electric + report.share_regen + report.share_standstill;
        out.pure_thermal = report.share_pure_thermal;
        out.power_split = report.share_power_split;
        out.battery_charging = report.share_battery_charging;
        return out;
    }
    const double driven = report.share_pure_electric + report.share_pure_thermal +
                          report.share_power_split + report.share_battery_charging;
    if (driven <= 0.0) return out;
    out.pure_electric = report.share_pure_electric / driven;
    out.pure_thermal = report.share_pure_thermal / driven;
    out.power_split = report.share_power_split / driven;
    out.battery_charging = report.share_battery_charging / driven;
    return out;
}

std::vector<OperatingPoint> export_operating_points(const Trajectory& trajectory) {
    std::vector<OperatingPoint> out;
    for (const TrajectoryStep& step : trajectory.steps) {
        if (!(step.stage.engine_torque_Nm > 0.0)) continue;
        OperatingPoint p;
        p.time_s = step.time_s;
        p.engine_speed_rpm = step.stage.input_speed_rad_s * kRadPerSecToRpm;
        p.engine_torque_Nm = step.stage.engine_torque_Nm;
        p.fuel_rate_g_s = step.stage.fuel_rate_kg_s * 1000.0;
        p.mode = step.stage.mode;
        out.push_back(p);
    }
    return out;
}

std::vector<GearPatternPoint> export_gear_pattern(const Trajectory& trajectory) {
    std::vector<GearPatternPoint> out;
    for (const TrajectoryStep& step : trajectory.steps) {
        const Mode m = step.stage.mode;
        if (m != Mode::PureThermal && m != Mode::PowerSplit && m != Mode::BatteryCharging)
            continue;
        GearPatternPoint p;
        p.time_s = step.time_s;
        p.speed_mps = step.speed_mps;
        p.engine_power_kW =
            step.stage.engine_torque_Nm * step.stage.input_speed_rad_s / 1000.0;
        p.gear = step.control.gear;
        out.push_back(p);
    }
    return out;
}

}  // namespace hevdp
