#include "hevdp/powertrain.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hevdp {

const char* mode_name(Mode mode) {
    switch (mode) {
        case Mode::Standstill: return "standstill";
        case Mode::Regen: return "regen";
        case Mode::PureElectric: return "pure_electric";
        case Mode::PureThermal: return "pure_thermal";
        case Mode::PowerSplit: return "power_split";
        case Mode::BatteryCharging: return "battery_charging";
    }
    return "?";
}

const char* infeasible_reason_name(InfeasibleReason reason) {
    switch (reason) {
        case InfeasibleReason::None: return "none";
        case InfeasibleReason::EngineSpeed: return "engine_speed";
        case InfeasibleReason::EngineTorque: return "engine_torque";
        case InfeasibleReason::EmSpeed: return "em_speed";
        case InfeasibleReason::EmTorque: return "em_torque";
        case InfeasibleReason::BatteryPower: return "battery_power";
        case InfeasibleReason::SocBounds: return "soc_bounds";
    }
    return "?";
}

double tractive_force(double speed_mps, double accel_mps2, const VehicleConfig& vehicle) {
    double force = vehicle.mass_kg * accel_mps2;
    if (speed_mps > 0.0) {
        force += vehicle.coastdown_k0_N + vehicle.coastdown_k1_N_per_mps * speed_mps +
                 vehicle.coastdown_k2_N_per_mps2 * speed_mps * speed_mps;
    }
    return force;
}

TorqueDemand torque_demand(double force_N, double speed_mps, int gear,
                           const VehicleConfig& vehicle) {
    const double ratio = vehicle.final_drive_ratio * vehicle.gear_ratio(gear);
    const double eta = vehicle.gear_efficiency(gear);
    TorqueDemand out;
    out.input_speed_rad_s = speed_mps / vehicle.wheel_radius_m * ratio;
    const double wheel_torque = force_N * vehicle.wheel_radius_m;
    if (force_N > 0.0) {
        out.torque_Nm = wheel_torque / ratio / eta;
    } else {
        out.torque_Nm = wheel_torque / ratio * eta;
    }
    return out;
}

TorqueSplit split_torque(double demand_Nm, double alpha, const VehicleConfig& vehicle) {
    if (alpha < 0.0) throw std::invalid_argument("negative engine share");
    TorqueSplit out;
    out.engine_Nm = alpha * demand_Nm;
    out.em_Nm = (1.0 - alpha) * demand_Nm / vehicle.coupler_ratio;
    return out;
}

Mode classify_mode(double alpha, double demand_Nm, double speed_mps) {
    if (alpha < 0.0) throw std::invalid_argument("negative engine share");
    if (speed_mps == 0.0 && demand_Nm <= 0.0) return Mode::Standstill;
    if (demand_Nm < 0.0) return Mode::Regen;
    if (alpha == 0.0) return Mode::PureElectric;
    if (alpha == 1.0) return Mode::PureThermal;
    if (alpha < 1.0) return Mode::PowerSplit;
    return Mode::BatteryCharging;
}

std::optional<double> torque_utilization(double engine_torque_Nm, double em_torque_Nm,
                                         double input_speed_rad_s,
                                         const PowertrainModels& models) {
    const double coupler = models.vehicle.coupler_ratio;
    const double ceiling = models.engine.max_torque(input_speed_rad_s) +
                           models.em.max_torque(input_speed_rad_s / coupler) * coupler;
    if (ceiling <= 0.0) return std::nullopt;
    const double used = engine_torque_Nm + std::max(em_torque_Nm * coupler, 0.0);
    return std::clamp(used / ceiling, 0.0, 1.0);
}

StageControlEval precompute_stage(const Control& control, double speed_mps,
                                  double accel_mps2, const PowertrainModels& models) {
    if (control.alpha < 0.0) throw std::invalid_argument("negative engine share");
    if (control.gear < 1 || control.gear > models.vehicle.gear_count())
        throw std::invalid_argument("gear out of range");

    StageControlEval ce;
    ce.control = control;

    const double force = tractive_force(speed_mps, accel_mps2, models.vehicle);
    const TorqueDemand demand = torque_demand(force, speed_mps, control.gear, models.vehicle);
    ce.demand_torque_Nm = demand.torque_Nm;
    ce.input_speed_rad_s = demand.input_speed_rad_s;
    ce.em_speed_rad_s = demand.input_speed_rad_s / models.vehicle.coupler_ratio;
    ce.mode = classify_mode(control.alpha, demand.torque_Nm, speed_mps);

    if (speed_mps == 0.0 && demand.torque_Nm <= 0.0) {
        ce.kind = StageControlEval::Kind::Standstill;
        ce.feasible = true;
        return ce;
    }

    if (demand.torque_Nm <= 0.0) {
        ce.kind = StageControlEval::Kind::Braking;
        if (ce.em_speed_rad_s > models.em.speed_max()) {
            ce.reason = InfeasibleReason::EmSpeed;
            return ce;
        }
        // Recover what the machine can hold; the battery side is settled in
        // the transition. The remainder goes to the friction brakes.
        const double floor_Nm = -models.em.max_torque(ce.em_speed_rad_s);
        ce.em_torque_Nm =
            std::max(demand.torque_Nm / models.vehicle.coupler_ratio, floor_Nm);
        auto power = models.em.electrical_power(ce.em_speed_rad_s, ce.em_torque_Nm);
        if (!power) {
            ce.reason = InfeasibleReason::EmTorque;
            return ce;
        }
        ce.battery_power_W = *power;
        ce.feasible = true;
        return ce;
    }

    ce.kind = StageControlEval::Kind::Traction;
    const TorqueSplit split = split_torque(demand.torque_Nm, control.alpha, models.vehicle);
    ce.engine_torque_Nm = split.engine_Nm;
    ce.em_torque_Nm = split.em_Nm;
    ce.engine_on = split.engine_Nm > 0.0;

    if (ce.engine_on) {
        if (!models.engine.in_speed_range(ce.input_speed_rad_s)) {
            ce.reason = InfeasibleReason::EngineSpeed;
            return ce;
        }
        auto fuel = models.engine.fuel_rate(ce.input_speed_rad_s, split.engine_Nm);
        if (!fuel) {
            ce.reason = InfeasibleReason::EngineTorque;
            return ce;
        }
        ce.fuel_rate_kg_s = *fuel;
    }

    if (ce.em_speed_rad_s > models.em.speed_max()) {
        ce.reason = InfeasibleReason::EmSpeed;
        return ce;
    }
    auto power = models.em.electrical_power(ce.em_speed_rad_s, split.em_Nm);
    if (!power) {
        ce.reason = InfeasibleReason::EmTorque;
        return ce;
    }
    ce.battery_power_W = *power;

    ce.torque_utilization =
        torque_utilization(split.engine_Nm, split.em_Nm, ce.input_speed_rad_s, models)
            .value_or(0.0);
    ce.reserve_applies = speed_mps > 0.0;
    ce.feasible = true;
    return ce;
}

StageTransition stage_transition(const StageControlEval& eval, double soc,
                                 const PowertrainModels& models, double dt_s) {
    StageTransition tr;
    if (!eval.feasible) {
        tr.reason = eval.reason;
        return tr;
    }
    switch (eval.kind) {
        case StageControlEval::Kind::Standstill:
            tr.feasible = true;
            tr.soc_next = soc;
            return tr;
        case StageControlEval::Kind::Traction: {
            auto current = models.battery.current(eval.battery_power_W, soc);
            if (!current) {
                tr.reason = InfeasibleReason::BatteryPower;
                return tr;
            }
            auto next = models.battery.soc_after(soc, *current, dt_s);
            if (!next) {
                tr.reason = InfeasibleReason::SocBounds;
                return tr;
            }
            tr.feasible = true;
            tr.soc_next = *next;
            return tr;
        }
        case StageControlEval::Kind::Braking: {
            const double accepted = std::max(eval.battery_power_W, models.battery.power_min());
            auto current = models.battery.current(accepted, soc);
            const double unc = soc + models.battery.delta_soc(*current, dt_s);
            tr.feasible = true;
            tr.soc_next = std::min(unc, models.battery.soc_max());
            return tr;
        }
    }
    return tr;
}

namespace {

// Invert electrical power back to a generating torque in [floor_Nm, 0].
double recover_torque(const EMachineModel& em, double omega, double power_W,
                      double floor_Nm) {
    if (power_W >= 0.0) return 0.0;
    double lo = floor_Nm, hi = 0.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double p = em.electrical_power(omega, mid).value_or(0.0);
        if (p > power_W) {
            hi = mid;
        } else {
            lo = mid;
        }
        if (hi - lo < 1e-13 * std::max(1.0, std::abs(floor_Nm))) break;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

StageResult finalize_stage(const StageControlEval& eval, double soc,
                           const PowertrainModels& models, double dt_s) {
    StageResult out;
    out.mode = eval.mode;
    out.demand_torque_Nm = eval.demand_torque_Nm;
    out.input_speed_rad_s = eval.input_speed_rad_s;
    out.engine_torque_Nm = eval.engine_torque_Nm;
    out.em_torque_Nm = eval.em_torque_Nm;
    out.engine_on = eval.engine_on;
    out.fuel_rate_kg_s = eval.fuel_rate_kg_s;
    out.torque_utilization = eval.torque_utilization;
    out.reserve_applies = eval.reserve_applies;

    const StageTransition tr = stage_transition(eval, soc, models, dt_s);
    if (!tr.feasible) {
        out.feasible = false;
        out.reason = tr.reason;
        return out;
    }
    out.feasible = true;
    out.soc_next = tr.soc_next;

    switch (eval.kind) {
        case StageControlEval::Kind::Standstill:
            break;
        case StageControlEval::Kind::Traction: {
            out.battery_power_W = eval.battery_power_W;
            out.battery_current_A = *models.battery.current(eval.battery_power_W, soc);
            break;
        }
        case StageControlEval::Kind::Braking: {
            const double accepted = std::max(eval.battery_power_W, models.battery.power_min());
            const double unc =
                soc + models.battery.delta_soc(*models.battery.current(accepted, soc), dt_s);
            if (accepted == eval.battery_power_W && tr.soc_next == unc) {
                out.em_torque_Nm = eval.em_torque_Nm;
                out.battery_power_W = eval.battery_power_W;
                out.battery_current_A = *models.battery.current(accepted, soc);
            } else {
                // Pack-side curtailment: back out the current from the SOC
                // actually reached, then the torque from the power.
                const double amps = (soc - tr.soc_next) * 3600.0 *
                                    models.battery.capacity_Ah() / dt_s;
                const double power =
                    (models.battery.voc(soc) - models.battery.r0(soc) * amps) * amps;
                out.battery_current_A = amps;
                out.battery_power_W = power;
                out.em_torque_Nm =
                    recover_torque(models.em, eval.em_speed_rad_s, power, eval.em_torque_Nm);
            }
            out.friction_brake_Nm =
                eval.demand_torque_Nm - out.em_torque_Nm * models.vehicle.coupler_ratio;
            break;
        }
    }
    return out;
}

StageResult evaluate_stage(const State& state, const Control& control,
                           double speed_mps, double accel_mps2,
                           const PowertrainModels& models, double dt_s) {
    const StageControlEval ce = precompute_stage(control, speed_mps, accel_mps2, models);
    return finalize_stage(ce, state.soc, models, dt_s);
}

}  // namespace hevdp
