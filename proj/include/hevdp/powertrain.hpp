#pragma once

#include <optional>
#include <string>

#include "hevdp/models.hpp"

namespace hevdp {

// Operating mode of one stage, classified from the torque split.
enum class Mode {
    Standstill,       // v = 0 and no positive demand
    Regen,            // negative demand at the wheels
    PureElectric,     // alpha = 0
    PureThermal,      // alpha = 1
    PowerSplit,       // 0 < alpha < 1
    BatteryCharging,  // alpha > 1, e-machine generating against the engine
};

const char* mode_name(Mode mode);

// Discrete-continuous state carried between stages.
struct State {
    double soc = 0.55;
    int gear_prev = 1;
    bool engine_prev = false;
};

// Decision applied over one stage.
struct Control {
    double alpha = 0.0;  // engine share of the demand torque, >= 0
    int gear = 1;
};

enum class InfeasibleReason {
    None,
    EngineSpeed,    // gearbox input speed outside the engine band
    EngineTorque,   // demand share above the engine ceiling
    EmSpeed,        // e-machine overspeed
    EmTorque,       // demand share above the machine ceiling
    BatteryPower,   // outside the pack power window or voltage collapse
    SocBounds,      // SOC update leaves the allowed band
};

const char* infeasible_reason_name(InfeasibleReason reason);

// Outcome of evaluating one control over one stage. Physics only; costs are
// assembled separately.
struct StageResult {
    bool feasible = false;
    InfeasibleReason reason = InfeasibleReason::None;
    Mode mode = Mode::Standstill;

    double demand_torque_Nm = 0.0;   // at the gearbox input
    double input_speed_rad_s = 0.0;  // gearbox input shaft
    double engine_torque_Nm = 0.0;
    double em_torque_Nm = 0.0;       // at the e-machine shaft
    double friction_brake_Nm = 0.0;  // gearbox-input share not taken by regen
    bool engine_on = false;
    double fuel_rate_kg_s = 0.0;
    double battery_power_W = 0.0;    // DC side, discharge positive
    double battery_current_A = 0.0;
    double soc_next = 0.0;

    // Fraction of the combined torque ceiling in use; meaningful only when
    // reserve_applies (positive demand while moving).
    double torque_utilization = 0.0;
    bool reserve_applies = false;
};

// Road load plus inertia at the wheels. A standing vehicle with no
// acceleration request needs no force.
double tractive_force(double speed_mps, double accel_mps2, const VehicleConfig& vehicle);

struct TorqueDemand {
    double torque_Nm = 0.0;       // at the gearbox input, signed
    double input_speed_rad_s = 0.0;
};

// Reflect a wheel force through final drive and gearbox. Gearbox efficiency
// divides on traction and multiplies on overrun.
TorqueDemand torque_demand(double force_N, double speed_mps, int gear,
                           const VehicleConfig& vehicle);

struct TorqueSplit {
    double engine_Nm = 0.0;
    double em_Nm = 0.0;  // at the e-machine shaft
};

// Split a positive demand: engine takes alpha of it, the e-machine covers
// the rest through the coupler. alpha > 1 turns the machine into a
// generator. Throws std::invalid_argument for alpha < 0.
TorqueSplit split_torque(double demand_Nm, double alpha, const VehicleConfig& vehicle);

// Throws std::invalid_argument for alpha < 0.
Mode classify_mode(double alpha, double demand_Nm, double speed_mps);

// Combined torque in use over the combined ceiling at this input speed.
// nullopt when no actuator can produce torque there.
std::optional<double> torque_utilization(double engine_torque_Nm, double em_torque_Nm,
                                         double input_speed_rad_s,
                                         const PowertrainModels& models);

// SOC-independent part of a stage evaluation: kinematics, torque split,
// actuator limits, fuel, DC power. Shared by the backward sweep (evaluated
// once per control) and the exact rollout.
struct StageControlEval {
    bool feasible = false;
    InfeasibleReason reason = InfeasibleReason::None;
    Mode mode = Mode::Standstill;

    enum class Kind { Standstill, Braking, Traction };
    Kind kind = Kind::Standstill;

    Control control{};
    double demand_torque_Nm = 0.0;
    double input_speed_rad_s = 0.0;
    double em_speed_rad_s = 0.0;
    double engine_torque_Nm = 0.0;
    double em_torque_Nm = 0.0;       // braking: before battery curtailment
    bool engine_on = false;
    double fuel_rate_kg_s = 0.0;
    double battery_power_W = 0.0;    // braking: before battery curtailment
    double torque_utilization = 0.0;
    bool reserve_applies = false;
};

StageControlEval precompute_stage(const Control& control, double speed_mps,
                                  double accel_mps2, const PowertrainModels& models);

// Battery closure of a precomputed control: feasibility and the SOC it
// leads to. On braking stages the recovered power is curtailed to what the
// pack accepts, so braking never fails here.
struct StageTransition {
    bool feasible = false;
    InfeasibleReason reason = InfeasibleReason::None;
    double soc_next = 0.0;
};

StageTransition stage_transition(const StageControlEval& eval, double soc,
                                 const PowertrainModels& models, double dt_s);

// Full stage record: stage_transition plus currents, curtailed torques and
// friction braking. Never throws; violations come back as infeasible
// results.
StageResult finalize_stage(const StageControlEval& eval, double soc,
                           const PowertrainModels& models, double dt_s);

StageResult evaluate_stage(const State& state, const Control& control,
                           double speed_mps, double accel_mps2,
                           const PowertrainModels& models, double dt_s);

}  // namespace hevdp
