#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace hevdp {

// Chassis, road load and driveline parameters. Gears are indexed 1..G.
struct VehicleConfig {
    double mass_kg = 1300.0;
    double coastdown_k0_N = 150.0;
    double coastdown_k1_N_per_mps = 2.24;
    double coastdown_k2_N_per_mps2 = 0.44;
    double wheel_radius_m = 0.327;
    double final_drive_ratio = 4.0;
    // Ratio between e-machine shaft and gearbox input shaft (p2 coupling).
    double coupler_ratio = 1.0;
    std::vector<double> gear_ratios{3.46, 1.844, 1.258, 1.027, 0.85};
    std::vector<double> gear_efficiencies{0.93, 0.94, 0.947, 0.948, 0.946};
    double fuel_density_g_per_l = 745.0;

    int gear_count() const { return static_cast<int>(gear_ratios.size()); }
    double gear_ratio(int gear) const;
    double gear_efficiency(int gear) const;

    void validate() const;
};

// Rectangular lookup table. Breakpoints ascend; cells above the torque curve
// may be empty (NaN). Values are stored row-major, one row per torque
// breakpoint.
struct MapGrid {
    std::vector<double> speed_bp;
    std::vector<double> torque_bp;
    std::vector<double> values;

    double at(std::size_t torque_idx, std::size_t speed_idx) const;
    bool empty() const { return values.empty(); }

    // Bilinear interpolation; nullopt when the query leaves the grid or any
    // of the four surrounding cells is empty.
    std::optional<double> interpolate(double speed, double torque) const;

    // Largest torque with a populated cell at this speed. Conservative
    // between speed breakpoints (minimum of the two column tops).
    double max_torque_at(double speed) const;

    void validate(const std::string& what) const;
};

// Willans-line fuel model: fuel power covers brake power plus a friction
// loss that grows with speed.
struct WillansParams {
    double efficiency = 0.40;
    double lhv_J_per_kg = 42.5e6;
    double friction_a_W_per_rad_s = 3.0;
    double friction_b_W_per_rad_s3 = 2.5e-5;
};

class EngineModel {
  public:
    static EngineModel synthetic(double max_torque_Nm, double rated_power_W,
                                 double speed_min_rad_s, double speed_max_rad_s,
                                 const WillansParams& willans = {});
    static EngineModel from_grid(MapGrid fuel_map_g_per_s,
                                 double speed_min_rad_s, double speed_max_rad_s);

    bool in_speed_range(double omega) const;
    double speed_min() const { return speed_min_; }
    double speed_max() const { return speed_max_; }

    // Torque ceiling at a given shaft speed; zero outside the speed range.
    double max_torque(double omega) const;

    // Fuel mass flow in kg/s for an ignited engine at (omega, torque >= 0).
    // nullopt when the operating point is outside the speed range or above
    // the torque ceiling.
    std::optional<double> fuel_rate(double omega, double torque) const;

  private:
    EngineModel() = default;

    bool synthetic_ = true;
    double max_torque_Nm_ = 85.0;
    double rated_power_W_ = 52000.0;
    double speed_min_ = 0.0;
    double speed_max_ = 0.0;
    WillansParams willans_{};
    MapGrid fuel_map_{};  // g/s over (speed, torque)
};

// Fuel rate with the off state folded in: omega <= 0 means the engine is
// decoupled and consumes nothing.
double engine_fuel_rate(const EngineModel& engine, double omega, double torque);

class EMachineModel {
  public:
    static EMachineModel synthetic(double max_torque_Nm, double rated_power_W,
                                   double speed_max_rad_s,
                                   double peak_efficiency, double peak_torque_per_speed);
    static EMachineModel from_grid(MapGrid efficiency_map, double max_torque_Nm,
                                   double speed_max_rad_s);

    double speed_max() const { return speed_max_; }

    // Symmetric torque ceiling (motoring and generating).
    double max_torque(double omega) const;

    // Conversion efficiency in (0,1]; direction-agnostic.
    std::optional<double> efficiency(double omega, double torque) const;

    // DC-side electrical power: positive drains the battery, negative
    // charges it. Zero torque costs nothing; a stalled machine holding
    // torque burns its copper loss. nullopt outside the operating envelope.
    std::optional<double> electrical_power(double omega, double torque) const;

  private:
    EMachineModel() = default;

    bool synthetic_ = true;
    double max_torque_Nm_ = 200.0;
    double rated_power_W_ = 30000.0;
    double speed_max_ = 900.0;
    double copper_coeff_ = 0.0;
    double iron_coeff_ = 0.0;
    MapGrid efficiency_map_{};
};

// Equivalent-circuit battery with open-circuit voltage and internal
// resistance, either constant or tabulated over SOC. Discharge current is
// positive.
class BatteryModel {
  public:
    static BatteryModel constant(double voc_V, double r0_ohm, double capacity_Ah,
                                 double soc_min, double soc_max,
                                 double power_min_W, double power_max_W);
    static BatteryModel from_curve(std::vector<double> soc_bp, std::vector<double> voc_V,
                                   std::vector<double> r0_ohm, double capacity_Ah,
                                   double soc_min, double soc_max,
                                   double power_min_W, double power_max_W);

    double voc(double soc) const;
    double r0(double soc) const;
    double capacity_Ah() const { return capacity_Ah_; }
    double soc_min() const { return soc_min_; }
    double soc_max() const { return soc_max_; }
    double power_min() const { return power_min_W_; }
    double power_max() const { return power_max_W_; }
    bool constant_curves() const { return !curve_; }

    // Largest terminal power the cell can source at this SOC (voc^2 / 4 R0).
    double max_deliverable_power(double soc) const;

    // Terminal current for a requested terminal power. nullopt when the
    // power limits are exceeded or the voltage sags below the deliverable
    // maximum.
    std::optional<double> current(double power_W, double soc) const;

    // Coulomb-counting SOC update helpers.
    double delta_soc(double current_A, double dt_s) const;
    std::optional<double> soc_after(double soc, double current_A, double dt_s) const;

  private:
    BatteryModel() = default;

    bool curve_ = false;
    double voc_V_ = 295.0;
    double r0_ohm_ = 0.1;
    std::vector<double> soc_bp_;
    std::vector<double> voc_bp_;
    std::vector<double> r0_bp_;
    double capacity_Ah_ = 5.3;
    double soc_min_ = 0.3;
    double soc_max_ = 0.8;
    double power_min_W_ = -40000.0;
    double power_max_W_ = 40000.0;
};

// Everything the stage evaluation needs in one bundle. Default-constructs to
// the built-in vehicle.
struct PowertrainModels {
    PowertrainModels();

    VehicleConfig vehicle;
    EngineModel engine;
    EMachineModel em;
    BatteryModel battery;
};

// Table-backed defaults for a compact p2 hybrid (1.3 t, 5 gears, 52 kW
// engine, 30 kW e-machine, 5.3 Ah pack).
PowertrainModels default_models();

}  // namespace hevdp
