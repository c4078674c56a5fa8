#include "hevdp/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "hevdp/errors.hpp"

namespace hevdp {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kTorqueTol = 1e-9;
}

double VehicleConfig::gear_ratio(int gear) const {
    if (gear < 1 || gear > gear_count())
        throw std::out_of_range("gear index " + std::to_string(gear));
    return gear_ratios[gear - 1];
}

double VehicleConfig::gear_efficiency(int gear) const {
    if (gear < 1 || gear > gear_count())
        throw std::out_of_range("gear index " + std::to_string(gear));
    return gear_efficiencies[gear - 1];
}

void VehicleConfig::validate() const {
    if (mass_kg <= 0.0) throw ConfigError("vehicle: mass must be positive");
    if (coastdown_k0_N < 0.0 || coastdown_k1_N_per_mps < 0.0 || coastdown_k2_N_per_mps2 < 0.0)
        throw ConfigError("vehicle: coastdown coefficients must be non-negative");
    if (wheel_radius_m <= 0.0) throw ConfigError("vehicle: wheel radius must be positive");
    if (final_drive_ratio <= 0.0) throw ConfigError("vehicle: final drive ratio must be positive");
    if (coupler_ratio <= 0.0) throw ConfigError("vehicle: coupler ratio must be positive");
    if (gear_ratios.empty()) throw ConfigError("vehicle: no gears");
    if (gear_ratios.size() != gear_efficiencies.size())
        throw ConfigError("vehicle: gear ratio/efficiency count mismatch");
    if (gear_ratios.size() > 200) throw ConfigError("vehicle: too many gears");
    for (std::size_t i = 0; i < gear_ratios.size(); ++i) {
        if (gear_ratios[i] <= 0.0) throw ConfigError("vehicle: gear ratios must be positive");
        if (i > 0 && gear_ratios[i] >= gear_ratios[i - 1])
            throw ConfigError("vehicle: gear ratios must decrease with gear number");
        if (gear_efficiencies[i] <= 0.0 || gear_efficiencies[i] > 1.0)
            throw ConfigError("vehicle: gear efficiencies must lie in (0, 1]");
    }
    if (fuel_density_g_per_l <= 0.0)
        throw ConfigError("vehicle: fuel density must be positive");
}

double MapGrid::at(std::size_t torque_idx, std::size_t speed_idx) const {
    return values[torque_idx * speed_bp.size() + speed_idx];
}

std::optional<double> MapGrid::interpolate(double speed, double torque) const {
    if (speed_bp.empty() || torque_bp.empty()) return std::nullopt;
    if (speed < speed_bp.front() || speed > speed_bp.back()) return std::nullopt;
    if (torque < torque_bp.front() || torque > torque_bp.back()) return std::nullopt;

    auto bracket = [](const std::vector<double>& bp, double x, std::size_t& lo, double& w) {
        auto it = std::upper_bound(bp.begin(), bp.end(), x);
        std::size_t hi = static_cast<std::size_t>(it - bp.begin());
        if (hi == 0) hi = 1;
        if (hi >= bp.size()) hi = bp.size() - 1;
        lo = hi - 1;
        w = (x - bp[lo]) / (bp[hi] - bp[lo]);
    };
    std::size_t si, ti;
    double ws, wt;
    bracket(speed_bp, speed, si, ws);
    bracket(torque_bp, torque, ti, wt);

    // Corners with zero weight stay out of the blend, so queries exactly on
    // a breakpoint survive an empty cell on the far side.
    auto mix = [](double a, double b, double w) -> std::optional<double> {
        if (w <= 0.0) return std::isnan(a) ? std::optional<double>{} : a;
        if (w >= 1.0) return std::isnan(b) ? std::optional<double>{} : b;
        if (std::isnan(a) || std::isnan(b)) return std::nullopt;
        return a + w * (b - a);
    };
    const auto lo = mix(at(ti, si), at(ti, si + 1), ws);
    const auto hi = mix(at(ti + 1, si), at(ti + 1, si + 1), ws);
    if (wt <= 0.0) return lo;
    if (wt >= 1.0) return hi;
    if (!lo || !hi) return std::nullopt;
    return *lo + wt * (*hi - *lo);
}

double MapGrid::max_torque_at(double speed) const {
    if (speed_bp.empty() || torque_bp.empty()) return 0.0;
    if (speed < speed_bp.front() || speed > speed_bp.back()) return 0.0;

    auto column_top = [&](std::size_t si) {
        for (std::size_t ti = torque_bp.size(); ti-- > 0;) {
            if (!std::isnan(at(ti, si))) return torque_bp[ti];
        }
        return -std::numeric_limits<double>::infinity();
    };
    auto it = std::upper_bound(speed_bp.begin(), speed_bp.end(), speed);
    std::size_t hi = static_cast<std::size_t>(it - speed_bp.begin());
    if (hi == 0) hi = 1;
    if (hi >= speed_bp.size()) hi = speed_bp.size() - 1;
    const double top = std::min(column_top(hi - 1), column_top(hi));
    return std::isinf(top) ? 0.0 : top;
}

void MapGrid::validate(const std::string& what) const {
    if (speed_bp.size() < 2 || torque_bp.size() < 2)
        throw ConfigError(what + ": need at least two breakpoints per axis");
    if (values.size() != speed_bp.size() * torque_bp.size())
        throw ConfigError(what + ": value count does not match breakpoints");
    for (std::size_t i = 1; i < speed_bp.size(); ++i)
        if (speed_bp[i] <= speed_bp[i - 1])
            throw ConfigError(what + ": speed breakpoints must ascend");
    for (std::size_t i = 1; i < torque_bp.size(); ++i)
        if (torque_bp[i] <= torque_bp[i - 1])
            throw ConfigError(what + ": torque breakpoints must ascend");
    // Empty cells may only cap a column from above.
    for (std::size_t si = 0; si < speed_bp.size(); ++si) {
        bool capped = false;
        for (std::size_t ti = 0; ti < torque_bp.size(); ++ti) {
            const double v = at(ti, si);
            if (std::isnan(v)) {
                capped = true;
            } else if (capped) {
                throw ConfigError(what + ": hole inside a torque column");
            } else if (std::isinf(v)) {
                throw ConfigError(what + ": non-finite map value");
            }
        }
        if (std::isnan(at(0, si)))
            throw ConfigError(what + ": empty column at speed " +
                              std::to_string(speed_bp[si]));
    }
}

EngineModel EngineModel::synthetic(double max_torque_Nm, double rated_power_W,
                                   double speed_min_rad_s, double speed_max_rad_s,
                                   const WillansParams& willans) {
    if (max_torque_Nm <= 0.0 || rated_power_W <= 0.0)
        throw ConfigError("engine: torque and power ratings must be positive");
    if (speed_min_rad_s <= 0.0 || speed_max_rad_s <= speed_min_rad_s)
        throw ConfigError("engine: speed range must be positive and ordered");
    if (willans.efficiency <= 0.0 || willans.efficiency > 1.0 || willans.lhv_J_per_kg <= 0.0)
        throw ConfigError("engine: bad Willans parameters");
    EngineModel m;
    m.synthetic_ = true;
    m.max_torque_Nm_ = max_torque_Nm;
    m.rated_power_W_ = rated_power_W;
    m.speed_min_ = speed_min_rad_s;
    m.speed_max_ = speed_max_rad_s;
    m.willans_ = willans;
    return m;
}

EngineModel EngineModel::from_grid(MapGrid fuel_map_g_per_s,
                                   double speed_min_rad_s, double speed_max_rad_s) {
    fuel_map_g_per_s.validate("engine fuel map");
    if (speed_min_rad_s <= 0.0 || speed_max_rad_s <= speed_min_rad_s)
        throw ConfigError("engine: speed range must be positive and ordered");
    for (double v : fuel_map_g_per_s.values)
        if (!std::isnan(v) && v < 0.0)
            throw ConfigError("engine fuel map: negative fuel rate");
    if (fuel_map_g_per_s.torque_bp.front() < 0.0)
        throw ConfigError("engine fuel map: negative torque breakpoint");
    EngineModel m;
    m.synthetic_ = false;
    m.speed_min_ = speed_min_rad_s;
    m.speed_max_ = speed_max_rad_s;
    m.fuel_map_ = std::move(fuel_map_g_per_s);
    return m;
}

bool EngineModel::in_speed_range(double omega) const {
    return omega >= speed_min_ && omega <= speed_max_;
}

double EngineModel::max_torque(double omega) const {
    if (!in_speed_range(omega)) return 0.0;
    if (synthetic_) return std::min(max_torque_Nm_, rated_power_W_ / omega);
    return fuel_map_.max_torque_at(omega);
}

std::optional<double> EngineModel::fuel_rate(double omega, double torque) const {
    if (!in_speed_range(omega) || torque < 0.0) return std::nullopt;
    if (torque > max_torque(omega) + kTorqueTol) return std::nullopt;
    if (synthetic_) {
        const double friction = willans_.friction_a_W_per_rad_s * omega +
                                willans_.friction_b_W_per_rad_s3 * omega * omega * omega;
        return (torque * omega + friction) / (willans_.efficiency * willans_.lhv_J_per_kg);
    }
    auto g_per_s = fuel_map_.interpolate(omega, torque);
    if (!g_per_s) return std::nullopt;
    return *g_per_s / 1000.0;
}

double engine_fuel_rate(const EngineModel& engine, double omega, double torque) {
    if (omega <= 0.0) return 0.0;
    auto rate = engine.fuel_rate(omega, torque);
    if (!rate)
        throw std::invalid_argument("fuel rate requested outside the engine envelope");
    return *rate;
}

EMachineModel EMachineModel::synthetic(double max_torque_Nm, double rated_power_W,
                                       double speed_max_rad_s,
                                       double peak_efficiency,
                                       double peak_torque_per_speed) {
    if (max_torque_Nm <= 0.0 || rated_power_W <= 0.0 || speed_max_rad_s <= 0.0)
        throw ConfigError("e-machine: ratings must be positive");
    if (peak_efficiency <= 0.0 || peak_efficiency >= 1.0 || peak_torque_per_speed <= 0.0)
        throw ConfigError("e-machine: bad loss shape parameters");
    EMachineModel m;
    m.synthetic_ = true;
    m.max_torque_Nm_ = max_torque_Nm;
    m.rated_power_W_ = rated_power_W;
    m.speed_max_ = speed_max_rad_s;
    // Quadratic losses tuned so efficiency peaks at peak_efficiency along
    // the ray torque = peak_torque_per_speed * speed.
    m.copper_coeff_ = (1.0 / peak_efficiency - 1.0) / (2.0 * peak_torque_per_speed);
    m.iron_coeff_ = m.copper_coeff_ * peak_torque_per_speed * peak_torque_per_speed;
    return m;
}

EMachineModel EMachineModel::from_grid(MapGrid efficiency_map, double max_torque_Nm,
                                       double speed_max_rad_s) {
    efficiency_map.validate("e-machine efficiency map");
    if (max_torque_Nm <= 0.0 || speed_max_rad_s <= 0.0)
        throw ConfigError("e-machine: ratings must be positive");
    for (double v : efficiency_map.values)
        if (!std::isnan(v) && (v <= 0.0 || v > 1.0))
            throw ConfigError("e-machine efficiency map: values must lie in (0, 1]");
    EMachineModel m;
    m.synthetic_ = false;
    m.max_torque_Nm_ = max_torque_Nm;
    m.speed_max_ = speed_max_rad_s;
    m.efficiency_map_ = std::move(efficiency_map);
    return m;
}

double EMachineModel::max_torque(double omega) const {
    const double w = std::abs(omega);
    if (w > speed_max_) return 0.0;
    if (synthetic_) {
        if (w <= 0.0) return max_torque_Nm_;
        return std::min(max_torque_Nm_, rated_power_W_ / w);
    }
    const double top = efficiency_map_.max_torque_at(w);
    return std::min(max_torque_Nm_, top);
}

std::optional<double> EMachineModel::efficiency(double omega, double torque) const {
    const double w = std::abs(omega);
    const double t = std::abs(torque);
    if (w > speed_max_ || t > max_torque(omega) + kTorqueTol) return std::nullopt;
    if (synthetic_) {
        const double p = t * w;
        if (p <= 0.0) return std::nullopt;
        const double loss = copper_coeff_ * t * t + iron_coeff_ * w * w;
        return p / (p + loss);
    }
    return efficiency_map_.interpolate(w, t);
}

std::optional<double> EMachineModel::electrical_power(double omega, double torque) const {
    const double w = std::abs(omega);
    if (w > speed_max_) return std::nullopt;
    if (std::abs(torque) > max_torque(omega) + kTorqueTol) return std::nullopt;
    if (torque == 0.0) return 0.0;

    const double mech = torque * omega;
    if (synthetic_) {
        const double loss = copper_coeff_ * torque * torque + iron_coeff_ * w * w;
        // Motoring (and stall): the battery covers the losses on top of the
        // shaft power. Generating: only the converted share arrives.
        if (mech >= 0.0) return mech + loss;
        const double eta = -mech / (-mech + loss);
        return mech * eta;
    }
    auto eta = efficiency_map_.interpolate(w, std::abs(torque));
    if (!eta || *eta <= 0.0) return std::nullopt;
    if (mech == 0.0) return 0.0;
    return mech > 0.0 ? mech / *eta : mech * *eta;
}

BatteryModel BatteryModel::constant(double voc_V, double r0_ohm, double capacity_Ah,
                                    double soc_min, double soc_max,
                                    double power_min_W, double power_max_W) {
    if (voc_V <= 0.0 || r0_ohm <= 0.0) throw ConfigError("battery: voc and r0 must be positive");
    if (capacity_Ah <= 0.0) throw ConfigError("battery: capacity must be positive");
    if (!(soc_min < soc_max) || soc_min < 0.0 || soc_max > 1.0)
        throw ConfigError("battery: SOC window must satisfy 0 <= min < max <= 1");
    if (power_min_W > 0.0 || power_max_W < 0.0 || power_min_W >= power_max_W)
        throw ConfigError("battery: power window must span zero");
    BatteryModel b;
    b.curve_ = false;
    b.voc_V_ = voc_V;
    b.r0_ohm_ = r0_ohm;
    b.capacity_Ah_ = capacity_Ah;
    b.soc_min_ = soc_min;
    b.soc_max_ = soc_max;
    b.power_min_W_ = power_min_W;
    b.power_max_W_ = power_max_W;
    return b;
}

BatteryModel BatteryModel::from_curve(std::vector<double> soc_bp, std::vector<double> voc_V,
                                      std::vector<double> r0_ohm, double capacity_Ah,
                                      double soc_min, double soc_max,
                                      double power_min_W, double power_max_W) {
    if (soc_bp.size() < 2 || soc_bp.size() != voc_V.size() || soc_bp.size() != r0_ohm.size())
        throw ConfigError("battery curve: need matching soc/voc/r0 columns, two rows minimum");
    for (std::size_t i = 0; i < soc_bp.size(); ++i) {
        if (i > 0 && soc_bp[i] <= soc_bp[i - 1])
            throw ConfigError("battery curve: SOC must be strictly increasing");
        if (voc_V[i] <= 0.0 || r0_ohm[i] <= 0.0)
            throw ConfigError("battery curve: voc and r0 must be positive");
    }
    BatteryModel b = constant(voc_V.front(), r0_ohm.front(), capacity_Ah, soc_min, soc_max,
                              power_min_W, power_max_W);
    b.curve_ = true;
    b.soc_bp_ = std::move(soc_bp);
    b.voc_bp_ = std::move(voc_V);
    b.r0_bp_ = std::move(r0_ohm);
    return b;
}

namespace {
double interp_curve(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
    if (x <= xs.front()) return ys.front();
    if (x >= xs.back()) return ys.back();
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    std::size_t hi = static_cast<std::size_t>(it - xs.begin());
    const double w = (x - xs[hi - 1]) / (xs[hi] - xs[hi - 1]);
    return ys[hi - 1] + w * (ys[hi] - ys[hi - 1]);
}
}  // namespace

double BatteryModel::voc(double soc) const {
    return curve_ ? interp_curve(soc_bp_, voc_bp_, soc) : voc_V_;
}

double BatteryModel::r0(double soc) const {
    return curve_ ? interp_curve(soc_bp_, r0_bp_, soc) : r0_ohm_;
}

double BatteryModel::max_deliverable_power(double soc) const {
    const double v = voc(soc);
    return v * v / (4.0 * r0(soc));
}

std::optional<double> BatteryModel::current(double power_W, double soc) const {
    if (power_W < power_min_W_ || power_W > power_max_W_) return std::nullopt;
    const double v = voc(soc);
    const double r = r0(soc);
    const double disc = v * v - 4.0 * r * power_W;
    if (disc < 0.0) return std::nullopt;
    // Stable form of the smaller quadratic root; exact for power_W = 0.
    return 2.0 * power_W / (v + std::sqrt(disc));
}

double BatteryModel::delta_soc(double current_A, double dt_s) const {
    return -(current_A * dt_s) / (3600.0 * capacity_Ah_);
}

std::optional<double> BatteryModel::soc_after(double soc, double current_A, double dt_s) const {
    const double next = soc + delta_soc(current_A, dt_s);
    if (next < soc_min_ - 1e-12 || next > soc_max_ + 1e-12) return std::nullopt;
    return next;
}

PowertrainModels::PowertrainModels()
    : engine(EngineModel::synthetic(85.0, 52000.0, 1000.0 * kPi / 30.0,
                                    6000.0 * kPi / 30.0)),
      em(EMachineModel::synthetic(200.0, 30000.0, 900.0, 0.93, 0.2)),
      battery(BatteryModel::constant(295.0, 0.1, 5.3, 0.3, 0.8, -40000.0, 40000.0)) {}

PowertrainModels default_models() { return PowertrainModels{}; }

}  // namespace hevdp
