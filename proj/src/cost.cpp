#include "hevdp/cost.hpp"

#include <limits>
#include <stdexcept>

namespace hevdp {

void PenaltyWeights::validate() const {
    if (shift_g < 0.0 || start_g < 0.0 || reserve_g < 0.0)
        throw std::invalid_argument("penalty weights must be non-negative");
}

CostBreakdown stage_cost(const StageResult& stage, const State& state,
                         const Control& control, const PenaltyWeights& weights,
                         double dt_s) {
    if (dt_s <= 0.0) throw std::invalid_argument("timestep must be positive");
    CostBreakdown out;
    if (!stage.feasible) {
        out.total_g = std::numeric_limits<double>::infinity();
        return out;
    }
    out.fuel_g = stage.fuel_rate_kg_s * dt_s * 1000.0;
    if (control.gear != state.gear_prev) out.shift_g = weights.shift_g;
    if (stage.engine_on && !state.engine_prev) out.start_g = weights.start_g;
    if (stage.reserve_applies) out.reserve_g = weights.reserve_g * stage.torque_utilization;
    // Summation order matters for bit-identical totals across passes.
    double total = out.fuel_g;
    total += out.shift_g;
    total += out.start_g;
    total += out.reserve_g;
    out.total_g = total;
    return out;
}

}  // namespace hevdp
