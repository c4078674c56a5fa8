#pragma once

#include "hevdp/powertrain.hpp"

namespace hevdp {

// Penalty weights in gram-equivalents added on top of stage fuel mass.
struct PenaltyWeights {
    double shift_g = 0.0;    // per gear change
    double start_g = 0.0;    // per off->on engine transition
    double reserve_g = 0.0;  // times torque utilization on driven stages

    void validate() const;  // all weights must be non-negative
};

struct CostBreakdown {
    double fuel_g = 0.0;
    double shift_g = 0.0;
    double start_g = 0.0;
    double reserve_g = 0.0;
    double total_g = 0.0;  // +inf for infeasible stages
};

// Four-term running cost of one stage. Terms are non-negative; an infeasible
// stage result yields an infinite total.
CostBreakdown stage_cost(const StageResult& stage, const State& state,
                         const Control& control, const PenaltyWeights& weights,
                         double dt_s);

}  // namespace hevdp
