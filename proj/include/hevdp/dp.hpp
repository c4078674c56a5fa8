#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "hevdp/cost.hpp"
#include "hevdp/cycle.hpp"
#include "hevdp/powertrain.hpp"

namespace hevdp {

constexpr double kInfiniteCost = std::numeric_limits<double>::infinity();

// Discretization of the state and control spaces. SOC nodes are uniform;
// gear and engine state are kept exact. The alpha grid must contain 0 and 1
// so that pure-electric and pure-thermal operation stay representable.
struct Grids {
    std::vector<double> soc;
    std::vector<double> alpha;
    int gear_count = 5;

    static Grids uniform(int soc_nodes, double soc_min, double soc_max,
                         int alpha_nodes, double alpha_max, int gear_count);

    int soc_nodes() const { return static_cast<int>(soc.size()); }
    double soc_step() const { return (soc.back() - soc.front()) / (soc.size() - 1); }
    int nearest_soc_index(double value) const;

    std::size_t cells() const { return soc.size() * gear_count * 2; }
    // Plane-major layout: all SOC nodes of one (engine, gear) pair are
    // contiguous.
    std::size_t cell_index(int soc_idx, int gear, bool engine_on) const {
        return (static_cast<std::size_t>(engine_on ? gear_count : 0) + gear - 1)
                   * soc.size() + soc_idx;
    }

    void validate(const BatteryModel& battery) const;
};

// End-of-horizon requirement on SOC.
struct TerminalSpec {
    enum class Kind { Free, SustainAtOrAbove };
    Kind kind = Kind::SustainAtOrAbove;
    double target_soc = 0.55;

    bool satisfied(double soc_final, double tolerance = 0.0) const {
        return kind == Kind::Free || soc_final >= target_soc - tolerance;
    }
};

struct SolveOptions {
    bool keep_all_values = false;  // retain every value plane, not just k = 0
    int threads = 1;
};

// Linear interpolation over one (gear, engine) plane of SOC node values.
// Conservative: blending a finite with an infinite neighbour yields
// infinity. Queries within a hair of a node snap to the node value, so
// exact-node lookups never touch a neighbour.
inline double interp_value(const double* plane, int soc_nodes, double soc_front,
                           double soc_step, double soc) {
    double pos = (soc - soc_front) / soc_step;
    if (pos <= 0.0) return plane[0];
    if (pos >= soc_nodes - 1) return plane[soc_nodes - 1];
    double rounded = std::round(pos);
    if (std::abs(pos - rounded) < 1e-9) return plane[static_cast<int>(rounded)];
    int lo = static_cast<int>(pos);
    double w = pos - lo;
    double a = plane[lo];
    double b = plane[lo + 1];
    if (std::isinf(a) || std::isinf(b)) return kInfiniteCost;
    return a + w * (b - a);
}

struct Solution {
    Grids grids;
    TerminalSpec terminal;
    PenaltyWeights weights;
    double timestep_s = 1.0;
    std::size_t steps = 0;

    // Per (step, cell): chosen gear (0 marks "no feasible control") and
    // index into grids.alpha.
    std::vector<std::uint8_t> policy_gear;
    std::vector<std::uint16_t> policy_alpha;

    // Cost-to-go planes. values[0] is always present; the rest only when
    // solved with keep_all_values.
    std::vector<std::vector<double>> values;

    bool has_policy(std::size_t step, std::size_t cell) const {
        return policy_gear[step * grids.cells() + cell] != 0;
    }
    Control policy(std::size_t step, std::size_t cell) const;
    double value_at(std::size_t step, double soc, int gear, bool engine_on) const;
};

Solution backward_pass(const DriveCycle& cycle, const PowertrainModels& models,
                       const PenaltyWeights& weights, const Grids& grids,
                       const TerminalSpec& terminal, const SolveOptions& options = {});

struct TrajectoryStep {
    double time_s = 0.0;
    double speed_mps = 0.0;
    double accel_mps2 = 0.0;
    State state{};
    Control control{};
    StageResult stage{};
    CostBreakdown cost{};
};

struct Trajectory {
    std::string cycle_name;
    double timestep_s = 1.0;
    std::vector<TrajectoryStep> steps;
    double total_cost_g = 0.0;
    double fuel_g = 0.0;
    double distance_m = 0.0;
    double soc_initial = 0.0;
    double soc_final = 0.0;
    bool terminal_satisfied = true;
};

// Roll the stored policy forward from x0 with exact dynamics, reading the
// policy at the nearest SOC node. Throws InfeasibleError when the rollout
// reaches a cell without a feasible control or an evaluated stage turns out
// infeasible (coarse grids can do that).
Trajectory forward_pass(const Solution& solution, const State& x0,
                        const DriveCycle& cycle, const PowertrainModels& models);

// Controls admitted at one stage. Standstill pins the control to
// (gear_prev, alpha 0); zero or negative demand while moving pins alpha to 0
// with the gear free; positive demand frees both. Every caller that
// enumerates controls goes through here so the searched sets always agree.
std::vector<Control> admissible_controls(double speed_mps, double accel_mps2,
                                         const VehicleConfig& vehicle, int gear_prev,
                                         const std::vector<double>& alpha_points,
                                         int gear_count);

struct BruteForceResult {
    bool feasible = false;
    double cost_g = kInfiniteCost;
    std::vector<Control> controls;
    std::size_t sequences_bounded = 0;  // size of the enumerated envelope
};

// Exhaustive reference search over every admissible control sequence with
// exact (ungridded) dynamics. Ties resolve to the lexicographically first
// sequence in (gear, alpha) order. Throws InfeasibleError with a size report
// when the envelope exceeds max_sequences.
BruteForceResult brute_force_solve(const DriveCycle& cycle, const PowertrainModels& models,
                                   const PenaltyWeights& weights, const State& x0,
                                   const std::vector<double>& alpha_points, int gear_count,
                                   const TerminalSpec& terminal,
                                   double max_sequences = 1e7);

// Replay a fixed control sequence with exact dynamics.
Trajectory simulate_sequence(const std::vector<Control>& controls, const State& x0,
                             const DriveCycle& cycle, const PowertrainModels& models,
                             const PenaltyWeights& weights, const TerminalSpec& terminal);

}  // namespace hevdp
