#include "hevdp/dp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "hevdp/errors.hpp"

namespace hevdp {

Grids Grids::uniform(int soc_nodes, double soc_min, double soc_max,
                     int alpha_nodes, double alpha_max, int gear_count) {
    if (soc_nodes < 2) throw ConfigError("grid: need at least two SOC nodes");
    if (!(soc_min < soc_max)) throw ConfigError("grid: SOC bounds must be ordered");
    if (alpha_nodes < 2 || alpha_nodes > 65535)
        throw ConfigError("grid: alpha node count out of range");
    if (alpha_max < 1.0) throw ConfigError("grid: alpha grid must reach 1");
    if (gear_count < 1 || gear_count > 200)
        throw ConfigError("grid: gear count out of range");

    Grids g;
    g.gear_count = gear_count;
    g.soc.resize(soc_nodes);
    const double soc_span = soc_max - soc_min;
    for (int i = 0; i < soc_nodes; ++i)
        g.soc[i] = soc_min + (static_cast<double>(i) * soc_span) / (soc_nodes - 1);
    g.soc.front() = soc_min;
    g.soc.back() = soc_max;

    g.alpha.resize(alpha_nodes);
    for (int i = 0; i < alpha_nodes; ++i)
        g.alpha[i] = (static_cast<double>(i) * alpha_max) / (alpha_nodes - 1);
    g.alpha.front() = 0.0;
    // Pin the node closest to 1 so pure-thermal operation is exactly
    // representable.
    auto near_one = std::min_element(g.alpha.begin(), g.alpha.end(),
                                     [](double a, double b) {
                                         return std::abs(a - 1.0) < std::abs(b - 1.0);
                                     });
    if (std::abs(*near_one - 1.0) > 1e-9)
        throw ConfigError("grid: alpha grid must contain 1 (adjust node count)");
    *near_one = 1.0;
    return g;
}

int Grids::nearest_soc_index(double value) const {
    const long idx = std::lround((value - soc.front()) / soc_step());
    return static_cast<int>(std::clamp(idx, 0L, static_cast<long>(soc.size()) - 1));
}

void Grids::validate(const BatteryModel& battery) const {
    if (soc.size() < 2 || alpha.size() < 2 || alpha.size() > 65535)
        throw ConfigError("grid: bad node counts");
    if (gear_count < 1 || gear_count > 200) throw ConfigError("grid: bad gear count");
    const double h = soc_step();
    for (std::size_t i = 0; i < soc.size(); ++i) {
        const double expect = soc.front() + static_cast<double>(i) * h;
        if (std::abs(soc[i] - expect) > 1e-9 * std::max(h, 1e-12))
            throw ConfigError("grid: SOC nodes must be uniform");
    }
    if (soc.front() < battery.soc_min() - 1e-12 || soc.back() > battery.soc_max() + 1e-12)
        throw ConfigError("grid: SOC nodes leave the battery window");
    bool has_zero = false, has_one = false;
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        if (i > 0 && alpha[i] <= alpha[i - 1])
            throw ConfigError("grid: alpha nodes must ascend");
        if (alpha[i] < 0.0) throw ConfigError("grid: negative alpha node");
        if (alpha[i] == 0.0) has_zero = true;
        if (alpha[i] == 1.0) has_one = true;
    }
    if (!has_zero || !has_one)
        throw ConfigError("grid: alpha grid must contain 0 and 1");
}

Control Solution::policy(std::size_t step, std::size_t cell) const {
    const std::size_t at = step * grids.cells() + cell;
    Control u;
    u.gear = policy_gear[at];
    u.alpha = grids.alpha[policy_alpha[at]];
    return u;
}

double Solution::value_at(std::size_t step, double soc, int gear, bool engine_on) const {
    if (step >= values.size() || values[step].empty())
        throw std::logic_error("value plane not retained; solve with keep_all_values");
    const double* plane = values[step].data() + grids.cell_index(0, gear, engine_on);
    return interp_value(plane, grids.soc_nodes(), grids.soc.front(), grids.soc_step(), soc);
}

namespace {

struct Arc {
    std::uint8_t gear = 0;
    std::uint16_t alpha_idx = 0;
    bool engine_on = false;
    bool fast = false;        // constant battery curves: SOC delta precomputed
    bool braking = false;
    double fuel_g = 0.0;
    double reserve_g = 0.0;
    double dsoc = 0.0;        // traction fast path
    double dsoc_unc = 0.0;    // braking fast path, before the SOC ceiling
    std::size_t eval_idx = 0; // slow path: index into the eval list
    std::size_t plane = 0;    // vnext offset of the (gear, engine) plane
};

struct StepArcs {
    StageControlEval::Kind kind = StageControlEval::Kind::Standstill;
    std::vector<Arc> arcs;                  // ordered by gear, then alpha
    std::vector<StageControlEval> evals;
};

StepArcs build_step_arcs(double speed, double accel, const PowertrainModels& models,
                         const PenaltyWeights& weights, const Grids& grids, double dt) {
    StepArcs out;
    const StageControlEval probe =
        precompute_stage(Control{0.0, 1}, speed, accel, models);
    out.kind = probe.kind;
    if (out.kind == StageControlEval::Kind::Standstill) return out;

    const bool fast = models.battery.constant_curves();
    const bool braking = out.kind == StageControlEval::Kind::Braking;

    for (int gear = 1; gear <= grids.gear_count; ++gear) {
        const std::size_t alpha_count = braking ? 1 : grids.alpha.size();
        for (std::size_t ai = 0; ai < alpha_count; ++ai) {
            const Control u{grids.alpha[ai], gear};
            StageControlEval ce =
                (braking && gear == 1) ? probe : precompute_stage(u, speed, accel, models);
            if (braking) ce.control = u;
            if (!ce.feasible) continue;

            Arc arc;
            arc.gear = static_cast<std::uint8_t>(gear);
            arc.alpha_idx = static_cast<std::uint16_t>(ai);
            arc.engine_on = ce.engine_on;
            arc.braking = braking;
            arc.fuel_g = ce.fuel_rate_kg_s * dt * 1000.0;
            if (ce.reserve_applies) arc.reserve_g = weights.reserve_g * ce.torque_utilization;
            arc.plane = grids.cell_index(0, gear, ce.engine_on);

            if (fast) {
                arc.fast = true;
                if (braking) {
                    const double accepted =
                        std::max(ce.battery_power_W, models.battery.power_min());
                    auto current = models.battery.current(accepted, grids.soc.front());
                    arc.dsoc_unc = models.battery.delta_soc(*current, dt);
                } else {
                    auto current =
                        models.battery.current(ce.battery_power_W, grids.soc.front());
                    if (!current) continue;  // outside the pack power window at any SOC
                    arc.dsoc = models.battery.delta_soc(*current, dt);
                }
            } else {
                arc.eval_idx = out.evals.size();
                out.evals.push_back(ce);
            }
            out.arcs.push_back(arc);
        }
    }
    return out;
}

}  // namespace

Solution backward_pass(const DriveCycle& cycle, const PowertrainModels& models,
                       const PenaltyWeights& weights, const Grids& grids,
                       const TerminalSpec& terminal, const SolveOptions& options) {
    cycle.validate();
    models.vehicle.validate();
    weights.validate();
    grids.validate(models.battery);
    if (terminal.kind == TerminalSpec::Kind::SustainAtOrAbove &&
        (terminal.target_soc < grids.soc.front() - 1e-9 ||
         terminal.target_soc > grids.soc.back() + 1e-9))
        throw ConfigError("terminal SOC target lies outside the grid");

    const std::size_t steps = cycle.size();
    const std::size_t soc_nodes = grids.soc.size();
    const std::size_t cells = grids.cells();
    const double soc_front = grids.soc.front();
    const double soc_back = grids.soc.back();
    const double h = grids.soc_step();
    const double dt = cycle.timestep_s;
    const int gear_count = grids.gear_count;

    Solution sol;
    sol.grids = grids;
    sol.terminal = terminal;
    sol.weights = weights;
    sol.timestep_s = dt;
    sol.steps = steps;
    sol.policy_gear.assign(steps * cells, 0);
    sol.policy_alpha.assign(steps * cells, 0);
    sol.values.resize(steps + 1);

    std::vector<double> vnext(cells), vcur(cells);
    for (std::size_t i = 0; i < soc_nodes; ++i) {
        const bool ok = terminal.kind == TerminalSpec::Kind::Free ||
                        grids.soc[i] >= terminal.target_soc - 1e-9;
        const double v = ok ? 0.0 : kInfiniteCost;
        for (int g = 1; g <= gear_count; ++g) {
            vnext[grids.cell_index(static_cast<int>(i), g, false)] = v;
            vnext[grids.cell_index(static_cast<int>(i), g, true)] = v;
        }
    }
    sol.values[steps] = vnext;

    const int thread_count =
        std::max(1, std::min(options.threads, static_cast<int>(soc_nodes)));

    std::vector<double> plane_cost;
    for (std::size_t k = steps; k-- > 0;) {
        const double speed = cycle.speed_mps[k];
        const double accel = cycle.accel_mps2[k];
        std::uint8_t* pol_gear = sol.policy_gear.data() + k * cells;
        std::uint16_t* pol_alpha = sol.policy_alpha.data() + k * cells;

        if (precompute_stage(Control{0.0, 1}, speed, accel, models).kind ==
            StageControlEval::Kind::Standstill) {
            // Holding still: gear is pinned, engine stays off, SOC holds.
            // The successor sits exactly on the node, no interpolation.
            for (int gp = 1; gp <= gear_count; ++gp) {
                const double* next_plane = vnext.data() + grids.cell_index(0, gp, false);
                for (int ep = 0; ep < 2; ++ep) {
                    const std::size_t base = grids.cell_index(0, gp, ep != 0);
                    for (std::size_t i = 0; i < soc_nodes; ++i) {
                        const double v = next_plane[i];
                        vcur[base + i] = v;
                        if (std::isfinite(v)) {
                            pol_gear[base + i] = static_cast<std::uint8_t>(gp);
                            pol_alpha[base + i] = 0;
                        } else {
                            pol_gear[base + i] = 0;
                        }
                    }
                }
            }
        } else {
            const StepArcs step_arcs =
                build_step_arcs(speed, accel, models, weights, grids, dt);
            const std::size_t arc_count = step_arcs.arcs.size();

            auto worker = [&](std::size_t i_begin, std::size_t i_end,
                              std::vector<double>& adjusted) {
                for (int gp = 1; gp <= gear_count; ++gp) {
                    for (int ep = 0; ep < 2; ++ep) {
                        // State-dependent penalty terms, hoisted per plane.
                        // Order of additions mirrors stage_cost.
                        for (std::size_t a = 0; a < arc_count; ++a) {
                            const Arc& arc = step_arcs.arcs[a];
                            double c = arc.fuel_g;
                            if (arc.gear != gp) c += weights.shift_g;
                            if (arc.engine_on && ep == 0) c += weights.start_g;
                            c += arc.reserve_g;
                            adjusted[a] = c;
                        }
                        const std::size_t base = grids.cell_index(0, gp, ep != 0);
                        for (std::size_t i = i_begin; i < i_end; ++i) {
                            const double soc = grids.soc[i];
                            double best = kInfiniteCost;
                            std::ptrdiff_t best_arc = -1;
                            for (std::size_t a = 0; a < arc_count; ++a) {
                                const Arc& arc = step_arcs.arcs[a];
                                double soc_next;
                                if (arc.fast) {
                                    if (arc.braking) {
                                        soc_next = std::min(soc + arc.dsoc_unc, soc_back);
                                    } else {
                                        soc_next = soc + arc.dsoc;
                                        if (soc_next < soc_front - 1e-12 ||
                                            soc_next > soc_back + 1e-12)
                                            continue;
                                    }
                                } else {
                                    const StageTransition tr = stage_transition(
                                        step_arcs.evals[arc.eval_idx], soc, models, dt);
                                    if (!tr.feasible) continue;
                                    soc_next = tr.soc_next;
                                    if (soc_next < soc_front - 1e-12 ||
                                        soc_next > soc_back + 1e-12)
                                        continue;
                                }
                                const double tail =
                                    interp_value(vnext.data() + arc.plane,
                                                 static_cast<int>(soc_nodes), soc_front, h,
                                                 soc_next);
                                if (std::isinf(tail)) continue;
                                const double total = adjusted[a] + tail;
                                if (total < best) {
                                    best = total;
                                    best_arc = static_cast<std::ptrdiff_t>(a);
                                }
                            }
                            vcur[base + i] = best;
                            if (best_arc >= 0) {
                                const Arc& arc = step_arcs.arcs[best_arc];
                                pol_gear[base + i] = arc.gear;
                                pol_alpha[base + i] = arc.alpha_idx;
                            } else {
                                pol_gear[base + i] = 0;
                            }
                        }
                    }
                }
            };

            if (thread_count == 1) {
                if (plane_cost.size() < arc_count) plane_cost.resize(arc_count);
                worker(0, soc_nodes, plane_cost);
            } else {
                std::vector<std::thread> pool;
                std::vector<std::vector<double>> scratch(thread_count,
                                                         std::vector<double>(arc_count));
                const std::size_t chunk = (soc_nodes + thread_count - 1) / thread_count;
                for (int t = 0; t < thread_count; ++t) {
                    const std::size_t begin = t * chunk;
                    const std::size_t end = std::min(soc_nodes, begin + chunk);
                    if (begin >= end) break;
                    pool.emplace_back(worker, begin, end, std::ref(scratch[t]));
                }
                for (auto& th : pool) th.join();
            }
        }

        if (options.keep_all_values) sol.values[k] = vcur;
        std::swap(vnext, vcur);
    }
    sol.values[0] = vnext;
    return sol;
}

Trajectory forward_pass(const Solution& solution, const State& x0,
                        const DriveCycle& cycle, const PowertrainModels& models) {
    if (cycle.size() != solution.steps)
        throw std::invalid_argument("cycle length does not match the solved policy");
    if (x0.gear_prev < 1 || x0.gear_prev > solution.grids.gear_count)
        throw std::invalid_argument("initial gear out of range");
    if (x0.soc < solution.grids.soc.front() - 1e-9 ||
        x0.soc > solution.grids.soc.back() + 1e-9)
        throw std::invalid_argument("initial SOC outside the grid");

    const double dt = solution.timestep_s;
    Trajectory traj;
    traj.cycle_name = cycle.name;
    traj.timestep_s = dt;
    traj.soc_initial = x0.soc;
    traj.steps.reserve(solution.steps);

    State x = x0;
    for (std::size_t k = 0; k < solution.steps; ++k) {
        const std::size_t cell = solution.grids.cell_index(
            solution.grids.nearest_soc_index(x.soc), x.gear_prev, x.engine_prev);
        if (!solution.has_policy(k, cell))
            throw InfeasibleError(
                "no feasible control at step " + std::to_string(k) + " (t=" +
                std::to_string(k * dt) + " s, v=" + std::to_string(cycle.speed_mps[k]) +
                " m/s); refine the SOC grid or relax the terminal window");
        const Control u = solution.policy(k, cell);
        const StageResult stage =
            evaluate_stage(x, u, cycle.speed_mps[k], cycle.accel_mps2[k], models, dt);
        if (!stage.feasible)
            throw InfeasibleError(
                "rollout left the feasible set at step " + std::to_string(k) + " (" +
                infeasible_reason_name(stage.reason) +
                "); the SOC grid is too coarse near a constraint");
        const CostBreakdown cost = stage_cost(stage, x, u, solution.weights, dt);

        TrajectoryStep rec;
        rec.time_s = static_cast<double>(k) * dt;
        rec.speed_mps = cycle.speed_mps[k];
        rec.accel_mps2 = cycle.accel_mps2[k];
        rec.state = x;
        rec.control = u;
        rec.stage = stage;
        rec.cost = cost;
        traj.steps.push_back(rec);

        traj.total_cost_g += cost.total_g;
        traj.fuel_g += cost.fuel_g;
        x = State{stage.soc_next, u.gear, stage.engine_on};
    }
    traj.distance_m = cycle.distance_m();
    traj.soc_final = x.soc;
    traj.terminal_satisfied =
        solution.terminal.satisfied(x.soc, solution.grids.soc_step() + 1e-12);
    return traj;
}

std::vector<Control> admissible_controls(double speed_mps, double accel_mps2,
                                         const VehicleConfig& vehicle, int gear_prev,
                                         const std::vector<double>& alpha_points,
                                         int gear_count) {
    const double force = tractive_force(speed_mps, accel_mps2, vehicle);
    std::vector<Control> out;
    if (speed_mps == 0.0 && force <= 0.0) {
        out.push_back(Control{0.0, gear_prev});
        return out;
    }
    if (force <= 0.0) {
        for (int g = 1; g <= gear_count; ++g) out.push_back(Control{0.0, g});
        return out;
    }
    for (int g = 1; g <= gear_count; ++g)
        for (double a : alpha_points) out.push_back(Control{a, g});
    return out;
}

namespace {

struct BruteSearch {
    const DriveCycle& cycle;
    const PowertrainModels& models;
    const PenaltyWeights& weights;
    const std::vector<double>& alpha_points;
    int gear_count;
    const TerminalSpec& terminal;

    double best = kInfiniteCost;
    std::vector<Control> best_controls;
    std::vector<Control> current;

    void descend(std::size_t k, const State& x, double cost_so_far) {
        if (k == cycle.size()) {
            if (terminal.kind == TerminalSpec::Kind::SustainAtOrAbove &&
                x.soc < terminal.target_soc)
                return;
            if (cost_so_far < best) {
                best = cost_so_far;
                best_controls = current;
            }
            return;
        }
        const auto controls =
            admissible_controls(cycle.speed_mps[k], cycle.accel_mps2[k], models.vehicle,
                                x.gear_prev, alpha_points, gear_count);
        for (const Control& u : controls) {
            const StageResult stage = evaluate_stage(x, u, cycle.speed_mps[k],
                                                     cycle.accel_mps2[k], models,
                                                     cycle.timestep_s);
            if (!stage.feasible) continue;
            const double c =
                stage_cost(stage, x, u, weights, cycle.timestep_s).total_g;
            if (cost_so_far + c >= best) continue;
            current.push_back(u);
            descend(k + 1, State{stage.soc_next, u.gear, stage.engine_on},
                    cost_so_far + c);
            current.pop_back();
        }
    }
};

}  // namespace

BruteForceResult brute_force_solve(const DriveCycle& cycle, const PowertrainModels& models,
                                   const PenaltyWeights& weights, const State& x0,
                                   const std::vector<double>& alpha_points, int gear_count,
                                   const TerminalSpec& terminal, double max_sequences) {
    cycle.validate();
    weights.validate();
    const double per_step =
        static_cast<double>(alpha_points.size()) * static_cast<double>(gear_count);
    const double envelope = std::pow(per_step, static_cast<double>(cycle.size()));
    if (!(envelope <= max_sequences))
        throw InfeasibleError(
            "exhaustive search envelope too large: (" + std::to_string(alpha_points.size()) +
            " alphas x " + std::to_string(gear_count) + " gears)^" +
            std::to_string(cycle.size()) + " = " + std::to_string(envelope) +
            " sequences exceeds the cap of " + std::to_string(max_sequences));

    BruteSearch search{cycle, models, weights, alpha_points, gear_count, terminal,
                       kInfiniteCost, {}, {}};
    search.descend(0, x0, 0.0);

    BruteForceResult out;
    out.sequences_bounded = static_cast<std::size_t>(envelope);
    if (std::isfinite(search.best)) {
        out.feasible = true;
        out.cost_g = search.best;
        out.controls = std::move(search.best_controls);
    }
    return out;
}

Trajectory simulate_sequence(const std::vector<Control>& controls, const State& x0,
                             const DriveCycle& cycle, const PowertrainModels& models,
                             const PenaltyWeights& weights, const TerminalSpec& terminal) {
    if (controls.size() != cycle.size())
        throw std::invalid_argument("control sequence length does not match the cycle");
    const double dt = cycle.timestep_s;
    Trajectory traj;
    traj.cycle_name = cycle.name;
    traj.timestep_s = dt;
    traj.soc_initial = x0.soc;

    State x = x0;
    for (std::size_t k = 0; k < controls.size(); ++k) {
        const StageResult stage = evaluate_stage(x, controls[k], cycle.speed_mps[k],
                                                 cycle.accel_mps2[k], models, dt);
        if (!stage.feasible)
            throw InfeasibleError("sequence infeasible at step " + std::to_string(k) +
                                  " (" + infeasible_reason_name(stage.reason) + ")");
        const CostBreakdown cost = stage_cost(stage, x, controls[k], weights, dt);

        TrajectoryStep rec;
        rec.time_s = static_cast<double>(k) * dt;
        rec.speed_mps = cycle.speed_mps[k];
        rec.accel_mps2 = cycle.accel_mps2[k];
        rec.state = x;
        rec.control = controls[k];
        rec.stage = stage;
        rec.cost = cost;
        traj.steps.push_back(rec);

        traj.total_cost_g += cost.total_g;
        traj.fuel_g += cost.fuel_g;
        x = State{stage.soc_next, controls[k].gear, stage.engine_on};
    }
    traj.distance_m = cycle.distance_m();
    traj.soc_final = x.soc;
    traj.terminal_satisfied = terminal.satisfied(x.soc);
    return traj;
}

}  // namespace hevdp
