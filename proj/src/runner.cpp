#include "hevdp/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hevdp/errors.hpp"

namespace hevdp {

namespace {

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fixed(double v, int digits) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    return out;
}

std::string sanitize_field(std::string s) {
    std::replace(s.begin(), s.end(), ',', ';');
    return s;
}

// First step at which no admissible control survives the stage evaluation,
// probed across every prior gear at a mid-grid SOC.
std::string diagnose_infeasibility(const DriveCycle& cycle, const PowertrainModels& models,
                                   const Grids& grids, const TerminalSpec& terminal) {
    const double soc_mid = grids.soc[grids.soc.size() / 2];
    for (std::size_t k = 0; k < cycle.size(); ++k) {
        bool any = false;
        InfeasibleReason reason = InfeasibleReason::None;
        for (int gp = 1; gp <= grids.gear_count && !any; ++gp) {
            for (const Control& u :
                 admissible_controls(cycle.speed_mps[k], cycle.accel_mps2[k], models.vehicle,
                                     gp, grids.alpha, grids.gear_count)) {
                const StageResult stage =
                    evaluate_stage(State{soc_mid, gp, false}, u, cycle.speed_mps[k],
                                   cycle.accel_mps2[k], models, cycle.timestep_s);
                if (stage.feasible) {
                    any = true;
                    break;
                }
                reason = stage.reason;
            }
        }
        if (!any) {
            return "problem infeasible: no admissible control at step " + std::to_string(k) +
                   " (t=" + fixed(k * cycle.timestep_s, 1) +
                   " s, v=" + fixed(cycle.speed_mps[k], 2) +
                   " m/s, a=" + fixed(cycle.accel_mps2[k], 3) + " m/s^2; last reason: " +
                   infeasible_reason_name(reason) + ")";
        }
    }
    std::string msg = "problem infeasible: every step admits a control but no trajectory "
                      "reaches the terminal window";
    if (terminal.kind == TerminalSpec::Kind::SustainAtOrAbove)
        msg += " (target SOC " + fixed(terminal.target_soc, 4) + ")";
    return msg;
}

}  // namespace

std::string derive_label(const PenaltyWeights& weights) {
    const bool shift = weights.shift_g > 0.0;
    const bool start = weights.start_g > 0.0;
    const bool reserve = weights.reserve_g > 0.0;
    if (!shift && !start && !reserve) return "fuel-optimal";
    if (shift && !start && !reserve) return "gear-shift-penalty";
    if (!shift && start && !reserve) return "engine-start-penalty";
    if (!shift && !start && reserve) return "torque-reserve-penalty";
    return "custom";
}

RunArtifacts run_solve(const RunConfig& config, const SolveOptions& options) {
    RunArtifacts art;
    art.config = config;
    art.models = resolve_models(config);
    if (config.initial_gear > art.models.vehicle.gear_count())
        throw ConfigError("initial_gear exceeds the gearbox");

    const DriveCycle cycle = resolve_cycle(config);
    const Grids grids = resolve_grids(config, art.models);
    const TerminalSpec terminal = resolve_terminal(config);
    const State x0 = resolve_initial_state(config, art.models.battery);
    art.hash = config_hash(config);
    art.label = config.label.empty() ? derive_label(config.weights) : config.label;

    SolveOptions opts = options;
    if (opts.threads <= 1 && config.threads > 1) opts.threads = config.threads;
    Solution solution =
        backward_pass(cycle, art.models, config.weights, grids, terminal, opts);

    const double v0 = solution.value_at(0, x0.soc, x0.gear_prev, x0.engine_prev);
    if (!std::isfinite(v0))
        throw InfeasibleError(diagnose_infeasibility(cycle, art.models, grids, terminal));

    art.trajectory = forward_pass(solution, x0, cycle, art.models);
    if (!art.trajectory.terminal_satisfied)
        throw InfeasibleError(
            "rollout missed the terminal SOC window: reached " +
            fixed(art.trajectory.soc_final, 5) + " against target " +
            fixed(terminal.target_soc, 5) + "; refine --soc-nodes");
    art.report = make_report(art.trajectory, art.models.vehicle.fuel_density_g_per_l);
    art.solution = std::move(solution);
    return art;
}

std::string write_run_outputs(const RunArtifacts& art, const std::string& out_root,
                              bool folded_shares) {
    namespace fs = std::filesystem;
    const auto wall_start = std::chrono::steady_clock::now();
    const fs::path dir = fs::path(out_root) / art.hash;
    fs::create_directories(dir);

    {
        RunConfig echo = art.config;
        echo.label = art.label;
        auto out = open_out((dir / "config_echo.cfg").string());
        out << "# config " << art.hash << "\n" << serialize(echo);
    }

    const StrategyReport& r = art.report;
    const ModeShares view = hybrid_mode_shares(r, folded_shares);
    {
        auto out = open_out((dir / "report.csv").string());
        out << "label,cycle,distance_km,duration_min,fuel_g,fuel_l_per_100km,"
               "shift_count,shifts_per_min,start_count,starts_per_min,"
               "avg_torque_reserve_pct,total_cost_g,soc_initial,soc_final,"
               "share_pure_electric,share_pure_thermal,share_power_split,"
               "share_battery_charging,share_regen,share_standstill,"
               "view_pure_electric,view_pure_thermal,view_power_split,"
               "view_battery_charging,shift_penalty_g,start_penalty_g,"
               "reserve_penalty_g,soc_nodes,alpha_nodes,alpha_max,timestep_s,"
               "config_hash\n";
        out << sanitize_field(art.label) << ',' << sanitize_field(r.cycle_name) << ','
            << num(r.distance_km) << ',' << num(r.duration_min) << ',' << num(r.fuel_g)
            << ',' << num(r.fuel_l_per_100km) << ',' << r.shift_count << ','
            << num(r.shifts_per_min) << ',' << r.start_count << ',' << num(r.starts_per_min)
            << ',' << num(r.avg_torque_reserve_pct) << ',' << num(r.total_cost_g) << ','
            << num(r.soc_initial) << ',' << num(r.soc_final) << ','
            << num(r.share_pure_electric) << ',' << num(r.share_pure_thermal) << ','
            << num(r.share_power_split) << ',' << num(r.share_battery_charging) << ','
            << num(r.share_regen) << ',' << num(r.share_standstill) << ','
            << num(view.pure_electric) << ',' << num(view.pure_thermal) << ','
            << num(view.power_split) << ',' << num(view.battery_charging) << ','
            << num(art.config.weights.shift_g) << ',' << num(art.config.weights.start_g)
            << ',' << num(art.config.weights.reserve_g) << ',' << art.config.soc_nodes
            << ',' << art.config.alpha_nodes << ',' << num(art.config.alpha_max) << ','
            << num(art.config.timestep_s) << ',' << art.hash << "\n";
    }

    {
        auto out = open_out((dir / "summary.txt").string());
        out << "strategy          " << art.label << "\n"
            << "config hash       " << art.hash << "\n"
            << "cycle             " << r.cycle_name << "\n"
            << "distance          " << fixed(r.distance_km, 2) << " km\n"
            << "duration          " << fixed(r.duration_min, 2) << " min\n"
            << "fuel              " << fixed(r.fuel_g, 1) << " g  ("
            << fixed(r.fuel_l_per_100km, 2) << " l/100km)\n"
            << "gear shifts       " << r.shift_count << "  (" << fixed(r.shifts_per_min, 2)
            << " per min)\n"
            << "engine starts     " << r.start_count << "  (" << fixed(r.starts_per_min, 2)
            << " per min)\n"
            << "torque reserve    " << fixed(r.avg_torque_reserve_pct, 1) << " %\n"
            << "total cost        " << fixed(r.total_cost_g, 2) << " g-eq\n"
            << "SOC               " << fixed(r.soc_initial, 4) << " -> "
            << fixed(r.soc_final, 4) << "\n"
            << "mode shares (" << (folded_shares ? "regen and standstill folded in" :
                                                   "driven time only")
            << ")\n"
            << "  pure electric   " << fixed(100.0 * view.pure_electric, 1) << " %\n"
            << "  pure thermal    " << fixed(100.0 * view.pure_thermal, 1) << " %\n"
            << "  power split     " << fixed(100.0 * view.power_split, 1) << " %\n"
            << "  battery charge  " << fixed(100.0 * view.battery_charging, 1) << " %\n";
    }

    {
        auto out = open_out((dir / "trajectory.csv").string());
        out << "# config " << art.hash << "\n";
        out << "k,time_s,speed_mps,accel_mps2,soc,gear_prev,engine_prev,alpha,gear,"
               "mode,demand_torque_Nm,input_speed_rad_s,engine_torque_Nm,em_torque_Nm,"
               "friction_brake_Nm,engine_on,fuel_rate_kg_s,battery_power_W,"
               "battery_current_A,soc_next,torque_utilization,fuel_g,shift_g,start_g,"
               "reserve_g,total_g\n";
        for (std::size_t k = 0; k < art.trajectory.steps.size(); ++k) {
            const TrajectoryStep& s = art.trajectory.steps[k];
            out << k << ',' << num(s.time_s) << ',' << num(s.speed_mps) << ','
                << num(s.accel_mps2) << ',' << num(s.state.soc) << ',' << s.state.gear_prev
                << ',' << (s.state.engine_prev ? 1 : 0) << ',' << num(s.control.alpha)
                << ',' << s.control.gear << ',' << mode_name(s.stage.mode) << ','
                << num(s.stage.demand_torque_Nm) << ',' << num(s.stage.input_speed_rad_s)
                << ',' << num(s.stage.engine_torque_Nm) << ',' << num(s.stage.em_torque_Nm)
                << ',' << num(s.stage.friction_brake_Nm) << ','
                << (s.stage.engine_on ? 1 : 0) << ',' << num(s.stage.fuel_rate_kg_s) << ','
                << num(s.stage.battery_power_W) << ',' << num(s.stage.battery_current_A)
                << ',' << num(s.stage.soc_next) << ',' << num(s.stage.torque_utilization)
                << ',' << num(s.cost.fuel_g) << ',' << num(s.cost.shift_g) << ','
                << num(s.cost.start_g) << ',' << num(s.cost.reserve_g) << ','
                << num(s.cost.total_g) << "\n";
        }
    }

    {
        auto out = open_out((dir / "soc_profile.csv").string());
        out << "# config " << art.hash << "\n";
        out << "time_s,soc\n";
        for (const TrajectoryStep& s : art.trajectory.steps)
            out << num(s.time_s) << ',' << num(s.state.soc) << "\n";
        out << num(art.trajectory.steps.size() * art.trajectory.timestep_s) << ','
            << num(art.trajectory.soc_final) << "\n";
    }

    {
        auto out = open_out((dir / "operating_points.csv").string());
        out << "# config " << art.hash << "\n";
        out << "time_s,engine_speed_rpm,engine_torque_Nm,fuel_rate_g_s,mode\n";
        for (const OperatingPoint& p : export_operating_points(art.trajectory))
            out << num(p.time_s) << ',' << num(p.engine_speed_rpm) << ','
                << num(p.engine_torque_Nm) << ',' << num(p.fuel_rate_g_s) << ','
                << mode_name(p.mode) << "\n";
    }

    {
        auto out = open_out((dir / "gear_pattern.csv").string());
        out << "# config " << art.hash << "\n";
        out << "time_s,speed_mps,engine_power_kW,gear\n";
        for (const GearPatternPoint& p : export_gear_pattern(art.trajectory))
            out << num(p.time_s) << ',' << num(p.speed_mps) << ','
                << num(p.engine_power_kW) << ',' << p.gear << "\n";
    }

    {
        const Grids& g = art.solution.grids;
        auto out = open_out((dir / "value_k0.csv").string());
        out << "# cost-to-go at k=0, config " << art.hash << "\n"
            << "# soc grid: " << g.soc_nodes() << " nodes in [" << num(g.soc.front())
            << ", " << num(g.soc.back()) << "]\n"
            << "# alpha grid: " << g.alpha.size() << " nodes in [0, "
            << num(g.alpha.back()) << "]\n"
            << "soc,gear,engine_on,value_g\n";
        for (int e = 0; e < 2; ++e)
            for (int gear = 1; gear <= g.gear_count; ++gear)
                for (int i = 0; i < g.soc_nodes(); ++i) {
                    const double v = art.solution.values[0][g.cell_index(i, gear, e != 0)];
                    out << num(g.soc[i]) << ',' << gear << ',' << e << ','
                        << (std::isfinite(v) ? num(v) : "inf") << "\n";
                }
    }

    {
        auto out = open_out((dir / "run_meta.txt").string());
        const std::time_t now = std::time(nullptr);
        char stamp[64];
        std::strftime(stamp, sizeof(stamp), "%Y-%m-%d %H:%M:%S", std::localtime(&now));
        const auto wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                                 std::chrono::steady_clock::now() - wall_start)
                                 .count();
        out << "written           " << stamp << "\n"
            << "output wall time  " << wall_ms << " ms\n"
            << "steps             " << art.trajectory.steps.size() << "\n";
    }

    return dir.string();
}

const std::vector<std::string>& sweep_axes() {
    static const std::vector<std::string> axes{"shift", "start", "reserve"};
    return axes;
}

std::vector<SweepRow> run_sweep(const RunConfig& base, const std::string& axis,
                                const std::vector<double>& values,
                                const std::string& out_root, const SolveOptions& options) {
    if (std::find(sweep_axes().begin(), sweep_axes().end(), axis) == sweep_axes().end())
        throw ConfigError("unknown sweep axis '" + axis + "' (want shift, start or reserve)");
    if (values.empty()) throw ConfigError("sweep: no weight values given");

    std::vector<SweepRow> rows;
    for (double value : values) {
        if (value < 0.0) throw ConfigError("sweep: weights must be non-negative");
        RunConfig config = base;
        if (axis == "shift") config.weights.shift_g = value;
        if (axis == "start") config.weights.start_g = value;
        if (axis == "reserve") config.weights.reserve_g = value;
        if (base.label.empty())
            config.label = axis + "-penalty-" + num(value);

        SweepRow row;
        row.weight_g = value;
        try {
            const RunArtifacts art = run_solve(config, options);
            row.feasible = true;
            row.report = art.report;
            if (!out_root.empty()) row.run_dir = write_run_outputs(art, out_root, false);
        } catch (const InfeasibleError&) {
            row.feasible = false;
        }
        rows.push_back(std::move(row));
    }

    if (!out_root.empty()) {
        std::filesystem::create_directories(out_root);
        auto out = open_out((std::filesystem::path(out_root) / "sweep.csv").string());
        out << "axis,weight_g,feasible,fuel_l_per_100km,shifts_per_min,starts_per_min,"
               "avg_torque_reserve_pct,fuel_g,total_cost_g,run_dir\n";
        for (const SweepRow& row : rows) {
            out << axis << ',' << num(row.weight_g) << ',' << (row.feasible ? 1 : 0) << ',';
            if (row.feasible) {
                out << num(row.report.fuel_l_per_100km) << ','
                    << num(row.report.shifts_per_min) << ','
                    << num(row.report.starts_per_min) << ','
                    << num(row.report.avg_torque_reserve_pct) << ','
                    << num(row.report.fuel_g) << ',' << num(row.report.total_cost_g);
            } else {
                out << ",,,,,";
            }
            out << ',' << row.run_dir << "\n";
        }
    }
    return rows;
}

std::string format_sweep_table(const std::string& axis, const std::vector<SweepRow>& rows) {
    std::ostringstream out;
    out << axis << "-penalty sweep\n";
    out << "  weight_g    fuel_l/100km  shifts/min  starts/min  reserve_%\n";
    for (const SweepRow& row : rows) {
        char line[160];
        if (row.feasible) {
            std::snprintf(line, sizeof(line), "  %-11.4g %-13.3f %-11.3f %-11.3f %-9.1f\n",
                          row.weight_g, row.report.fuel_l_per_100km,
                          row.report.shifts_per_min, row.report.starts_per_min,
                          row.report.avg_torque_reserve_pct);
        } else {
            std::snprintf(line, sizeof(line), "  %-11.4g infeasible\n", row.weight_g);
        }
        out << line;
    }
    return out.str();
}

ComparedRun read_run_report(const std::string& run_dir) {
    const std::string path = (std::filesystem::path(run_dir) / "report.csv").string();
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    std::string header, row;
    if (!std::getline(in, header) || !std::getline(in, row))
        throw ConfigError(path + ": expected a header and one data row");

    auto split = [](const std::string& line) {
        std::vector<std::string> out;
        std::string field;
        std::stringstream ss(line);
        while (std::getline(ss, field, ',')) out.push_back(field);
        return out;
    };
    const auto keys = split(header);
    const auto vals = split(row);
    if (keys.size() != vals.size())
        throw ConfigError(path + ": header and row disagree");
    auto get = [&](const std::string& key) -> const std::string& {
        for (std::size_t i = 0; i < keys.size(); ++i)
            if (keys[i] == key) return vals[i];
        throw ConfigError(path + ": missing column '" + key + "'");
    };

    ComparedRun r;
    r.run_dir = run_dir;
    r.label = get("label");
    r.cycle_name = get("cycle");
    r.soc_nodes = std::atoi(get("soc_nodes").c_str());
    r.alpha_nodes = std::atoi(get("alpha_nodes").c_str());
    r.alpha_max = std::atof(get("alpha_max").c_str());
    r.fuel_l_per_100km = std::atof(get("fuel_l_per_100km").c_str());
    r.shifts_per_min = std::atof(get("shifts_per_min").c_str());
    r.starts_per_min = std::atof(get("starts_per_min").c_str());
    r.avg_torque_reserve_pct = std::atof(get("avg_torque_reserve_pct").c_str());
    return r;
}

std::string format_compare_table(const std::vector<ComparedRun>& runs,
                                 bool allow_mixed_grids) {
    if (runs.empty()) throw ConfigError("compare: no runs");
    std::ostringstream out;

    bool mixed_cycles = false;
    for (const ComparedRun& r : runs) {
        if (r.cycle_name != runs.front().cycle_name) mixed_cycles = true;
        if (r.soc_nodes != runs.front().soc_nodes ||
            r.alpha_nodes != runs.front().alpha_nodes ||
            r.alpha_max != runs.front().alpha_max) {
            if (!allow_mixed_grids)
                throw ConfigError(
                    "compare: runs use different grids (" + runs.front().run_dir + " vs " +
                    r.run_dir + "); pass --allow-mixed-grids to override");
            out << "warning: comparing runs with different grids\n";
        }
    }
    if (mixed_cycles)
        out << "warning: comparing runs over different cycles; fuel deltas are not "
               "like for like\n";

    std::size_t name_width = 8;
    for (const ComparedRun& r : runs) name_width = std::max(name_width, r.label.size());

    out << "strategy";
    for (std::size_t i = 8; i < name_width; ++i) out << ' ';
    out << "  fuel_l_per_100km  shifts_per_min  starts_per_min  avg_torque_reserve_pct\n";
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const ComparedRun& r = runs[i];
        out << r.label;
        for (std::size_t j = r.label.size(); j < name_width; ++j) out << ' ';
        std::string fuel = fixed(r.fuel_l_per_100km, 2);
        if (i > 0) {
            const double base = runs.front().fuel_l_per_100km;
            const double delta = base > 0.0 ? (r.fuel_l_per_100km / base - 1.0) * 100.0 : 0.0;
            fuel += " (" + std::string(delta >= 0.0 ? "+" : "") + fixed(delta, 1) + "%)";
        }
        char line[160];
        std::snprintf(line, sizeof(line), "  %-16s  %-14.2f  %-14.2f  %-.1f\n",
                      fuel.c_str(), r.shifts_per_min, r.starts_per_min,
                      r.avg_torque_reserve_pct);
        out << line;
    }
    return out.str();
}

}  // namespace hevdp
