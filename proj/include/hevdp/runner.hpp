#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hevdp/config.hpp"
#include "hevdp/metrics.hpp"

namespace hevdp {

// One complete solve: config, optimal policy, rollout and headline metrics.
struct RunArtifacts {
    RunConfig config;
    std::string hash;
    std::string label;
    PowertrainModels models;
    Solution solution;
    Trajectory trajectory;
    StrategyReport report;
};

// Backward sweep, rollout, metrics. Throws InfeasibleError when the problem
// has no admissible solution or the rollout misses the terminal window.
RunArtifacts run_solve(const RunConfig& config, const SolveOptions& options = {});

// Write report.csv, summary.txt, trajectory.csv, soc_profile.csv,
// operating_points.csv, gear_pattern.csv, value_k0.csv, config_echo.cfg and
// run_meta.txt under <out_root>/<config hash>/. Only run_meta.txt carries
// timestamps; everything else is byte-stable for identical configs.
// Returns the run directory.
std::string write_run_outputs(const RunArtifacts& artifacts, const std::string& out_root,
                              bool folded_shares);

// Names of the weight axes a sweep can walk: "shift", "start", "reserve".
const std::vector<std::string>& sweep_axes();

struct SweepRow {
    double weight_g = 0.0;
    bool feasible = false;
    std::string run_dir;
    StrategyReport report;
};

// Solve the base config once per weight value. Infeasible runs are recorded,
// not fatal. When out_root is non-empty every run is written out and a
// sweep.csv lands in <out_root>.
std::vector<SweepRow> run_sweep(const RunConfig& base, const std::string& axis,
                                const std::vector<double>& values,
                                const std::string& out_root,
                                const SolveOptions& options = {});

std::string format_sweep_table(const std::string& axis, const std::vector<SweepRow>& rows);

// Headline metrics read back from a run directory's report.csv.
struct ComparedRun {
    std::string run_dir;
    std::string label;
    std::string cycle_name;
    int soc_nodes = 0;
    int alpha_nodes = 0;
    double alpha_max = 0.0;
    double fuel_l_per_100km = 0.0;
    double shifts_per_min = 0.0;
    double starts_per_min = 0.0;
    double avg_torque_reserve_pct = 0.0;
};

ComparedRun read_run_report(const std::string& run_dir);

// Side-by-side table of the four headline metrics with fuel deltas against
// the first run. Refuses mixed grids unless allow_mixed_grids; mixed cycles
// only earn a warning banner.
std::string format_compare_table(const std::vector<ComparedRun>& runs,
                                 bool allow_mixed_grids);

// Human-oriented label when the config does not set one: "fuel-optimal" for
// all-zero weights, the single active penalty's name, or "custom".
std::string derive_label(const PenaltyWeights& weights);

}  // namespace hevdp
