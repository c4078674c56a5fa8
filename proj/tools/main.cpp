#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hevdp/errors.hpp"
#include "hevdp/runner.hpp"

namespace {

struct CommonOpts {
    std::string config_path;
    std::vector<std::string> cycles;
    double timestep = 0.0;
    int soc_nodes = 0;
    int alpha_nodes = 0;
    double alpha_max = 0.0;
    double soc_initial = 0.0;
    std::string terminal;
    double shift_penalty = 0.0;
    double start_penalty = 0.0;
    double reserve_penalty = 0.0;
    std::string label;
    int threads = 0;
};

void add_common(CLI::App* sub, CommonOpts& o) {
    sub->add_option("--config", o.config_path, "run config file")->check(CLI::ExistingFile);
    sub->add_option("--cycle", o.cycles,
                    "cycle source, synth:<preset> or a CSV path; repeat to chain");
    sub->add_option("--timestep", o.timestep, "sample period in seconds");
    sub->add_option("--soc-nodes", o.soc_nodes, "SOC grid node count");
    sub->add_option("--alpha-nodes", o.alpha_nodes, "torque split grid node count");
    sub->add_option("--alpha-max", o.alpha_max, "upper torque split bound");
    sub->add_option("--soc-initial", o.soc_initial, "initial state of charge");
    sub->add_option("--terminal", o.terminal,
                    "terminal constraint: free, initial, or a SOC target");
    sub->add_option("--shift-penalty", o.shift_penalty, "grams per gear shift");
    sub->add_option("--start-penalty", o.start_penalty, "grams per engine start");
    sub->add_option("--reserve-penalty", o.reserve_penalty,
                    "grams per stage at full torque utilization");
    sub->add_option("--label", o.label, "strategy label used in reports");
    sub->add_option("--threads", o.threads, "worker threads for the backward sweep");
}

hevdp::RunConfig build_config(const CLI::App* sub, const CommonOpts& o) {
    hevdp::RunConfig cfg;
    if (!o.config_path.empty()) cfg = hevdp::load_run_config(o.config_path);
    if (sub->count("--cycle")) cfg.cycles = o.cycles;
    if (sub->count("--timestep")) cfg.timestep_s = o.timestep;
    if (sub->count("--soc-nodes")) cfg.soc_nodes = o.soc_nodes;
    if (sub->count("--alpha-nodes")) cfg.alpha_nodes = o.alpha_nodes;
    if (sub->count("--alpha-max")) cfg.alpha_max = o.alpha_max;
    if (sub->count("--soc-initial")) cfg.soc_initial = o.soc_initial;
    if (sub->count("--terminal")) cfg.terminal = o.terminal;
    if (sub->count("--shift-penalty")) cfg.weights.shift_g = o.shift_penalty;
    if (sub->count("--start-penalty")) cfg.weights.start_g = o.start_penalty;
    if (sub->count("--reserve-penalty")) cfg.weights.reserve_g = o.reserve_penalty;
    if (sub->count("--label")) cfg.label = o.label;
    if (sub->count("--threads")) cfg.threads = o.threads;
    // Round-trip through the parser so overrides face the same validation as
    // file input.
    return hevdp::parse_run_config(hevdp::serialize(cfg), "<command line>");
}

int cmd_solve(const hevdp::RunConfig& cfg, const std::string& out_root, bool folded) {
    const hevdp::RunArtifacts art = hevdp::run_solve(cfg);
    const std::string dir = hevdp::write_run_outputs(art, out_root, folded);
    std::ifstream summary(dir + "/summary.txt");
    std::cout << summary.rdbuf();
    std::cout << "outputs           " << dir << "\n";
    return 0;
}

int cmd_sweep(const hevdp::RunConfig& cfg, const std::string& axis,
              const std::vector<double>& values, const std::string& out_root) {
    const std::string sweep_root = out_root + "/sweep-" + axis;
    const std::vector<hevdp::SweepRow> rows =
        hevdp::run_sweep(cfg, axis, values, sweep_root);
    std::cout << hevdp::format_sweep_table(axis, rows);
    std::cout << "outputs: " << sweep_root << "\n";
    return 0;
}

int cmd_compare(const std::vector<std::string>& run_dirs, bool allow_mixed_grids) {
    std::vector<hevdp::ComparedRun> runs;
    runs.reserve(run_dirs.size());
    for (const std::string& dir : run_dirs) runs.push_back(hevdp::read_run_report(dir));
    std::cout << hevdp::format_compare_table(runs, allow_mixed_grids);
    return 0;
}

int cmd_cycle_synth(bool list, const std::string& preset, double timestep,
                    const std::string& out_csv) {
    if (list) {
        for (const std::string& name : hevdp::cycle_preset_names())
            std::cout << name << "\n";
        return 0;
    }
    if (preset.empty())
        throw hevdp::ConfigError("cycle synth: name a preset with --preset or use --list");
    const hevdp::DriveCycle cycle = hevdp::cycle_preset(preset, timestep);
    char line[160];
    std::snprintf(line, sizeof(line),
                  "%s: %zu samples at %.3g s, %.1f s, %.2f km, top speed %.1f m/s\n",
                  cycle.name.c_str(), cycle.size(), cycle.timestep_s, cycle.duration_s(),
                  cycle.distance_m() / 1000.0,
                  *std::max_element(cycle.speed_mps.begin(), cycle.speed_mps.end()));
    std::cout << line;
    if (!out_csv.empty()) {
        std::ofstream out(out_csv, std::ios::binary | std::ios::trunc);
        if (!out) throw hevdp::ConfigError("cannot write '" + out_csv + "'");
        out << "time_s,speed_mps\n";
        for (std::size_t k = 0; k < cycle.size(); ++k) {
            std::snprintf(line, sizeof(line), "%.17g,%.17g\n", k * cycle.timestep_s,
                          cycle.speed_mps[k]);
            out << line;
        }
        std::cout << "wrote " << out_csv << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fuel-optimal energy management for a parallel hybrid, solved by "
                 "finite-horizon dynamic programming"};
    app.require_subcommand(1);

    CommonOpts solve_opts;
    std::string solve_out = "runs";
    bool folded = false;
    CLI::App* solve = app.add_subcommand("solve", "solve one configuration");
    add_common(solve, solve_opts);
    solve->add_option("--out", solve_out, "output root; run lands in <out>/<config hash>");
    solve->add_flag("--folded-shares", folded,
                    "fold regen and standstill into the pure-electric mode share");

    CommonOpts sweep_opts;
    std::string sweep_axis;
    std::vector<double> sweep_values;
    std::string sweep_out = "runs";
    CLI::App* sweep = app.add_subcommand("sweep", "solve across one penalty weight");
    add_common(sweep, sweep_opts);
    sweep->add_option("--axis", sweep_axis, "penalty to sweep: shift, start or reserve")
        ->required()
        ->check(CLI::IsMember(hevdp::sweep_axes()));
    sweep->add_option("--values", sweep_values, "weight values in grams")
        ->required()
        ->expected(-1);
    sweep->add_option("--out", sweep_out, "output root; runs land in <out>/sweep-<axis>");

    std::vector<std::string> compare_dirs;
    bool allow_mixed_grids = false;
    CLI::App* compare = app.add_subcommand("compare", "tabulate finished runs side by side");
    compare->add_option("runs", compare_dirs, "two or more run directories holding report.csv")
        ->required()
        ->expected(-2);
    compare->add_flag("--allow-mixed-grids", allow_mixed_grids,
                      "compare runs even when their grids differ");

    bool cycle_list = false;
    std::string cycle_preset_name, cycle_out;
    double cycle_timestep = 1.0;
    CLI::App* cycle = app.add_subcommand("cycle", "drive cycle utilities");
    cycle->require_subcommand(1);
    CLI::App* synth = cycle->add_subcommand("synth", "sample a built-in synthetic profile");
    synth->add_flag("--list", cycle_list, "list built-in presets");
    synth->add_option("--preset", cycle_preset_name, "built-in preset name");
    synth->add_option("--timestep", cycle_timestep, "sample period in seconds");
    synth->add_option("--out", cycle_out, "write the sampled cycle to this CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (solve->parsed()) return cmd_solve(build_config(solve, solve_opts), solve_out, folded);
        if (sweep->parsed())
            return cmd_sweep(build_config(sweep, sweep_opts), sweep_axis, sweep_values,
                             sweep_out);
        if (compare->parsed()) return cmd_compare(compare_dirs, allow_mixed_grids);
        if (cycle->parsed())
            return cmd_cycle_synth(cycle_list, cycle_preset_name, cycle_timestep, cycle_out);
    } catch (const hevdp::InfeasibleError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const hevdp::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
