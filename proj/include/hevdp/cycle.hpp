#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace hevdp {

// Speed profile on a uniform time grid. Sample k covers [k*dt, (k+1)*dt), so
// a cycle of N samples describes N*dt seconds of driving. Acceleration is the
// forward difference of speed; the last sample has zero acceleration.
struct DriveCycle {
    std::string name;
    double timestep_s = 1.0;
    std::vector<double> speed_mps;
    std::vector<double> accel_mps2;

    std::size_t size() const { return speed_mps.size(); }
    double duration_s() const { return static_cast<double>(size()) * timestep_s; }
    double distance_m() const;

    // Throws ConfigError if any structural invariant is broken (mismatched
    // array lengths, negative speed, non-positive timestep, stale accel).
    void validate() const;
};

// Rebuild accel_mps2 from speed_mps by forward difference.
void recompute_accel(DriveCycle& cycle);

// Read a "time_s,speed_mps" CSV and resample it onto a uniform grid.
// Rows must have strictly increasing time and non-negative speed; parse and
// validation errors carry the offending line number. Emits a warning on
// stderr when the profile does not start and end at rest.
DriveCycle load_cycle(const std::string& path, double timestep_s);

// Linear-interpolation resample. A cycle already on the target grid is
// returned unchanged.
DriveCycle resample(const DriveCycle& cycle, double timestep_s);

// Concatenate cycles back to back. All parts must share one timestep;
// acceleration is recomputed across the seams.
DriveCycle compose(const std::vector<DriveCycle>& cycles);

// One leg of a trapezoidal profile: ramp linearly from the current speed to
// target_mps over ramp_s, then hold for hold_s.
struct SpeedSegment {
    double target_mps = 0.0;
    double ramp_s = 1.0;
    double hold_s = 0.0;
};

// Build a trapezoidal cycle through the segments, starting at rest and
// ramping back to rest at the end (reusing the last segment's ramp time).
// An empty segment list yields a single sample at v = 0.
DriveCycle synth_cycle(const std::vector<SpeedSegment>& segments, double timestep_s,
                       const std::string& name = "synthetic");

// Bundled synthetic profiles ("urban", "rural", "motorway" and their
// "-short" variants). Throws ConfigError for unknown names.
const std::vector<std::string>& cycle_preset_names();
DriveCycle cycle_preset(const std::string& name, double timestep_s);

}  // namespace hevdp
