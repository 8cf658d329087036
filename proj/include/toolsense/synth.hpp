#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "toolsense/ingest.hpp"
#include "toolsense/types.hpp"

namespace toolsense {

// ---------------------------------------------------------------------------
// Motion profile
// ---------------------------------------------------------------------------

/// Ramp-up / cruise / ramp-down velocity profile for one tool pass.
/// Degenerates to triangular when the cruise phase vanishes
/// (distance < v_max^2 / accel).
struct MotionProfile {
    double distance = 0.0;  // m
    double v_max = 1.0;     // m/s
    double accel = 1.0;     // m/s^2
};

double profile_duration(const MotionProfile& p);
double profile_peak_velocity(const MotionProfile& p);

/// v(t) for t in [0, T]; throws ContractViolation outside.
double trapezoid_velocity(const MotionProfile& p, double t);
/// dv/dt with ramp-up/cruise/ramp-down boundaries half-open on the right.
double trapezoid_acceleration(const MotionProfile& p, double t);
/// Integral of v over [0, t]; p(T) = distance.
double trapezoid_position(const MotionProfile& p, double t);

// ---------------------------------------------------------------------------
// Task templates and stochasticity
// ---------------------------------------------------------------------------

/// Per-task coupling coefficients of the additive signal model.
struct TaskTemplate {
    TaskLabel task = TaskLabel::cutting;
    double pass_period = 5.0;  // s between pass starts; >= profile duration
    double rpm = 20000.0;      // tool speed, within [5000, 35000]
    double load_level = 0.5;   // dimensionless [0, 1]
    std::vector<double> depth_schedule;  // per-pass depth, normalized (0, ~1]
    double vibration_gain = 1.5;     // m/s^2 at full load
    double mic_gain = 0.4;           // normalized amplitude at full load
    double current_idle = 0.5;       // A
    double current_load_gain = 2.0;  // A at full load
    MotionProfile pass_profile;
};

inline constexpr double kRpmMin = 5000.0;
inline constexpr double kRpmMax = 35000.0;

void validate_template(const TaskTemplate& t);
TaskTemplate default_template(TaskLabel task);

/// Run-level randomness. Robot presets have strictly smaller timing jitter
/// and trajectory drift than human presets.
struct StochasticityConfig {
    Source mode = Source::robot;
    double jitter_std = 0.0;       // relative timing jitter per pass
    double drift_std = 0.0;        // trajectory wander (rad-scale per sqrt(s))
    double pause_prob = 0.0;       // probability of an extra dwell after a pass
    double compliance_gain = 0.0;  // vibration transmission wobble
    std::uint64_t seed = 0;
};

StochasticityConfig robot_stochasticity(std::uint64_t seed);
StochasticityConfig human_stochasticity(std::uint64_t seed);

// ---------------------------------------------------------------------------
// Generation
// ---------------------------------------------------------------------------

/// Synthesizes one run. Deterministic given the config seed: two calls with
/// identical arguments produce bit-identical samples.
SensorRun generate_run(const TaskTemplate& tmpl, const StochasticityConfig& stoch,
                       double duration_s = 180.0, double rate_hz = 100.0,
                       const std::string& subject_id = "synth", int run_index = 0);

struct SubjectSpec {
    std::string subject_id;
    Source source = Source::human;
    int runs_per_task = 0;
};

struct DatasetSpec {
    std::vector<SubjectSpec> subjects;
    double duration_s = 180.0;
    double rate_hz = 100.0;
    /// Relative template perturbation fixed per (human subject, task);
    /// models per-person style and environment.
    double subject_spread = 0.25;
    /// Per-run parameter span for robot runs; the programmed schedule sweeps
    /// the range observed across human operators.
    double run_spread_robot = 0.16;
    /// Small per-run variation for humans on top of the subject offset.
    double run_spread_human = 0.03;
};

struct GeneratedDataset {
    std::vector<SensorRun> runs;
    Manifest manifest;  // paths filled with the canonical runs/<...>.csv layout
};

/// Manifest entries (canonical runs/<subject>_<source>_<task>_<i>.csv paths)
/// for the spec, without generating any sample.
Manifest dataset_manifest(const DatasetSpec& spec);

/// One run of the dataset. Pure function of (spec, seed, subject, task,
/// run_index); generation order cannot matter.
SensorRun generate_dataset_run(const DatasetSpec& spec, std::uint64_t seed,
                               const SubjectSpec& subject, TaskLabel task, int run_index);

/// Generates all runs of the spec in manifest order.
GeneratedDataset generate_dataset(const DatasetSpec& spec, std::uint64_t seed);

}  // namespace toolsense
