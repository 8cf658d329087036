#include "toolsense/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "toolsense/rng.hpp"

namespace toolsense {

namespace {

constexpr double kGravity = 9.81;          // m/s^2 on accel_z
constexpr double kRadToDeg = 57.29577951308232;
constexpr double kMagFieldX = 22.0;        // uT, local field in tool frame
constexpr double kMagFieldY = 31.0;
constexpr double kMagFieldZ = 42.0;

struct Pass {
    double start = 0.0;    // s
    double stretch = 1.0;  // per-pass time scale
    double depth = 1.0;    // normalized working depth
};

/// Mean-reverting random walk; stands in for slow trajectory wander.
struct OuProcess {
    double value = 0.0;
    double tau = 4.0;  // s

    double step(double dt, double sigma, Rng& rng) {
        value += -value * (dt / tau) + sigma * std::sqrt(dt) * rng.normal();
        return value;
    }
};

}  // namespace

double profile_duration(const MotionProfile& p) {
    if (!(p.v_max > 0.0) || !(p.accel > 0.0) || p.distance < 0.0) {
        throw ContractViolation("motion profile: v_max and accel must be positive, distance >= 0");
    }
    if (p.distance == 0.0) return 0.0;
    const double ramp_distance = p.v_max * p.v_max / p.accel;  // both ramps together
    if (p.distance >= ramp_distance) {
        return 2.0 * p.v_max / p.accel + (p.distance - ramp_distance) / p.v_max;
    }
    return 2.0 * std::sqrt(p.distance / p.accel);
}

double profile_peak_velocity(const MotionProfile& p) {
    if (p.distance == 0.0) return 0.0;
    const double ramp_distance = p.v_max * p.v_max / p.accel;
    if (p.distance >= ramp_distance) return p.v_max;
    return std::sqrt(p.distance * p.accel);
}

double trapezoid_velocity(const MotionProfile& p, double t) {
    const double total = profile_duration(p);
    if (t < 0.0 || t > total) {
        throw ContractViolation("trapezoid_velocity: t outside [0, T]");
    }
    if (p.distance == 0.0) return 0.0;
    const double peak = profile_peak_velocity(p);
    const double ramp = peak / p.accel;
    if (t < ramp) return p.accel * t;
    if (t <= total - ramp) return peak;
    return p.accel * (total - t);
}

double trapezoid_acceleration(const MotionProfile& p, double t) {
    const double total = profile_duration(p);
    if (t < 0.0 || t > total) {
        throw ContractViolation("trapezoid_acceleration: t outside [0, T]");
    }
    if (p.distance == 0.0) return 0.0;
    const double ramp = profile_peak_velocity(p) / p.accel;
    if (t < ramp) return p.accel;
    if (t < total - ramp) return 0.0;
    return -p.accel;
}

double trapezoid_position(const MotionProfile& p, double t) {
    const double total = profile_duration(p);
    if (t < 0.0 || t > total) {
        throw ContractViolation("trapezoid_position: t outside [0, T]");
    }
    if (p.distance == 0.0) return 0.0;
    const double peak = profile_peak_velocity(p);
    const double ramp = peak / p.accel;
    if (t < ramp) return 0.5 * p.accel * t * t;
    if (t <= total - ramp) {
        return 0.5 * peak * ramp + peak * (t - ramp);
    }
    const double remaining = total - t;
    return p.distance - 0.5 * p.accel * remaining * remaining;
}

void validate_template(const TaskTemplate& t) {
    if (!(t.rpm >= kRpmMin && t.rpm <= kRpmMax)) {
        throw ContractViolation("template: rpm " + std::to_string(t.rpm) + " outside [" +
                                std::to_string(kRpmMin) + ", " + std::to_string(kRpmMax) + "]");
    }
    if (!(t.pass_period > 0.0)) {
        throw ContractViolation("template: pass_period must be positive");
    }
    if (profile_duration(t.pass_profile) > t.pass_period) {
        throw ContractViolation("template: pass profile longer than pass_period");
    }
    if (t.depth_schedule.empty()) {
        throw ContractViolation("template: depth_schedule must be non-empty");
    }
    if (!(t.load_level >= 0.0 && t.load_level <= 1.0)) {
        throw ContractViolation("template: load_level outside [0, 1]");
    }
}

TaskTemplate default_template(TaskLabel task) {
    TaskTemplate t;
    t.task = task;
    // The four templates are deliberately close together: classes have to
    // overlap under operator variation or the downstream experiments are
    // trivial at any training-set size.
    switch (task) {
        case TaskLabel::cutting:
            // Slicing discs off a dowel: short slow feed, heavy engagement.
            t.pass_period = 6.0;
            t.rpm = 25500.0;
            t.load_level = 0.66;
            t.depth_schedule = {1.0, 0.8, 0.95, 0.7, 0.9, 1.1};
            t.vibration_gain = 1.72;
            t.mic_gain = 0.44;
            t.current_idle = 0.56;
            t.current_load_gain = 1.62;
            t.pass_profile = {0.02, 0.006, 0.01};
            break;
        case TaskLabel::engraving:
            // Digit strokes: quick light passes at high rpm.
            t.pass_period = 2.8;
            t.rpm = 28600.0;
            t.load_level = 0.44;
            t.depth_schedule = {0.5, 0.62, 0.42, 0.58, 0.48};
            t.vibration_gain = 1.32;
            t.mic_gain = 0.33;
            t.current_idle = 0.52;
            t.current_load_gain = 1.28;
            t.pass_profile = {0.03, 0.02, 0.08};
            break;
        case TaskLabel::routing:
            // Grooves across the board width at moderate feed.
            t.pass_period = 5.2;
            t.rpm = 21800.0;
            t.load_level = 0.58;
            t.depth_schedule = {0.75, 0.95, 1.05, 0.85, 0.7};
            t.vibration_gain = 1.55;
            t.mic_gain = 0.38;
            t.current_idle = 0.55;
            t.current_load_gain = 1.45;
            t.pass_profile = {0.089, 0.03, 0.05};
            break;
        case TaskLabel::sanding:
            // Long chamfer strokes, low rpm drum.
            t.pass_period = 3.6;
            t.rpm = 15400.0;
            t.load_level = 0.52;
            t.depth_schedule = {0.65, 0.8, 0.72, 0.6};
            t.vibration_gain = 1.42;
            t.mic_gain = 0.40;
            t.current_idle = 0.53;
            t.current_load_gain = 1.36;
            t.pass_profile = {0.30, 0.12, 0.30};
            break;
    }
    return t;
}

StochasticityConfig robot_stochasticity(std::uint64_t seed) {
    return StochasticityConfig{Source::robot, 0.002, 0.030, 0.0, 0.35, seed};
}

StochasticityConfig human_stochasticity(std::uint64_t seed) {
    return StochasticityConfig{Source::human, 0.06, 0.05, 0.08, 0.5, seed};
}

SensorRun generate_run(const TaskTemplate& tmpl, const StochasticityConfig& stoch,
                       double duration_s, double rate_hz, const std::string& subject_id,
                       int run_index) {
    validate_template(tmpl);
    if (!(duration_s > 0.0) || !(rate_hz > 0.0)) {
        throw ContractViolation("generate_run: duration and rate must be positive");
    }

    Rng rng(stoch.seed);
    const double dt = 1.0 / rate_hz;
    const auto sample_count = static_cast<std::size_t>(std::llround(duration_s * rate_hz));
    const double profile_total = profile_duration(tmpl.pass_profile);
    const double peak_velocity = profile_peak_velocity(tmpl.pass_profile);

    // Pass schedule. Human mode stretches timing, perturbs per-pass depth and
    // occasionally dwells between passes.
    std::vector<Pass> passes;
    {
        double t = 0.0;
        std::size_t k = 0;
        while (t < duration_s) {
            Pass pass;
            pass.start = t;
            pass.stretch = std::clamp(1.0 + rng.normal(0.0, stoch.jitter_std), 0.5, 1.8);
            const double base_depth = tmpl.depth_schedule[k % tmpl.depth_schedule.size()];
            pass.depth =
                std::clamp(base_depth * (1.0 + rng.normal(0.0, 1.2 * stoch.drift_std)), 0.1, 1.5);
            passes.push_back(pass);
            double period = tmpl.pass_period * pass.stretch;
            if (stoch.pause_prob > 0.0 && rng.uniform01() < stoch.pause_prob) {
                period += rng.uniform(2.0, 5.0);
            }
            t += period;
            ++k;
        }
    }

    OuProcess heading{0.0, 4.0};
    OuProcess tilt_x{0.0, 4.0};
    OuProcess tilt_y{0.0, 4.0};
    OuProcess wobble{0.0, 0.5};

    const double tool_hz = tmpl.rpm / 60.0;
    const double phase_step = 2.0 * std::numbers::pi * tool_hz * dt;
    double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);

    SensorRun run;
    run.rate_hz = rate_hz;
    run.subject_id = subject_id;
    run.source = stoch.mode;
    run.task = tmpl.task;
    run.run_index = run_index;
    run.samples.resize(sample_count);

    std::size_t pass_idx = 0;
    for (std::size_t i = 0; i < sample_count; ++i) {
        const double t = static_cast<double>(i) / rate_hz;
        while (pass_idx + 1 < passes.size() && t >= passes[pass_idx + 1].start) ++pass_idx;
        const Pass& pass = passes[pass_idx];

        const double local = (t - pass.start) / pass.stretch;
        double v_frac = 0.0;
        double pass_accel = 0.0;
        if (local >= 0.0 && local <= profile_total && peak_velocity > 0.0) {
            v_frac = trapezoid_velocity(tmpl.pass_profile, local) / peak_velocity;
            pass_accel = trapezoid_acceleration(tmpl.pass_profile, local);
        }
        const double load = tmpl.load_level * pass.depth * v_frac;

        heading.step(dt, stoch.drift_std, rng);
        tilt_x.step(dt, stoch.drift_std, rng);
        tilt_y.step(dt, stoch.drift_std, rng);
        wobble.step(dt, 1.0, rng);

        // Spindle phase with slight diffusion: the carrier decoheres over a
        // few hundred samples like a real variable-speed motor.
        phase += phase_step + rng.normal(0.0, 0.25);
        const double vib =
            tmpl.vibration_gain * (0.25 + 0.75 * load) * (1.0 + stoch.compliance_gain * wobble.value);

        SensorSample& s = run.samples[i];
        s.t = t;
        s[ChannelId::accel_x] =
            pass_accel + 0.8 * load + vib * std::sin(phase) + 0.08 * rng.normal();
        s[ChannelId::accel_y] = 0.3 * pass_accel + 0.5 * load +
                                0.7 * vib * std::sin(phase + 2.1) + 0.08 * rng.normal();
        s[ChannelId::accel_z] = kGravity - 0.9 * load + 0.5 * vib * std::sin(phase + 4.2) +
                                0.08 * rng.normal();
        // Gyro reads the slow wander itself (arm rotation drifting on and off
        // the work line), so its window means spread with drift while the
        // fast content stays at a shared scale across modes.
        s[ChannelId::gyro_x] =
            15.0 * tilt_x.value + 0.6 * vib * std::sin(phase + 1.3) + 1.2 * rng.normal();
        s[ChannelId::gyro_y] =
            15.0 * tilt_y.value + 0.6 * vib * std::sin(phase + 3.4) + 1.2 * rng.normal();
        s[ChannelId::gyro_z] =
            15.0 * heading.value + 0.6 * vib * std::sin(phase + 5.5) + 1.2 * rng.normal();
        s[ChannelId::mag_x] = kMagFieldX * std::cos(heading.value) -
                              kMagFieldY * std::sin(heading.value) + 0.35 * rng.normal();
        s[ChannelId::mag_y] = kMagFieldX * std::sin(heading.value) +
                              kMagFieldY * std::cos(heading.value) + 0.35 * rng.normal();
        s[ChannelId::mag_z] = kMagFieldZ + 12.0 * tilt_x.value + 0.35 * rng.normal();
        // The 0.35 term is the rectified acoustic energy envelope: it gives
        // the microphone a load-tracking mean on top of the carrier.
        s[ChannelId::mic] = std::clamp(
            tmpl.mic_gain * load * (std::sin(phase + 0.7) + 0.35) + 0.02 * rng.normal(), -1.0, 1.0);
        s[ChannelId::current] =
            tmpl.current_idle + tmpl.current_load_gain * load + 0.04 * rng.normal();
    }

    validate_run(run);
    return run;
}

namespace {

double perturb(Rng& rng, double value, double rel) {
    return value * (1.0 + rng.uniform(-rel, rel));
}

TaskTemplate perturb_template(const TaskTemplate& base, double rel, Rng& rng) {
    TaskTemplate t = base;
    t.pass_period = perturb(rng, base.pass_period, 0.8 * rel);
    t.rpm = std::clamp(perturb(rng, base.rpm, 0.3 * rel), kRpmMin, kRpmMax);
    t.load_level = std::clamp(perturb(rng, base.load_level, 1.5 * rel), 0.05, 1.0);
    t.vibration_gain = perturb(rng, base.vibration_gain, 0.6 * rel);
    t.mic_gain = perturb(rng, base.mic_gain, 0.6 * rel);
    t.current_idle = perturb(rng, base.current_idle, 0.3 * rel);
    t.current_load_gain = perturb(rng, base.current_load_gain, 0.5 * rel);
    const double depth_scale = 1.0 + rng.uniform(-rel, rel);
    for (double& d : t.depth_schedule) d = std::clamp(d * depth_scale, 0.1, 1.5);
    t.pass_profile.v_max = perturb(rng, base.pass_profile.v_max, rel);
    t.pass_profile.distance = perturb(rng, base.pass_profile.distance, rel);
    // Slow draws can stretch the pass past the nominal period; keep a dwell.
    t.pass_period = std::max(t.pass_period, 1.05 * profile_duration(t.pass_profile));
    return t;
}

}  // namespace

Manifest dataset_manifest(const DatasetSpec& spec) {
    Manifest manifest;
    for (const SubjectSpec& subject : spec.subjects) {
        if (subject.runs_per_task < 0) {
            throw ContractViolation("generate_dataset: runs_per_task must be >= 0");
        }
        for (int task_ord = 0; task_ord < kNumTasks; ++task_ord) {
            const auto task = static_cast<TaskLabel>(task_ord);
            for (int run_idx = 0; run_idx < subject.runs_per_task; ++run_idx) {
                ManifestEntry entry;
                entry.path = "runs/" + subject.subject_id + "_" +
                             std::string(to_string(subject.source)) + "_" +
                             std::string(to_string(task)) + "_" + std::to_string(run_idx) + ".csv";
                entry.subject_id = subject.subject_id;
                entry.source = subject.source;
                entry.task = task;
                entry.run_index = run_idx;
                entry.rate_hz = spec.rate_hz;
                manifest.entries.push_back(std::move(entry));
            }
        }
    }
    return manifest;
}

SensorRun generate_dataset_run(const DatasetSpec& spec, std::uint64_t seed,
                               const SubjectSpec& subject, TaskLabel task, int run_index) {
    const auto task_ord = static_cast<std::uint64_t>(static_cast<int>(task));
    const std::uint64_t subject_seed = Rng::mix(seed, Rng::hash_string(subject.subject_id));
    const TaskTemplate base = default_template(task);

    // A human subject keeps one personal parameter offset per task; robot
    // runs redraw parameters every run so the programmed schedule sweeps the
    // same range a group of operators would cover.
    Rng subject_rng(Rng::mix(subject_seed, task_ord));
    const TaskTemplate subject_template =
        subject.source == Source::human ? perturb_template(base, spec.subject_spread, subject_rng)
                                        : base;

    const std::uint64_t run_seed =
        Rng::mix(Rng::mix(subject_seed, task_ord * 2 + static_cast<std::uint64_t>(subject.source)),
                 static_cast<std::uint64_t>(run_index));
    Rng run_rng(run_seed);
    const TaskTemplate run_template =
        subject.source == Source::human
            ? perturb_template(subject_template, spec.run_spread_human, run_rng)
            : perturb_template(base, spec.run_spread_robot, run_rng);
    const StochasticityConfig stoch = subject.source == Source::human
                                          ? human_stochasticity(run_rng.next_u64())
                                          : robot_stochasticity(run_rng.next_u64());
    return generate_run(run_template, stoch, spec.duration_s, spec.rate_hz, subject.subject_id,
                        run_index);
}

GeneratedDataset generate_dataset(const DatasetSpec& spec, std::uint64_t seed) {
    GeneratedDataset out;
    out.manifest = dataset_manifest(spec);
    for (const SubjectSpec& subject : spec.subjects) {
        for (int task_ord = 0; task_ord < kNumTasks; ++task_ord) {
            for (int run_idx = 0; run_idx < subject.runs_per_task; ++run_idx) {
                out.runs.push_back(generate_dataset_run(spec, seed, subject,
                                                        static_cast<TaskLabel>(task_ord), run_idx));
            }
        }
    }
    return out;
}

}  // namespace toolsense
