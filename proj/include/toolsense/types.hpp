#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace toolsense {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A caller broke a documented precondition.
struct ContractViolation : Error { using Error::Error; };
/// A CSV header does not match the frozen column schema.
struct SchemaError : Error { using Error::Error; };
/// A cell or file could not be parsed as the expected type.
struct ParseError : Error { using Error::Error; };
/// Parsed data violates a run invariant (ordering, spacing, finiteness).
struct DataError : Error { using Error::Error; };
/// A manifest violates its own invariants (duplicates, bad rates).
struct ManifestError : Error { using Error::Error; };
/// A checkpoint file is malformed or has the wrong version.
struct CheckpointError : Error { using Error::Error; };

/// Training diverged; carries the offending epoch and the last finite loss.
struct TrainingError : Error {
    TrainingError(const std::string& msg, int epoch_, double last_finite_loss_)
        : Error(msg), epoch(epoch_), last_finite_loss(last_finite_loss_) {}
    int epoch;
    double last_finite_loss;
};

// ---------------------------------------------------------------------------
// Channels, tasks, sources
// ---------------------------------------------------------------------------

/// The 11 sensor channels in frozen order. Ordinals 0..10 are stable;
/// feature layout and the run CSV schema both depend on them.
enum class ChannelId : int {
    accel_x = 0,
    accel_y,
    accel_z,
    gyro_x,
    gyro_y,
    gyro_z,
    mag_x,
    mag_y,
    mag_z,
    mic,
    current,
};

inline constexpr int kNumChannels = 11;

/// The four tool activities. Ordinals are the class indices of the model head.
enum class TaskLabel : int {
    cutting = 0,
    engraving = 1,
    routing = 2,
    sanding = 3,
};

inline constexpr int kNumTasks = 4;

enum class Source : int {
    human = 0,
    robot = 1,
};

const char* to_string(ChannelId c);
const char* to_string(TaskLabel t);
const char* to_string(Source s);

ChannelId parse_channel(const std::string& name);
TaskLabel parse_task(const std::string& name);
Source parse_source(const std::string& name);

// ---------------------------------------------------------------------------
// Feature layout
// ---------------------------------------------------------------------------

/// The ten per-channel statistics in frozen order.
enum class Stat : int {
    min = 0,
    max,
    mean,
    sum,
    variance,
    std_dev,
    sem,
    skewness,
    kurtosis,
    mad,
};

inline constexpr int kNumStats = 10;
inline constexpr int kNumFeatures = kNumChannels * kNumStats;  // 110

/// Channel-major feature layout: index = 10 * channel + stat.
/// Bijective over [0, 110). Throws ContractViolation for stat outside [0, 10).
int feature_index(ChannelId channel, int stat);
int feature_index(ChannelId channel, Stat stat);

// ---------------------------------------------------------------------------
// Samples, runs, windows
// ---------------------------------------------------------------------------

/// One timestamped reading of all 11 channels.
/// Units: accel m/s^2, gyro deg/s, mag uT, mic normalized [-1,1], current A.
struct SensorSample {
    double t = 0.0;  // seconds from run start
    std::array<double, kNumChannels> values{};

    double& operator[](ChannelId c) { return values[static_cast<int>(c)]; }
    double operator[](ChannelId c) const { return values[static_cast<int>(c)]; }
};

/// Identity of a run inside a dataset.
struct RunKey {
    std::string subject_id;
    Source source = Source::human;
    TaskLabel task = TaskLabel::cutting;
    int run_index = 0;

    auto operator<=>(const RunKey&) const = default;
    std::string to_string() const;
};

/// One recording: uniformly sampled 11-channel signal plus metadata.
struct SensorRun {
    std::vector<SensorSample> samples;
    double rate_hz = 0.0;
    std::string subject_id;
    Source source = Source::human;
    TaskLabel task = TaskLabel::cutting;
    int run_index = 0;

    RunKey key() const { return RunKey{subject_id, source, task, run_index}; }
    double duration_seconds() const {
        return samples.empty() ? 0.0 : static_cast<double>(samples.size()) / rate_hz;
    }
};

/// Checks the SensorRun invariants: non-empty, rate > 0, strictly increasing
/// timestamps with spacing 1/rate_hz within 1e-6 s, all values finite.
/// Throws DataError naming the first offending sample.
void validate_run(const SensorRun& run);

/// A half-open slice [start_index, end_index) of a parent run; the unit of
/// featurization and labeling.
struct Window {
    RunKey run;
    std::size_t start_index = 0;
    std::size_t end_index = 0;
    TaskLabel label = TaskLabel::cutting;
    std::string subject_id;
    Source source = Source::human;

    std::size_t length() const { return end_index - start_index; }
};

/// 110 ordered statistics, channel-major (see feature_index).
struct FeatureVector {
    std::array<double, kNumFeatures> values{};

    double& operator[](int i) { return values[static_cast<std::size_t>(i)]; }
    double operator[](int i) const { return values[static_cast<std::size_t>(i)]; }
};

// ---------------------------------------------------------------------------
// Splits
// ---------------------------------------------------------------------------

enum class SplitMode : int {
    in_distribution = 0,
    out_of_distribution = 1,
};

/// Disjoint run sets for train/validation/test. In OoD mode the held-out
/// subject appears in no train or val entry.
struct SplitSpec {
    std::set<RunKey> train_runs;
    std::set<RunKey> val_runs;
    std::set<RunKey> test_runs;
    SplitMode mode = SplitMode::in_distribution;
    std::string held_out_subject;  // only meaningful in OoD mode
};

/// Checks pairwise disjointness and the OoD exclusion invariant.
void validate_split(const SplitSpec& split);

// ---------------------------------------------------------------------------
// Run lookup
// ---------------------------------------------------------------------------

/// Resolves a Window's run_ref against a loaded dataset.
class RunLookup {
  public:
    explicit RunLookup(std::span<const SensorRun> runs);
    const SensorRun& at(const RunKey& key) const;  // throws DataError if absent

  private:
    std::span<const SensorRun> runs_;
    std::map<RunKey, std::size_t> index_;
};

}  // namespace toolsense
