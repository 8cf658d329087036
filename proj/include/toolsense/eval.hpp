#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "toolsense/features.hpp"
#include "toolsense/model.hpp"
#include "toolsense/types.hpp"

namespace toolsense {

// ---------------------------------------------------------------------------
// Splits
// ---------------------------------------------------------------------------

/// Assigns runs to train/val/test by run_index per (subject, task):
/// with r runs sorted by index, val and test each take floor(r/3), train
/// takes the remainder (so 9 runs give the 3/3/3 protocol and 4 runs give
/// 2/1/1). In OoD mode every run of the held-out subject goes to test and
/// that subject never appears in train or val.
SplitSpec build_splits(std::span<const RunKey> runs, SplitMode mode,
                       const std::string& held_out_subject = {});

/// Rows of `table` whose run is in `runs`, as labeled training examples.
std::vector<Example> gather_examples(const FeatureTable& table, const std::set<RunKey>& runs);

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

enum class Regime : int {
    zero_shot = 0,
    fine_tuned = 1,
};

const char* to_string(Regime r);

struct EvalReport {
    double accuracy = 0.0;
    std::array<std::array<std::int64_t, kNumTasks>, kNumTasks> confusion{};  // [true][predicted]
    Regime regime = Regime::zero_shot;
    double fraction = 1.0;
    SplitSpec split;
    std::uint64_t seed = 0;
};

/// Argmax of forward probabilities per window; ties break to the lowest
/// class ordinal. accuracy = trace(confusion) / sum(confusion).
EvalReport evaluate(const MlpParams& params, std::span<const Example> test);

void write_eval_report_json(const EvalReport& report, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Data-fraction sweep
// ---------------------------------------------------------------------------

struct SweepPoint {
    double fraction = 1.0;
    std::uint64_t seed = 0;
    Regime regime = Regime::zero_shot;
    double accuracy = 0.0;
    bool skipped = false;
    std::string note;
};

struct SweepTable {
    std::vector<SweepPoint> points;

    /// Mean accuracy over seeds for one (fraction, regime) cell.
    double mean_accuracy(double fraction, Regime regime) const;
};

/// Class-stratified deterministic subset draw: floor(fraction * n_c) indices
/// per class, taken as prefixes of one seed-keyed shuffle, so subsets nest
/// across fractions for a fixed seed. empty_class >= 0 flags a class whose
/// subset came out empty.
struct StratifiedDraw {
    std::vector<std::size_t> indices;
    int empty_class = -1;
};
StratifiedDraw stratified_indices(std::span<const Example> pool, double fraction,
                                  std::uint64_t seed);

/// Examples form of stratified_indices; throws Error on an empty class.
std::vector<Example> stratified_fraction(std::span<const Example> pool, double fraction,
                                         std::uint64_t seed);

/// Trains zero-shot and fine-tuned models on class-stratified subsets of the
/// human training split and evaluates each on the fixed human test split.
/// Subsets are nested across fractions for a given seed. Fractions whose
/// subset empties a class are skipped with a warning row.
SweepTable fraction_sweep(const FeatureTable& human, const SplitSpec& split,
                          const MlpParams& robot_checkpoint, std::span<const double> fractions,
                          std::span<const std::uint64_t> seeds, const TrainConfig& config,
                          int jobs = 1);

void write_sweep_csv(const SweepTable& table, const std::filesystem::path& path);
void write_sweep_svg(const SweepTable& table, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Per-subject ID/OoD protocol
// ---------------------------------------------------------------------------

struct SubjectOutcome {
    std::string subject;
    double id_zero_shot = 0.0;
    double id_fine_tuned = 0.0;
    double ood_zero_shot = 0.0;
    double ood_fine_tuned = 0.0;

    double id_boost() const { return id_fine_tuned - id_zero_shot; }
    double ood_boost() const { return ood_fine_tuned - ood_zero_shot; }
};

struct SubjectProtocolResult {
    std::vector<SubjectOutcome> subjects;  // seed-averaged accuracies
    double mean_boost = 0.0;               // mean of ID and OoD boosts over subjects
    double mean_id_fine_tuned = 0.0;
    double mean_ood_fine_tuned = 0.0;
};

/// ID: one model per (regime, seed) trained on everyone, scored on each
/// subject's test windows. OoD: per subject, models trained with that subject
/// excluded, scored on all of that subject's windows.
SubjectProtocolResult subject_protocol(const FeatureTable& human,
                                       const MlpParams& robot_checkpoint,
                                       std::span<const std::uint64_t> seeds,
                                       const TrainConfig& config, int jobs = 1);

void write_subjects_csv(const SubjectProtocolResult& result, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Distribution comparison
// ---------------------------------------------------------------------------

struct BoxStats {
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double whisker_low = 0.0;   // q1 - 1.5 IQR
    double whisker_high = 0.0;  // q3 + 1.5 IQR
    std::int64_t outlier_count = 0;
};

struct ChannelDistribution {
    BoxStats human;
    BoxStats robot;
    double iqr_overlap = 0.0;  // Jaccard overlap of the two [q1, q3] intervals
};

struct DistributionReport {
    std::array<ChannelDistribution, kNumChannels> channels{};
};

/// Linear-interpolation quantile on a sorted array (the common "type 7" rule).
double quantile_type7(std::span<const double> sorted_values, double p);

BoxStats boxplot_stats(std::vector<double> values);

/// Per-channel raw-value boxplots for each source plus IQR overlap scores.
/// Throws DataError naming the missing source if one is absent.
DistributionReport distribution_report(std::span<const SensorRun> runs);

void write_distribution_csv(const DistributionReport& report, const std::filesystem::path& path);
void write_boxplot_svg(const DistributionReport& report, const std::filesystem::path& path);

}  // namespace toolsense
