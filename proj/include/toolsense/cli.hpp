#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "toolsense/model.hpp"

namespace toolsense {

/// Verbosity from TOOLSENSE_LOG (error|warn|info|debug); default info.
int log_level();
void log_info(const std::string& msg);
void log_debug(const std::string& msg);

/// Generate a synthetic dataset: run CSVs plus dataset/robot/human manifests.
struct GenerateConfig {
    std::uint64_t seed = 1;
    int robot_runs_per_task = 8;
    int human_subjects = 4;
    int human_runs_per_task = 9;
    double duration_s = 180.0;
    double rate_hz = 100.0;
    double subject_spread = 0.25;
};

/// Validate a dataset and report windowing/cleaning statistics.
struct IngestConfig {
    std::string manifest;
    double window_seconds = 10.0;
    double overlap_fraction = 0.5;
    double clean_k = 3.5;
};

/// Window, clean, featurize and normalize a dataset into features.csv.
struct FeaturizeConfig {
    std::string manifest;
    double window_seconds = 10.0;
    double overlap_fraction = 0.5;
    double clean_k = 3.5;
    bool clean = true;
    /// Existing normalization params to apply instead of fitting new ones;
    /// lets the fine-tuning pipeline share the pretraining feature space.
    std::string norm;
};

/// Train a classifier on a feature table (optionally from a checkpoint).
struct TrainCommandConfig {
    std::string features;
    std::string init_checkpoint;  // empty = zero-shot random init
    /// "train": fit on the train split, early-stop on val (default).
    /// "all": fit on every window, validating on the same set; this is the
    /// pretraining mode, where the checkpoint should absorb the whole
    /// synthetic dataset.
    std::string train_on = "train";
    TrainConfig train;
};

/// Fine-tune a checkpoint on a stratified fraction of the training split.
struct FinetuneConfig {
    std::string checkpoint;
    std::string features;
    double fraction = 1.0;
    std::uint64_t sample_seed = 1;  // stratified subset draw
    TrainConfig train;
};

/// Evaluate a checkpoint on one split of a feature table.
struct EvaluateConfig {
    std::string checkpoint;
    std::string features;
    std::string split = "test";  // train | val | test | all
    std::string regime = "zero_shot";
};

/// Accuracy-vs-data-fraction sweep in both regimes.
struct SweepConfig {
    std::string features;
    std::string checkpoint;
    std::vector<double> fractions = {0.1, 0.2, 0.4, 0.6, 0.8, 1.0};
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
    TrainConfig train;
};

/// Per-subject ID/OoD zero-shot vs fine-tuned table.
struct SubjectsConfig {
    std::string features;
    std::string checkpoint;
    std::vector<std::uint64_t> seeds = {1, 2, 3};
    TrainConfig train;
};

/// Robot-vs-human raw value distribution comparison.
struct CompareDistConfig {
    std::string manifest;
};

/// Merges keys from a JSON config file into the struct; absent keys keep
/// their current values, so flag overrides applied afterwards win.
template <typename Config>
void apply_config_file(const std::filesystem::path& path, Config& c);

int cmd_generate(const GenerateConfig& config, const std::filesystem::path& out_dir);
int cmd_ingest(const IngestConfig& config, const std::filesystem::path& out_dir);
int cmd_featurize(const FeaturizeConfig& config, const std::filesystem::path& out_dir);
int cmd_train(const TrainCommandConfig& config, const std::filesystem::path& out_dir);
int cmd_finetune(const FinetuneConfig& config, const std::filesystem::path& out_dir);
int cmd_evaluate(const EvaluateConfig& config, const std::filesystem::path& out_dir);
int cmd_sweep(const SweepConfig& config, const std::filesystem::path& out_dir, int jobs);
int cmd_subjects(const SubjectsConfig& config, const std::filesystem::path& out_dir, int jobs);
int cmd_compare_dist(const CompareDistConfig& config, const std::filesystem::path& out_dir);

}  // namespace toolsense
