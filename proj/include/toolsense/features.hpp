#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "toolsense/types.hpp"

namespace toolsense {

// ---------------------------------------------------------------------------
// Windowing
// ---------------------------------------------------------------------------

struct WindowParams {
    double window_seconds = 10.0;
    double overlap_fraction = 0.5;  // in [0, 1)
};

struct WindowingResult {
    std::vector<Window> windows;
    bool run_too_short = false;  // run shorter than one window; not an error
};

/// Slices a run into fixed-length windows at stride
/// round(rate_hz * window_seconds * (1 - overlap_fraction)).
/// Count = floor((N - W) / stride) + 1 for N >= W, else an empty list with
/// run_too_short set.
WindowingResult make_windows(const SensorRun& run, const WindowParams& params = {});

/// Windows every run; convenience wrapper for dataset-level pipelines.
std::vector<Window> make_all_windows(std::span<const SensorRun> runs,
                                     const WindowParams& params = {});

// ---------------------------------------------------------------------------
// Statistics
// ---------------------------------------------------------------------------

/// The ten statistics of one channel slice, in the frozen Stat order:
/// min, max, mean, sum, variance (n-1), std_dev, sem, adjusted Fisher-Pearson
/// skewness (0 if n < 3 or variance = 0), bias-corrected excess kurtosis
/// (0 if n < 4 or variance = 0), unscaled MAD.
/// Throws ContractViolation on an empty slice.
std::array<double, kNumStats> channel_statistics(std::span<const double> x);

/// All 110 features of one window, channel-major per feature_index.
FeatureVector extract_features(const SensorRun& run, const Window& window);

/// Mean of one channel over a window; shared by featurization and cleaning.
double window_channel_mean(const SensorRun& run, const Window& window, ChannelId channel);

// ---------------------------------------------------------------------------
// Normalization
// ---------------------------------------------------------------------------

struct NormalizationParams {
    std::array<double, kNumFeatures> min{};
    std::array<double, kNumFeatures> max{};
    std::string fitted_on;  // split identifier, provenance only
};

/// Component-wise extrema of the input set. List must be non-empty.
NormalizationParams fit_normalization(std::span<const FeatureVector> vectors,
                                      std::string fitted_on = {});

/// (v - min) / (max - min) clamped to [0, 1]; degenerate features map to 0.
FeatureVector apply_normalization(const FeatureVector& v, const NormalizationParams& p);

void save_normalization(const NormalizationParams& p, const std::filesystem::path& path);
NormalizationParams load_normalization(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Feature table (the exported CSV form)
// ---------------------------------------------------------------------------

struct FeatureRow {
    RunKey run;
    std::size_t window_start = 0;  // start sample index in the parent run
    FeatureVector features;

    TaskLabel label() const { return run.task; }
};

using FeatureTable = std::vector<FeatureRow>;

/// Extracts one row per window, in the given window order.
FeatureTable build_feature_table(const RunLookup& runs, std::span<const Window> windows);

/// CSV with header `subject,source,task,run_index,window_start,f000..f109`.
void write_feature_csv(const FeatureTable& table, const std::filesystem::path& path);
FeatureTable read_feature_csv(const std::filesystem::path& path);

}  // namespace toolsense
