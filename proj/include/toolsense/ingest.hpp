#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "toolsense/types.hpp"

namespace toolsense {

// ---------------------------------------------------------------------------
// Run CSV and manifest formats
// ---------------------------------------------------------------------------

/// Frozen run CSV header. UTF-8, LF line endings, decimal floats.
inline constexpr const char* kRunCsvHeader =
    "t,accel_x,accel_y,accel_z,gyro_x,gyro_y,gyro_z,mag_x,mag_y,mag_z,mic,current";

struct ManifestEntry {
    std::string path;  // relative paths resolve against the manifest directory
    std::string subject_id;
    Source source = Source::human;
    TaskLabel task = TaskLabel::cutting;
    int run_index = 0;
    double rate_hz = 100.0;  // default when the manifest omits it

    RunKey key() const { return RunKey{subject_id, source, task, run_index}; }
};

struct Manifest {
    std::vector<ManifestEntry> entries;
    std::filesystem::path base_dir;  // directory of the manifest file

    std::filesystem::path resolve(const ManifestEntry& e) const;
};

/// Loads and validates a `.manifest.json` file: JSON array of entries,
/// unique (subject_id, source, task, run_index), rate_hz > 0.
Manifest load_manifest(const std::filesystem::path& path);

/// Writes the manifest entries as a JSON array (paths stored as given).
void save_manifest(const Manifest& manifest, const std::filesystem::path& path);

/// Parses one run CSV against the frozen schema. Row count is preserved;
/// the result satisfies the SensorRun invariants.
SensorRun parse_run_csv(const std::filesystem::path& path, const ManifestEntry& meta);

/// Writes a run in the frozen CSV format, floats at 17 significant digits.
void write_run_csv(const SensorRun& run, const std::filesystem::path& path);

/// Parses every manifest entry.
std::vector<SensorRun> load_all_runs(const Manifest& manifest);

// ---------------------------------------------------------------------------
// Outlier cleaning
// ---------------------------------------------------------------------------

/// Normal-consistency factor for the MAD spread estimate.
inline constexpr double kMadNormalConsistency = 1.4826;

/// Per-channel reference statistics of window means: median and scaled MAD.
struct CleaningStats {
    std::array<double, kNumChannels> median{};
    std::array<double, kNumChannels> spread{};  // kMadNormalConsistency * MAD
};

struct CleaningReport {
    std::size_t windows_examined = 0;
    std::size_t windows_removed = 0;
    double removal_fraction = 0.0;
    std::array<std::int64_t, kNumChannels> per_channel_flag_counts{};
    bool all_windows_removed = false;  // warning-level condition, not an error
};

struct CleaningResult {
    std::vector<Window> kept;
    CleaningReport report;
};

/// Median and scaled MAD of the per-window channel means over `windows`.
CleaningStats compute_cleaning_stats(const RunLookup& runs, std::span<const Window> windows);

/// Robust z-score filter on window means: a window is removed iff, for any
/// channel, |mean - median| > k * spread against `reference` (computed from
/// the input set when null). With zero spread any nonzero deviation flags.
CleaningResult clean_outliers(const RunLookup& runs, std::span<const Window> windows, double k,
                              const CleaningStats* reference = nullptr);

}  // namespace toolsense
