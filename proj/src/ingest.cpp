#include "toolsense/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "toolsense/features.hpp"

namespace toolsense {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(',', start);
        if (pos == std::string::npos) {
            cells.push_back(line.substr(start));
            break;
        }
        cells.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return cells;
}

double parse_cell(const std::string& cell, const std::string& column, std::size_t row) {
    double v = 0.0;
    const char* first = cell.c_str();
    const char* last = first + cell.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last || !std::isfinite(v)) {
        throw ParseError("non-numeric cell '" + cell + "' in column '" + column + "' at row " +
                         std::to_string(row));
    }
    return v;
}

double median_inplace(std::vector<double>& v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    if (n % 2 == 1) return v[n / 2];
    return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::filesystem::path Manifest::resolve(const ManifestEntry& e) const {
    std::filesystem::path p(e.path);
    if (p.is_absolute()) return p;
    return base_dir / p;
}

Manifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ManifestError("cannot open manifest '" + path.string() + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ManifestError("manifest '" + path.string() + "': " + e.what());
    }
    if (!j.is_array()) {
        throw ManifestError("manifest '" + path.string() + "': expected a JSON array of entries");
    }

    Manifest m;
    m.base_dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
    std::set<RunKey> seen;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const auto& o = j[i];
        ManifestEntry e;
        try {
            e.path = o.at("path").get<std::string>();
            e.subject_id = o.at("subject_id").get<std::string>();
            e.source = parse_source(o.at("source").get<std::string>());
            e.task = parse_task(o.at("task").get<std::string>());
            e.run_index = o.at("run_index").get<int>();
            e.rate_hz = o.value("rate_hz", 100.0);
        } catch (const nlohmann::json::exception& ex) {
            throw ManifestError("manifest '" + path.string() + "', entry " + std::to_string(i) +
                                ": " + ex.what());
        }
        if (e.subject_id.find(',') != std::string::npos ||
            e.subject_id.find('\n') != std::string::npos) {
            throw ManifestError("manifest '" + path.string() + "', entry " + std::to_string(i) +
                                ": subject_id must not contain commas or newlines");
        }
        if (!(e.rate_hz > 0.0)) {
            throw ManifestError("manifest '" + path.string() + "', entry " + std::to_string(i) +
                                ": rate_hz must be positive");
        }
        if (e.run_index < 0) {
            throw ManifestError("manifest '" + path.string() + "', entry " + std::to_string(i) +
                                ": run_index must be >= 0");
        }
        if (!seen.insert(e.key()).second) {
            throw ManifestError("manifest '" + path.string() + "': duplicate entry " +
                                e.key().to_string());
        }
        m.entries.push_back(std::move(e));
    }
    return m;
}

void save_manifest(const Manifest& manifest, const std::filesystem::path& path) {
    nlohmann::json j = nlohmann::json::array();
    for (const ManifestEntry& e : manifest.entries) {
        j.push_back({
            {"path", e.path},
            {"subject_id", e.subject_id},
            {"source", to_string(e.source)},
            {"task", to_string(e.task)},
            {"run_index", e.run_index},
            {"rate_hz", e.rate_hz},
        });
    }
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    out << j.dump(2) << '\n';
}

SensorRun parse_run_csv(const std::filesystem::path& path, const ManifestEntry& meta) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open run CSV '" + path.string() + "'");

    std::string line;
    if (!std::getline(in, line)) {
        throw SchemaError("run CSV '" + path.string() + "': missing header row");
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();

    const std::vector<std::string> expected = split_line(kRunCsvHeader);
    const std::vector<std::string> header = split_line(line);
    for (const std::string& col : expected) {
        if (std::find(header.begin(), header.end(), col) == header.end()) {
            throw SchemaError("run CSV '" + path.string() + "': missing column '" + col + "'");
        }
    }
    for (const std::string& col : header) {
        if (std::find(expected.begin(), expected.end(), col) == expected.end()) {
            throw SchemaError("run CSV '" + path.string() + "': unexpected column '" + col + "'");
        }
    }
    if (header != expected) {
        throw SchemaError("run CSV '" + path.string() + "': columns out of order; header must be '" +
                          std::string(kRunCsvHeader) + "'");
    }

    SensorRun run;
    run.rate_hz = meta.rate_hz;
    run.subject_id = meta.subject_id;
    run.source = meta.source;
    run.task = meta.task;
    run.run_index = meta.run_index;

    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = split_line(line);
        if (cells.size() != expected.size()) {
            throw SchemaError("run CSV '" + path.string() + "': row " + std::to_string(row) +
                              " has " + std::to_string(cells.size()) + " cells, expected " +
                              std::to_string(expected.size()));
        }
        SensorSample s;
        s.t = parse_cell(cells[0], "t", row);
        for (int c = 0; c < kNumChannels; ++c) {
            const auto u = static_cast<std::size_t>(c);
            s.values[u] = parse_cell(cells[u + 1], expected[u + 1], row);
        }
        run.samples.push_back(s);
    }

    if (run.samples.empty()) {
        throw DataError("run CSV '" + path.string() + "': empty run (header only)");
    }
    validate_run(run);
    return run;
}

void write_run_csv(const SensorRun& run, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    out << kRunCsvHeader << '\n';
    std::string line;
    char buf[32];
    for (const SensorSample& s : run.samples) {
        line.clear();
        std::snprintf(buf, sizeof(buf), "%.17g", s.t);
        line += buf;
        for (int c = 0; c < kNumChannels; ++c) {
            std::snprintf(buf, sizeof(buf), ",%.17g", s.values[static_cast<std::size_t>(c)]);
            line += buf;
        }
        out << line << '\n';
    }
}

std::vector<SensorRun> load_all_runs(const Manifest& manifest) {
    std::vector<SensorRun> runs;
    runs.reserve(manifest.entries.size());
    for (const ManifestEntry& e : manifest.entries) {
        runs.push_back(parse_run_csv(manifest.resolve(e), e));
    }
    return runs;
}

CleaningStats compute_cleaning_stats(const RunLookup& runs, std::span<const Window> windows) {
    if (windows.empty()) {
        throw ContractViolation("compute_cleaning_stats: no windows");
    }
    CleaningStats stats;
    std::vector<double> means(windows.size());
    std::vector<double> scratch(windows.size());
    for (int c = 0; c < kNumChannels; ++c) {
        const auto channel = static_cast<ChannelId>(c);
        for (std::size_t i = 0; i < windows.size(); ++i) {
            means[i] = window_channel_mean(runs.at(windows[i].run), windows[i], channel);
        }
        scratch = means;
        const double med = median_inplace(scratch);
        for (std::size_t i = 0; i < windows.size(); ++i) {
            scratch[i] = std::abs(means[i] - med);
        }
        const double mad = median_inplace(scratch);
        stats.median[static_cast<std::size_t>(c)] = med;
        stats.spread[static_cast<std::size_t>(c)] = kMadNormalConsistency * mad;
    }
    return stats;
}

CleaningResult clean_outliers(const RunLookup& runs, std::span<const Window> windows, double k,
                              const CleaningStats* reference) {
    if (!(k > 0.0)) {
        throw ContractViolation("clean_outliers: k must be positive");
    }
    if (windows.empty()) {
        throw ContractViolation("clean_outliers: no windows");
    }

    CleaningStats local;
    if (reference == nullptr) {
        local = compute_cleaning_stats(runs, windows);
        reference = &local;
    }

    CleaningResult result;
    result.report.windows_examined = windows.size();
    for (const Window& w : windows) {
        bool flagged = false;
        const SensorRun& run = runs.at(w.run);
        for (int c = 0; c < kNumChannels; ++c) {
            const auto u = static_cast<std::size_t>(c);
            const double mean = window_channel_mean(run, w, static_cast<ChannelId>(c));
            const double deviation = std::abs(mean - reference->median[u]);
            if (deviation > k * reference->spread[u]) {
                ++result.report.per_channel_flag_counts[u];
                flagged = true;
            }
        }
        if (flagged) {
            ++result.report.windows_removed;
        } else {
            result.kept.push_back(w);
        }
    }
    result.report.removal_fraction =
        static_cast<double>(result.report.windows_removed) /
        static_cast<double>(result.report.windows_examined);
    result.report.all_windows_removed = result.kept.empty();
    return result;
}

}  // namespace toolsense
