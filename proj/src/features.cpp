#include "toolsense/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace toolsense {

namespace {

double median_of(std::vector<double>& scratch) {
    std::sort(scratch.begin(), scratch.end());
    const std::size_t n = scratch.size();
    if (n % 2 == 1) return scratch[n / 2];
    return 0.5 * (scratch[n / 2 - 1] + scratch[n / 2]);
}

void format_double(std::string& out, double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out += buf;
}

double parse_double_cell(std::string_view cell, std::size_t row, std::size_t col) {
    double v = 0.0;
    const char* first = cell.data();
    const char* last = first + cell.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last || !std::isfinite(v)) {
        throw ParseError("non-numeric cell '" + std::string(cell) + "' at row " +
                         std::to_string(row) + ", column " + std::to_string(col + 1));
    }
    return v;
}

std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            cells.push_back(line.substr(start));
            break;
        }
        cells.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return cells;
}

}  // namespace

WindowingResult make_windows(const SensorRun& run, const WindowParams& params) {
    if (!(params.window_seconds > 0.0)) {
        throw ContractViolation("make_windows: window_seconds must be positive");
    }
    if (!(params.overlap_fraction >= 0.0 && params.overlap_fraction < 1.0)) {
        throw ContractViolation("make_windows: overlap_fraction must be in [0, 1)");
    }
    if (!(run.rate_hz > 0.0) || run.samples.empty()) {
        throw ContractViolation("make_windows: run must be non-empty with positive rate");
    }

    const auto window_len =
        static_cast<std::size_t>(std::llround(run.rate_hz * params.window_seconds));
    const auto stride = static_cast<std::size_t>(
        std::llround(run.rate_hz * params.window_seconds * (1.0 - params.overlap_fraction)));
    if (window_len == 0 || stride == 0) {
        throw ContractViolation("make_windows: window or stride rounds to zero samples");
    }

    WindowingResult result;
    const std::size_t n = run.samples.size();
    if (n < window_len) {
        result.run_too_short = true;
        return result;
    }
    const std::size_t count = (n - window_len) / stride + 1;
    result.windows.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        Window w;
        w.run = run.key();
        w.start_index = i * stride;
        w.end_index = w.start_index + window_len;
        w.label = run.task;
        w.subject_id = run.subject_id;
        w.source = run.source;
        result.windows.push_back(std::move(w));
    }
    return result;
}

std::vector<Window> make_all_windows(std::span<const SensorRun> runs,
                                     const WindowParams& params) {
    std::vector<Window> all;
    for (const SensorRun& run : runs) {
        WindowingResult r = make_windows(run, params);
        all.insert(all.end(), r.windows.begin(), r.windows.end());
    }
    return all;
}

std::array<double, kNumStats> channel_statistics(std::span<const double> x) {
    if (x.empty()) {
        throw ContractViolation("channel_statistics: empty window");
    }
    const std::size_t n = x.size();
    const auto dn = static_cast<double>(n);

    double lo = x[0], hi = x[0], sum = 0.0;
    for (double v : x) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        sum += v;
    }

    std::array<double, kNumStats> out{};
    out[static_cast<int>(Stat::min)] = lo;
    out[static_cast<int>(Stat::max)] = hi;
    out[static_cast<int>(Stat::sum)] = sum;

    // Constant slices take the degenerate path exactly: rounding in the mean
    // must not leak into the higher moments.
    if (lo == hi) {
        out[static_cast<int>(Stat::mean)] = lo;
        return out;
    }

    const double mean = sum / dn;
    out[static_cast<int>(Stat::mean)] = mean;

    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : x) {
        const double d = v - mean;
        const double d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    const double variance = (n > 1) ? m2 / (dn - 1.0) : 0.0;
    const double std_dev = std::sqrt(variance);
    out[static_cast<int>(Stat::variance)] = variance;
    out[static_cast<int>(Stat::std_dev)] = std_dev;
    out[static_cast<int>(Stat::sem)] = std_dev / std::sqrt(dn);

    m2 /= dn;
    m3 /= dn;
    m4 /= dn;
    if (n >= 3 && m2 > 0.0) {
        const double g1 = m3 / std::pow(m2, 1.5);
        out[static_cast<int>(Stat::skewness)] =
            g1 * std::sqrt(dn * (dn - 1.0)) / (dn - 2.0);
    }
    if (n >= 4 && m2 > 0.0) {
        const double g2 = m4 / (m2 * m2) - 3.0;
        out[static_cast<int>(Stat::kurtosis)] =
            ((dn + 1.0) * g2 + 6.0) * (dn - 1.0) / ((dn - 2.0) * (dn - 3.0));
    }

    std::vector<double> scratch(x.begin(), x.end());
    const double med = median_of(scratch);
    for (double& v : scratch) v = std::abs(v - med);
    out[static_cast<int>(Stat::mad)] = median_of(scratch);

    return out;
}

FeatureVector extract_features(const SensorRun& run, const Window& window) {
    if (window.end_index > run.samples.size() || window.start_index >= window.end_index) {
        throw ContractViolation("extract_features: window " +
                                std::to_string(window.start_index) + ".." +
                                std::to_string(window.end_index) + " outside run of " +
                                std::to_string(run.samples.size()) + " samples");
    }
    FeatureVector fv;
    std::vector<double> slice(window.length());
    for (int c = 0; c < kNumChannels; ++c) {
        for (std::size_t i = 0; i < slice.size(); ++i) {
            slice[i] = run.samples[window.start_index + i].values[static_cast<std::size_t>(c)];
        }
        const auto stats = channel_statistics(slice);
        for (int s = 0; s < kNumStats; ++s) {
            fv[feature_index(static_cast<ChannelId>(c), s)] = stats[static_cast<std::size_t>(s)];
        }
    }
    return fv;
}

double window_channel_mean(const SensorRun& run, const Window& window, ChannelId channel) {
    if (window.end_index > run.samples.size() || window.start_index >= window.end_index) {
        throw ContractViolation("window_channel_mean: window outside run");
    }
    double sum = 0.0;
    for (std::size_t i = window.start_index; i < window.end_index; ++i) {
        sum += run.samples[i].values[static_cast<std::size_t>(static_cast<int>(channel))];
    }
    return sum / static_cast<double>(window.length());
}

NormalizationParams fit_normalization(std::span<const FeatureVector> vectors,
                                      std::string fitted_on) {
    if (vectors.empty()) {
        throw ContractViolation("fit_normalization: empty vector list");
    }
    NormalizationParams p;
    p.fitted_on = std::move(fitted_on);
    p.min = vectors[0].values;
    p.max = vectors[0].values;
    for (const FeatureVector& v : vectors) {
        for (int i = 0; i < kNumFeatures; ++i) {
            p.min[static_cast<std::size_t>(i)] = std::min(p.min[static_cast<std::size_t>(i)], v[i]);
            p.max[static_cast<std::size_t>(i)] = std::max(p.max[static_cast<std::size_t>(i)], v[i]);
        }
    }
    return p;
}

FeatureVector apply_normalization(const FeatureVector& v, const NormalizationParams& p) {
    FeatureVector out;
    for (int i = 0; i < kNumFeatures; ++i) {
        const auto u = static_cast<std::size_t>(i);
        const double range = p.max[u] - p.min[u];
        if (range > 0.0) {
            out[i] = std::clamp((v[i] - p.min[u]) / range, 0.0, 1.0);
        } else {
            out[i] = 0.0;
        }
    }
    return out;
}

void save_normalization(const NormalizationParams& p, const std::filesystem::path& path) {
    nlohmann::json j;
    j["format_version"] = 1;
    j["fitted_on"] = p.fitted_on;
    j["min"] = p.min;
    j["max"] = p.max;
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    out << j.dump(2) << '\n';
}

NormalizationParams load_normalization(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open normalization file '" + path.string() + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("normalization file '" + path.string() + "': " + e.what());
    }
    NormalizationParams p;
    p.fitted_on = j.value("fitted_on", std::string{});
    const auto& jmin = j.at("min");
    const auto& jmax = j.at("max");
    if (jmin.size() != kNumFeatures || jmax.size() != kNumFeatures) {
        throw ParseError("normalization file '" + path.string() + "': expected " +
                         std::to_string(kNumFeatures) + " min/max entries");
    }
    for (int i = 0; i < kNumFeatures; ++i) {
        const auto u = static_cast<std::size_t>(i);
        p.min[u] = jmin[u].get<double>();
        p.max[u] = jmax[u].get<double>();
        if (!(p.min[u] <= p.max[u])) {
            throw ParseError("normalization file '" + path.string() + "': min > max at feature " +
                             std::to_string(i));
        }
    }
    return p;
}

FeatureTable build_feature_table(const RunLookup& runs, std::span<const Window> windows) {
    FeatureTable table;
    table.reserve(windows.size());
    for (const Window& w : windows) {
        FeatureRow row;
        row.run = w.run;
        row.window_start = w.start_index;
        row.features = extract_features(runs.at(w.run), w);
        table.push_back(std::move(row));
    }
    return table;
}

void write_feature_csv(const FeatureTable& table, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    std::string line = "subject,source,task,run_index,window_start";
    for (int i = 0; i < kNumFeatures; ++i) {
        char buf[8];
        std::snprintf(buf, sizeof(buf), ",f%03d", i);
        line += buf;
    }
    out << line << '\n';
    for (const FeatureRow& row : table) {
        line.clear();
        line += row.run.subject_id;
        line += ',';
        line += to_string(row.run.source);
        line += ',';
        line += to_string(row.run.task);
        line += ',';
        line += std::to_string(row.run.run_index);
        line += ',';
        line += std::to_string(row.window_start);
        for (int i = 0; i < kNumFeatures; ++i) {
            line += ',';
            format_double(line, row.features[i]);
        }
        out << line << '\n';
    }
}

FeatureTable read_feature_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open feature file '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line)) {
        throw SchemaError("feature file '" + path.string() + "': missing header");
    }
    std::string expected = "subject,source,task,run_index,window_start";
    for (int i = 0; i < kNumFeatures; ++i) {
        char buf[8];
        std::snprintf(buf, sizeof(buf), ",f%03d", i);
        expected += buf;
    }
    if (line != expected) {
        throw SchemaError("feature file '" + path.string() + "': header does not match the " +
                          "frozen feature schema");
    }

    FeatureTable table;
    std::size_t row_number = 1;
    while (std::getline(in, line)) {
        ++row_number;
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != 5 + kNumFeatures) {
            throw SchemaError("feature file '" + path.string() + "': row " +
                              std::to_string(row_number) + " has " +
                              std::to_string(cells.size()) + " cells, expected " +
                              std::to_string(5 + kNumFeatures));
        }
        FeatureRow row;
        row.run.subject_id = std::string(cells[0]);
        row.run.source = parse_source(std::string(cells[1]));
        row.run.task = parse_task(std::string(cells[2]));
        row.run.run_index = static_cast<int>(parse_double_cell(cells[3], row_number, 3));
        row.window_start = static_cast<std::size_t>(parse_double_cell(cells[4], row_number, 4));
        for (int i = 0; i < kNumFeatures; ++i) {
            row.features[i] = parse_double_cell(cells[static_cast<std::size_t>(5 + i)],
                                                row_number, static_cast<std::size_t>(5 + i));
        }
        table.push_back(std::move(row));
    }
    return table;
}

}  // namespace toolsense
