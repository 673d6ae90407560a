#include "banditrl/aggregate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "banditrl/errors.hpp"
#include "banditrl/text.hpp"

namespace banditrl {

namespace fs = std::filesystem;

std::optional<double> pearson(std::span<const double> a, std::span<const double> b)
{
    if (a.size() != b.size() || a.size() < 2) return std::nullopt;
    const double n = static_cast<double>(a.size());
    double mean_a = 0.0, mean_b = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        mean_a += a[i];
        mean_b += b[i];
    }
    mean_a /= n;
    mean_b /= n;
    double cov = 0.0, var_a = 0.0, var_b = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        cov += (a[i] - mean_a) * (b[i] - mean_b);
        var_a += (a[i] - mean_a) * (a[i] - mean_a);
        var_b += (b[i] - mean_b) * (b[i] - mean_b);
    }
    if (var_a <= 0.0 || var_b <= 0.0) return std::nullopt;
    return cov / std::sqrt(var_a * var_b);
}

std::vector<double> smooth(std::span<const double> values, int window)
{
    std::vector<double> out;
    out.reserve(values.size());
    for (std::size_t i = 0; i < values.size(); ++i)
        out.push_back(moving_average(values.first(i + 1), window));
    return out;
}

std::size_t windows_to_reach(std::span<const double> values, double fraction)
{
    if (values.empty()) return 0;
    const double threshold = fraction * values.back();
    for (std::size_t i = 0; i < values.size(); ++i)
        if (values[i] >= threshold) return i;
    return values.size();
}

namespace {

std::vector<std::vector<std::string>> read_csv(const fs::path& path, std::string_view expected_header)
{
    std::ifstream in(path);
    if (!in) throw MissingLogs("cannot read " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != expected_header)
        throw IoError(path.string() + ": unexpected header");
    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        rows.push_back(split(line, ','));
    }
    return rows;
}

}  // namespace

std::vector<WindowRecord> read_window_csv(const fs::path& path)
{
    std::vector<WindowRecord> records;
    for (const auto& f : read_csv(path, kWindowCsvHeader)) {
        if (f.size() != 11) throw IoError(path.string() + ": malformed row");
        WindowRecord r;
        r.run_id = static_cast<int>(parse_int(f[0]));
        r.window_index = static_cast<int>(parse_int(f[1]));
        r.strategy = f[2];
        r.chosen_arm = static_cast<int>(parse_int(f[3]));
        r.arm_label = f[4];
        for (const auto& x : split(f[5], ';')) r.episode_returns.push_back(parse_double(x));
        r.mean_return = parse_double(f[6]);
        r.normalized_return = parse_double(f[7]);
        r.mean_info_gain = parse_double(f[8]);
        r.certainty_ma = parse_double(f[9]);
        r.composite_reward = parse_double(f[10]);
        records.push_back(std::move(r));
    }
    return records;
}

AggregateTables aggregate(const fs::path& dir)
{
    for (const char* name : {"summary.csv", "arms.csv", "config.resolved"})
        if (!fs::exists(dir / name)) throw MissingLogs((dir / name).string() + " not found");

    const ExperimentConfig config = load_config(dir / "config.resolved");
    std::vector<std::string> labels;
    for (const auto& f : read_csv(dir / "arms.csv", "arm,arm_label")) labels.push_back(f.at(1));
    const auto label_of = [&labels](int arm) { return labels.at(static_cast<std::size_t>(arm)); };

    // Strategy order follows first appearance in the summary.
    std::vector<std::string> strategies;
    std::map<std::string, std::vector<int>> runs_of;
    std::map<std::string, std::vector<int>> recommendations;
    for (const auto& f : read_csv(dir / "summary.csv", kSummaryCsvHeader)) {
        const std::string& s = f.at(1);
        if (!runs_of.contains(s)) strategies.push_back(s);
        runs_of[s].push_back(static_cast<int>(parse_int(f.at(0))));
        recommendations[s].push_back(static_cast<int>(parse_int(f.at(2))));
    }
    if (strategies.empty()) throw MissingLogs("summary.csv has no rows");

    std::map<std::string, std::vector<std::vector<WindowRecord>>> windows;
    for (const auto& s : strategies) {
        for (int run : runs_of[s]) {
            const auto path = window_csv_path(dir, run, s);
            if (!fs::exists(path)) throw MissingLogs(path.string() + " not found");
            windows[s].push_back(read_window_csv(path));
        }
    }

    AggregateTables tables;
    const int arm_count = static_cast<int>(labels.size());

    for (const auto& s : strategies) {
        const auto& recs = recommendations[s];
        for (int arm = 0; arm < arm_count; ++arm) {
            const auto hits = std::count(recs.begin(), recs.end(), arm);
            tables.frequency.push_back({s, arm, label_of(arm),
                                        static_cast<double>(hits) / static_cast<double>(recs.size()),
                                        static_cast<int>(recs.size())});
        }
    }

    // Cumulative true reward (sum of episode returns) per window.
    double lo = HUGE_VAL, hi = -HUGE_VAL;
    for (const auto& s : strategies) {
        const auto& runs = windows[s];
        const std::size_t length = runs.front().size();
        std::vector<std::vector<double>> cumulative(runs.size());
        for (std::size_t r = 0; r < runs.size(); ++r) {
            if (runs[r].size() != length) throw IoError("runs of '" + s + "' differ in length");
            double total = 0.0;
            for (const auto& w : runs[r]) {
                for (double x : w.episode_returns) total += x;
                cumulative[r].push_back(total);
            }
        }
        for (std::size_t w = 0; w < length; ++w) {
            double mean = 0.0;
            for (const auto& c : cumulative) mean += c[w];
            mean /= static_cast<double>(runs.size());
            double var = 0.0;
            for (const auto& c : cumulative) var += (c[w] - mean) * (c[w] - mean);
            const double n = static_cast<double>(runs.size());
            const double stderr_ = runs.size() > 1 ? std::sqrt(var / (n - 1.0) / n) : 0.0;
            tables.curves.push_back({s, static_cast<int>(w), mean, stderr_, 0.0});
            lo = std::min(lo, mean);
            hi = std::max(hi, mean);
        }
    }
    for (auto& row : tables.curves)
        row.scaled = hi > lo ? (row.mean_cumulative_true_reward - lo) / (hi - lo) : 0.5;

    // Fixed-arm strategies: correlation series and pooled surrogate totals.
    std::vector<std::pair<std::string, int>> fixed;
    for (const auto& s : strategies) {
        const auto spec = config.resolve_strategy(s);
        if (spec.strategy == Strategy::FixedArm) fixed.emplace_back(s, spec.fixed_index);
    }
    double pool_lo = HUGE_VAL, pool_hi = -HUGE_VAL;
    for (const auto& [s, arm] : fixed)
        for (const auto& run : windows[s])
            for (const auto& w : run) {
                pool_lo = std::min(pool_lo, w.mean_return);
                pool_hi = std::max(pool_hi, w.mean_return);
            }

    for (const auto& [s, arm] : fixed) {
        const auto& runs = windows[s];
        const std::size_t length = runs.front().size();
        std::vector<double> reward(length, 0.0), certainty(length, 0.0);
        double total_true = 0.0, total_composite = 0.0;
        for (const auto& run : runs) {
            for (std::size_t w = 0; w < length; ++w) {
                reward[w] += run[w].mean_return / static_cast<double>(runs.size());
                certainty[w] += run[w].certainty_ma / static_cast<double>(runs.size());
                for (double x : run[w].episode_returns) total_true += x;
                const double scaled =
                    pool_hi > pool_lo ? (run[w].mean_return - pool_lo) / (pool_hi - pool_lo) : 0.5;
                total_composite += composite_reward(scaled, run[w].certainty_ma, config.surrogate);
            }
        }
        const auto reward_s = smooth(reward, config.surrogate.ma_window);
        const auto certainty_s = smooth(certainty, config.surrogate.ma_window);
        for (std::size_t w = 0; w < length; ++w)
            tables.series.push_back({s, arm, label_of(arm), static_cast<int>(w), reward_s[w], certainty_s[w]});
        tables.correlation.push_back(
            {s, arm, label_of(arm), pearson(reward_s, certainty_s), static_cast<int>(length)});
        const double n = static_cast<double>(runs.size());
        tables.surrogate_totals.push_back({s, arm, label_of(arm), total_true / n, total_composite / n});
    }
    return tables;
}

void write_aggregate(const fs::path& dir, const AggregateTables& t)
{
    const fs::path out = dir / "aggregate";
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw IoError("cannot create " + out.string() + ": " + ec.message());
    const auto open = [&out](const char* name) {
        std::ofstream os(out / name, std::ios::binary | std::ios::trunc);
        if (!os) throw IoError("cannot write " + (out / name).string());
        return os;
    };

    auto freq = open("frequency.csv");
    freq << kFrequencyCsvHeader << '\n';
    for (const auto& r : t.frequency)
        freq << r.strategy << ',' << r.arm << ',' << r.arm_label << ',' << format_double(r.frequency) << ','
             << r.runs << '\n';

    auto curves = open("curves.csv");
    curves << kCurvesCsvHeader << '\n';
    for (const auto& r : t.curves)
        curves << r.strategy << ',' << r.window_index << ',' << format_double(r.mean_cumulative_true_reward) << ','
               << format_double(r.stderr_cumulative_true_reward) << ',' << format_double(r.scaled) << '\n';

    auto series = open("series.csv");
    series << kSeriesCsvHeader << '\n';
    for (const auto& r : t.series)
        series << r.strategy << ',' << r.arm << ',' << r.arm_label << ',' << r.window_index << ','
               << format_double(r.true_reward_smoothed) << ',' << format_double(r.certainty_smoothed) << '\n';

    auto corr = open("correlation.csv");
    corr << kCorrelationCsvHeader << '\n';
    for (const auto& r : t.correlation) {
        corr << r.strategy << ',' << r.arm << ',' << r.arm_label << ',';
        if (r.pearson_r) corr << format_double(*r.pearson_r);
        corr << ',' << r.windows << '\n';
    }

    auto totals = open("surrogate_totals.csv");
    totals << kSurrogateTotalsCsvHeader << '\n';
    for (const auto& r : t.surrogate_totals)
        totals << r.strategy << ',' << r.arm << ',' << r.arm_label << ','
               << format_double(r.mean_cumulative_true_reward) << ','
               << format_double(r.mean_cumulative_composite_reward) << '\n';
}

}  // namespace banditrl
