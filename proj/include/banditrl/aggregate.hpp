#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "banditrl/harness.hpp"

namespace banditrl {

/// Pearson correlation; empty when either series has zero variance or the
/// lengths differ or are below two.
std::optional<double> pearson(std::span<const double> a, std::span<const double> b);

/// Trailing moving average: out[i] = mean(values[max(0, i-window+1) .. i]).
std::vector<double> smooth(std::span<const double> values, int window);

/// First index whose value reaches fraction * final value (final = last
/// element); the series length when it never does.
std::size_t windows_to_reach(std::span<const double> values, double fraction);

struct FrequencyRow {
    std::string strategy;
    int arm = 0;
    std::string arm_label;
    double frequency = 0.0;
    int runs = 0;
};

struct CurveRow {
    std::string strategy;
    int window_index = 0;
    double mean_cumulative_true_reward = 0.0;
    double stderr_cumulative_true_reward = 0.0;
    double scaled = 0.0;
};

struct SeriesRow {
    std::string strategy;
    int arm = 0;
    std::string arm_label;
    int window_index = 0;
    double true_reward_smoothed = 0.0;
    double certainty_smoothed = 0.0;
};

struct CorrelationRow {
    std::string strategy;
    int arm = 0;
    std::string arm_label;
    std::optional<double> pearson_r;
    int windows = 0;
};

struct SurrogateTotalRow {
    std::string strategy;
    int arm = 0;
    std::string arm_label;
    double mean_cumulative_true_reward = 0.0;
    double mean_cumulative_composite_reward = 0.0;
};

struct AggregateTables {
    std::vector<FrequencyRow> frequency;
    std::vector<CurveRow> curves;
    std::vector<SeriesRow> series;
    std::vector<CorrelationRow> correlation;
    std::vector<SurrogateTotalRow> surrogate_totals;
};

inline constexpr const char* kFrequencyCsvHeader = "strategy,arm,arm_label,frequency,runs";
inline constexpr const char* kCurvesCsvHeader =
    "strategy,window_index,mean_cumulative_true_reward,stderr_cumulative_true_reward,scaled_cumulative_true_reward";
inline constexpr const char* kSeriesCsvHeader =
    "strategy,arm,arm_label,window_index,true_reward_smoothed,certainty_smoothed";
inline constexpr const char* kCorrelationCsvHeader = "strategy,arm,arm_label,pearson_r,windows";
inline constexpr const char* kSurrogateTotalsCsvHeader =
    "strategy,arm,arm_label,mean_cumulative_true_reward,mean_cumulative_composite_reward";

/// Parse one window CSV produced by run_experiment.
std::vector<WindowRecord> read_window_csv(const std::filesystem::path& path);

/// Build the summary tables from <dir>/summary.csv, <dir>/arms.csv,
/// <dir>/config.resolved and the run CSVs. Throws MissingLogs when any of
/// them is absent.
///
/// - frequency: per strategy, fraction of runs recommending each arm.
/// - curves: per strategy, cumulative true reward per window averaged over
///   runs, with a min-max scaling shared by all strategies.
/// - series/correlation: fixed-arm strategies only; per-window true reward
///   and certainty averaged over runs, smoothed with the surrogate window,
///   and their Pearson r.
/// - surrogate_totals: fixed-arm strategies only; cumulative true reward and
///   cumulative composite reward, the latter rebuilt with one min-max
///   normalization pooled over all fixed-arm windows so arms share a scale.
AggregateTables aggregate(const std::filesystem::path& dir);

/// Write the tables to <dir>/aggregate/*.csv.
void write_aggregate(const std::filesystem::path& dir, const AggregateTables& tables);

}  // namespace banditrl
