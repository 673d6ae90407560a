#pragma once

#include <cstdint>
#include <deque>
#include <span>

namespace banditrl {

inline constexpr double kMeanFloor = 1e-8;

/// Running statistics of a scalar stream: count, cumulative mean and extrema.
struct RunningNorm {
    std::int64_t count = 0;
    double running_mean = 0.0;
    double running_min = 0.0;
    double running_max = 0.0;

    void observe(double x);
};

struct SurrogateConfig {
    double eta = 0.5;
    int ma_window = 10;
    bool clip = true;

    void validate() const;
};

/// 1 / (1 + kl / max(mean, floor)) against the statistics seen so far, then
/// folds kl into them. Throws NegativeKL for kl < 0.
double certainty_score(double kl, RunningNorm& norm);

/// (true + eta * certainty) / (1 + eta).
double composite_reward(double true_reward_normalized, double certainty_ma, const SurrogateConfig& config);

/// Min-max scaling against the extrema including raw. A degenerate range
/// maps to 0.5. With clip the result is confined to [0, 1].
double normalize_reward(double raw, RunningNorm& norm, bool clip = true);

/// Mean of the last min(window, size) values. Throws EmptySequence.
double moving_average(std::span<const double> values, int window);

/// Moving average of certainty scores over a bounded history.
class CertaintyAverager {
public:
    explicit CertaintyAverager(int window);

    /// Push a score and return the current moving average.
    double push(double score);
    double value() const;
    bool empty() const { return recent_.empty(); }

private:
    int window_;
    std::deque<double> recent_;
};

}  // namespace banditrl
