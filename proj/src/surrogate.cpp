#include "banditrl/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "banditrl/errors.hpp"

namespace banditrl {

void RunningNorm::observe(double x)
{
    if (count == 0) {
        running_min = running_max = x;
    } else {
        running_min = std::min(running_min, x);
        running_max = std::max(running_max, x);
    }
    ++count;
    running_mean += (x - running_mean) / static_cast<double>(count);
}

void SurrogateConfig::validate() const
{
    if (!(eta >= 0.0)) throw InvalidConfig("surrogate eta must be nonnegative");
    if (ma_window <= 0) throw InvalidConfig("surrogate ma_window must be positive");
}

double certainty_score(double kl, RunningNorm& norm)
{
    if (kl < 0.0 || std::isnan(kl)) throw NegativeKL("kl = " + std::to_string(kl));
    const double scale = std::max(norm.running_mean, kMeanFloor);
    const double score = 1.0 / (1.0 + kl / scale);
    norm.observe(kl);
    return score;
}

double composite_reward(double true_reward_normalized, double certainty_ma, const SurrogateConfig& config)
{
    return (true_reward_normalized + config.eta * certainty_ma) / (1.0 + config.eta);
}

double normalize_reward(double raw, RunningNorm& norm, bool clip)
{
    double scaled = 0.5;
    if (norm.count > 0) {
        const double range = norm.running_max - norm.running_min;
        if (range > 0.0)
            scaled = (raw - norm.running_min) / range;
        else if (raw > norm.running_max)
            scaled = 1.0;
        else if (raw < norm.running_min)
            scaled = 0.0;
    }
    norm.observe(raw);
    return clip ? std::clamp(scaled, 0.0, 1.0) : scaled;
}

double moving_average(std::span<const double> values, int window)
{
    if (values.empty()) throw EmptySequence("moving average of an empty sequence");
    if (window <= 0) throw InvalidConfig("moving average window must be positive");
    const std::size_t n = std::min(values.size(), static_cast<std::size_t>(window));
    const auto tail = values.last(n);
    return std::accumulate(tail.begin(), tail.end(), 0.0) / static_cast<double>(n);
}

CertaintyAverager::CertaintyAverager(int window) : window_(window)
{
    if (window <= 0) throw InvalidConfig("moving average window must be positive");
}

double CertaintyAverager::push(double score)
{
    recent_.push_back(score);
    if (recent_.size() > static_cast<std::size_t>(window_)) recent_.pop_front();
    return value();
}

double CertaintyAverager::value() const
{
    if (recent_.empty()) throw EmptySequence("no certainty scores yet");
    // Summed oldest-first so the result matches moving_average bit for bit.
    return std::accumulate(recent_.begin(), recent_.end(), 0.0) / static_cast<double>(recent_.size());
}

}  // namespace banditrl
