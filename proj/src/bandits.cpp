#include "banditrl/bandits.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "banditrl/errors.hpp"

namespace banditrl {

namespace {
// EXP3 weights are rescaled only past this bound so small-horizon updates
// stay literal.
constexpr double kWeightCeiling = 1e100;
}  // namespace

std::string_view to_string(Strategy strategy)
{
    switch (strategy) {
    case Strategy::EpsilonGreedy: return "epsilon_greedy";
    case Strategy::Softmax: return "softmax";
    case Strategy::UCB1: return "ucb1";
    case Strategy::EXP3: return "exp3";
    case Strategy::Uniform: return "uniform";
    case Strategy::FixedArm: return "fixed";
    }
    return "unknown";
}

Strategy strategy_from_string(std::string_view name)
{
    for (auto s : {Strategy::EpsilonGreedy, Strategy::Softmax, Strategy::UCB1, Strategy::EXP3,
                   Strategy::Uniform, Strategy::FixedArm})
        if (to_string(s) == name) return s;
    throw ConfigError("unknown bandit strategy '" + std::string(name) + "'");
}

void BanditHyper::validate(int arm_count) const
{
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw InvalidConfig("epsilon must lie in [0, 1]");
    if (!(tau > 0.0)) throw InvalidConfig("softmax temperature must be positive");
    if (!(ucb_c >= 0.0)) throw InvalidConfig("ucb_c must be nonnegative");
    if (!(exp3_gamma > 0.0 && exp3_gamma <= 1.0)) throw InvalidConfig("exp3_gamma must lie in (0, 1]");
    if (fixed_index < 0 || fixed_index >= arm_count) throw InvalidConfig("fixed_index out of range");
}

Bandit::Bandit(Strategy strategy, int arm_count, BanditHyper hyper, std::uint64_t seed)
    : strategy_(strategy), hyper_(hyper), rng_(derive_seed(seed, "bandit"))
{
    if (arm_count < 1) throw InvalidConfig("bandit needs at least one arm");
    hyper_.validate(arm_count);
    counts_.assign(static_cast<std::size_t>(arm_count), 0);
    means_.assign(static_cast<std::size_t>(arm_count), 0.0);
    weights_.assign(static_cast<std::size_t>(arm_count), 1.0);
}

int Bandit::greedy_arm() const
{
    return static_cast<int>(std::max_element(means_.begin(), means_.end()) - means_.begin());
}

int Bandit::ucb_arm() const
{
    for (std::size_t i = 0; i < counts_.size(); ++i)
        if (counts_[i] == 0) return static_cast<int>(i);
    const double log_t = std::log(static_cast<double>(t_));
    int best = 0;
    double best_index = -HUGE_VAL;
    for (std::size_t i = 0; i < counts_.size(); ++i) {
        const double index =
            means_[i] + hyper_.ucb_c * std::sqrt(2.0 * log_t / static_cast<double>(counts_[i]));
        if (index > best_index) {
            best_index = index;
            best = static_cast<int>(i);
        }
    }
    return best;
}

std::vector<double> Bandit::probabilities() const
{
    const std::size_t k = counts_.size();
    const double kd = static_cast<double>(k);
    std::vector<double> p(k, 0.0);
    switch (strategy_) {
    case Strategy::EpsilonGreedy:
        for (auto& x : p) x = hyper_.epsilon / kd;
        p[static_cast<std::size_t>(greedy_arm())] += 1.0 - hyper_.epsilon;
        break;
    case Strategy::Softmax: {
        const double top = *std::max_element(means_.begin(), means_.end());
        double total = 0.0;
        for (std::size_t i = 0; i < k; ++i) total += p[i] = std::exp((means_[i] - top) / hyper_.tau);
        for (auto& x : p) x /= total;
        break;
    }
    case Strategy::EXP3: {
        double total = 0.0;
        for (double w : weights_) total += w;
        for (std::size_t i = 0; i < k; ++i)
            p[i] = (1.0 - hyper_.exp3_gamma) * weights_[i] / total + hyper_.exp3_gamma / kd;
        break;
    }
    case Strategy::Uniform:
        for (auto& x : p) x = 1.0 / kd;
        break;
    case Strategy::UCB1: p[static_cast<std::size_t>(ucb_arm())] = 1.0; break;
    case Strategy::FixedArm: p[static_cast<std::size_t>(hyper_.fixed_index)] = 1.0; break;
    }
    return p;
}

int Bandit::sample(const std::vector<double>& p)
{
    const double u = rng_.uniform();
    double cumulative = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        cumulative += p[i];
        if (u < cumulative) return static_cast<int>(i);
    }
    // Rounding left u above the final cumulative sum.
    for (std::size_t i = p.size(); i-- > 0;)
        if (p[i] > 0.0) return static_cast<int>(i);
    return 0;
}

int Bandit::select()
{
    switch (strategy_) {
    case Strategy::EpsilonGreedy:
        if (rng_.uniform() < hyper_.epsilon) return static_cast<int>(rng_.below(counts_.size()));
        return greedy_arm();
    case Strategy::Uniform: return static_cast<int>(rng_.below(counts_.size()));
    case Strategy::UCB1: return ucb_arm();
    case Strategy::FixedArm: return hyper_.fixed_index;
    case Strategy::Softmax:
    case Strategy::EXP3: return sample(probabilities());
    }
    return 0;
}

void Bandit::update(int arm, double reward)
{
    if (arm < 0 || arm >= arm_count()) throw InvalidAction("arm " + std::to_string(arm) + " out of range");
    if (!(reward >= 0.0 && reward <= 1.0))
        throw RewardOutOfRange("reward " + std::to_string(reward) + " outside [0, 1]");
    const auto i = static_cast<std::size_t>(arm);

    if (strategy_ == Strategy::EXP3) {
        const double p = probabilities()[i];
        const double estimate = reward / p;
        weights_[i] *= std::exp(hyper_.exp3_gamma * estimate / static_cast<double>(counts_.size()));
        const double top = *std::max_element(weights_.begin(), weights_.end());
        if (top > kWeightCeiling)
            for (auto& w : weights_) w = std::max(w / top, 1e-300);
    }

    ++counts_[i];
    means_[i] += (reward - means_[i]) / static_cast<double>(counts_[i]);
    ++t_;
}

int Bandit::recommend() const
{
    if (t_ < arm_count())
        throw InsufficientPulls("t = " + std::to_string(t_) + " < K = " + std::to_string(arm_count()));
    int best = 0;
    for (std::size_t i = 1; i < counts_.size(); ++i) {
        const auto b = static_cast<std::size_t>(best);
        if (counts_[i] > counts_[b] || (counts_[i] == counts_[b] && means_[i] > means_[b]))
            best = static_cast<int>(i);
    }
    return best;
}

double regret(std::span<const PullRecord> history, std::span<const double> arm_means)
{
    if (arm_means.empty()) throw InvalidConfig("regret needs arm means");
    const double best = *std::max_element(arm_means.begin(), arm_means.end());
    double total = 0.0;
    for (const auto& pull : history) {
        if (pull.arm < 0 || static_cast<std::size_t>(pull.arm) >= arm_means.size())
            throw InvalidAction("pull of unknown arm " + std::to_string(pull.arm));
        total += best - arm_means[static_cast<std::size_t>(pull.arm)];
    }
    return total;
}

}  // namespace banditrl
