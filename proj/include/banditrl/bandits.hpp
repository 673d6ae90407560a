#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "banditrl/rng.hpp"

namespace banditrl {

enum class Strategy { EpsilonGreedy, Softmax, UCB1, EXP3, Uniform, FixedArm };

std::string_view to_string(Strategy strategy);
Strategy strategy_from_string(std::string_view name);

struct BanditHyper {
    double epsilon = 0.1;     // EpsilonGreedy exploration rate
    double tau = 0.1;         // Softmax temperature
    double ucb_c = 1.0;       // UCB1 exploration constant
    double exp3_gamma = 0.1;  // EXP3 uniform mixing
    int fixed_index = 0;      // FixedArm target

    void validate(int arm_count) const;
};

struct PullRecord {
    int round = 0;
    int arm = 0;
    double reward = 0.0;
};

/// Arm-selection state for one strategy. Rewards must lie in [0, 1].
class Bandit {
public:
    Bandit(Strategy strategy, int arm_count, BanditHyper hyper, std::uint64_t seed);

    Strategy strategy() const { return strategy_; }
    int arm_count() const { return static_cast<int>(counts_.size()); }

    int select();
    /// Throws RewardOutOfRange for rewards outside [0, 1] and InvalidAction
    /// for unknown arms.
    void update(int arm, double reward);

    /// Most-pulled arm; ties go to the higher empirical mean, then the lower
    /// index. Throws InsufficientPulls before K pulls.
    int recommend() const;

    /// Current sampling distribution of the randomized strategies. UCB1
    /// and FixedArm report a point mass on the arm they would pick.
    std::vector<double> probabilities() const;

    const std::vector<std::int64_t>& counts() const { return counts_; }
    const std::vector<double>& means() const { return means_; }
    const std::vector<double>& exp3_weights() const { return weights_; }
    std::int64_t t() const { return t_; }
    const BanditHyper& hyper() const { return hyper_; }

private:
    int greedy_arm() const;
    int ucb_arm() const;
    int sample(const std::vector<double>& p);

    Strategy strategy_;
    BanditHyper hyper_;
    Rng rng_;
    std::vector<std::int64_t> counts_;
    std::vector<double> means_;
    std::vector<double> weights_;
    std::int64_t t_ = 0;
};

/// Sum over rounds of (best arm mean - chosen arm mean).
double regret(std::span<const PullRecord> history, std::span<const double> arm_means);

}  // namespace banditrl
