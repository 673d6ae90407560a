#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "banditrl/agents.hpp"
#include "banditrl/bandits.hpp"
#include "banditrl/environments.hpp"
#include "banditrl/surrogate.hpp"

namespace banditrl {

/// Dynamics-model architecture and training schedule, shared by all arms.
struct DynamicsConfig {
    std::vector<int> hidden_layers = {32};
    double prior_std = 0.1;
    double obs_std = 0.1;
    double learning_rate = 1e-5;
    int train_steps = 10;  // gradient steps after every episode
    int batch_size = 32;

    void validate() const;
};

/// A strategy as named in the config: a bandit strategy, or a fixed-arm
/// baseline ("best", "worst", "fixed<k>").
struct StrategySpec {
    std::string name;
    Strategy strategy = Strategy::Uniform;
    int fixed_index = 0;
};

struct ExperimentConfig {
    EnvKind env = EnvKind::CartPole;
    std::vector<AgentConfig> arms;
    std::vector<std::string> strategies = {"ucb1", "epsilon_greedy", "softmax", "exp3", "uniform", "best", "worst"};
    int window_episodes = 10;
    int total_windows = 100;
    int n_runs = 20;
    int calibration_runs = 0;  // 0: same as n_runs
    std::uint64_t master_seed = 1;
    SurrogateConfig surrogate;
    DynamicsConfig dynamics;
    BanditHyper bandit;
    std::optional<int> oracle_arm;  // empty: calibrate before running
    std::optional<int> worst_arm;
    std::vector<double> arm_means;  // reference per-arm returns used for regret
    std::filesystem::path output_dir = "out";
    int threads = 0;  // 0: hardware concurrency

    /// Throws ConfigError on inconsistent settings.
    void validate() const;

    /// True when "best" or "worst" is requested but no oracle is pinned.
    bool needs_calibration() const;

    int effective_calibration_runs() const { return calibration_runs > 0 ? calibration_runs : n_runs; }

    /// Resolve a strategy name. "best"/"worst" need the oracle/worst arm.
    StrategySpec resolve_strategy(std::string_view name) const;
    std::vector<StrategySpec> resolved_strategies() const;
};

/// Parse the flat "key = value" format. Unknown keys are errors. When no
/// arm.* keys are given the default pool for the environment is used.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Inverse of parse_config; every key is written out explicitly.
std::string to_text(const ExperimentConfig& config);

}  // namespace banditrl
