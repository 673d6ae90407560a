#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "banditrl/agents.hpp"
#include "banditrl/bandits.hpp"
#include "banditrl/config.hpp"
#include "banditrl/dynamics.hpp"
#include "banditrl/environments.hpp"
#include "banditrl/surrogate.hpp"

namespace banditrl {

/// One bandit round.
struct WindowRecord {
    int run_id = 0;
    int window_index = 0;
    std::string strategy;
    int chosen_arm = 0;
    std::string arm_label;
    std::vector<double> episode_returns;
    double mean_return = 0.0;
    double normalized_return = 0.0;
    double mean_info_gain = 0.0;
    double certainty_ma = 0.0;
    double composite_reward = 0.0;

    bool operator==(const WindowRecord&) const = default;
};

/// Everything one arm owns: its agent, its dynamics posterior and the
/// statistics behind its certainty score.
struct ArmState {
    Agent agent;
    VariationalParams dynamics;
    RunningNorm kl_norm;
    CertaintyAverager certainty;
    Rng dynamics_rng;
};

/// Mutable state of one (run, strategy) pair.
class RunState {
public:
    RunState(const ExperimentConfig& config, int run_id, std::uint64_t run_seed);

    const ExperimentConfig& config() const { return config_; }
    int run_id() const { return run_id_; }
    Environment& env() { return env_; }
    std::vector<ArmState>& arms() { return arms_; }
    const std::vector<ArmState>& arms() const { return arms_; }
    RunningNorm& reward_norm() { return reward_norm_; }

    /// Seed of the next episode's reset; one fresh seed per episode.
    std::uint64_t next_episode_seed();
    std::int64_t episodes_run() const { return episodes_run_; }

private:
    const ExperimentConfig& config_;
    int run_id_;
    std::uint64_t run_seed_;
    Environment env_;
    std::vector<ArmState> arms_;
    RunningNorm reward_norm_;  // shared by all arms so rewards stay comparable
    std::int64_t episodes_run_ = 0;
};

/// Seed of a run; every strategy of the same run starts from identical arms
/// and episode seeds.
std::uint64_t run_seed(std::uint64_t master_seed, int run_id);

/// Play one full episode with the arm's agent (explore mode, TD update
/// after every step once the buffer allows it). Returns the episode return.
double run_episode(ArmState& arm, Environment& env, std::uint64_t reset_seed);

/// Train the arm's dynamics model on its replay data and return the
/// information gain KL(q_after || q_before).
double train_dynamics(ArmState& arm, const DynamicsConfig& config, int action_count);

/// Run window_episodes episodes with arm `arm`. Fills every field except
/// normalized_return and composite_reward, which depend on the bandit's
/// reward normalizer. Only the chosen arm's state changes.
WindowRecord run_window(int arm, RunState& state, int window_episodes);

/// Bandit reward of a finished window: normalize the mean return against
/// the run's shared extrema, then mix in the certainty moving average.
void score_window(WindowRecord& record, RunState& state, const SurrogateConfig& surrogate);

struct RunResult {
    std::vector<WindowRecord> windows;
    int recommended_arm = 0;
    std::int64_t total_episodes = 0;
    double cumulative_true_reward = 0.0;
    double cumulative_composite_reward = 0.0;
    std::vector<PullRecord> pulls;
};

/// One (run, strategy) experiment without any file output.
RunResult run_single(const ExperimentConfig& config, int run_id, const StrategySpec& strategy);

struct SummaryRow {
    int run_id = 0;
    std::string strategy;
    int recommended_arm = 0;
    std::string recommended_label;
    std::int64_t total_episodes = 0;
    double cumulative_true_reward = 0.0;
    double cumulative_composite_reward = 0.0;
    std::optional<double> cumulative_regret;  // needs arm_means
};

struct CalibrationResult {
    int oracle_arm = 0;
    int worst_arm = 0;
    std::vector<double> arm_means;  // mean return over the final quarter of windows
};

/// Train every arm alone for total_windows x window_episodes episodes over
/// the calibration seeds. Ties go to the lowest index for both best and worst.
CalibrationResult calibrate_oracle(const ExperimentConfig& config);

/// Copy of config with the calibration pinned in.
ExperimentConfig pin_calibration(ExperimentConfig config, const CalibrationResult& calibration);

/// Run every (run, strategy) pair and write
///   <out>/config.resolved, <out>/arms.csv, <out>/summary.csv,
///   <out>/runs/run_<id>_<strategy>.csv
/// Calibrates first when a best/worst strategy has no pinned arm. Returns the summary
/// rows ordered by (run_id, strategy order in the config).
std::vector<SummaryRow> run_experiment(ExperimentConfig config);

inline constexpr const char* kWindowCsvHeader =
    "run_id,window_index,strategy,chosen_arm,arm_label,episode_returns,mean_return,normalized_return,"
    "mean_info_gain,certainty_ma,composite_reward";
inline constexpr const char* kSummaryCsvHeader =
    "run_id,strategy,recommended_arm,recommended_label,total_episodes,cumulative_true_reward,"
    "cumulative_composite_reward,cumulative_regret";
inline constexpr const char* kCalibrationCsvHeader = "arm,arm_label,final_quarter_mean_return,role";

void write_window_csv(std::ostream& os, const std::vector<WindowRecord>& windows);
void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows);
std::filesystem::path window_csv_path(const std::filesystem::path& out, int run_id, const std::string& strategy);

}  // namespace banditrl
