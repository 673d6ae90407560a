#include "banditrl/harness.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <mutex>
#include <numeric>
#include <ostream>
#include <thread>

#include "banditrl/errors.hpp"
#include "banditrl/text.hpp"

namespace banditrl {

namespace fs = std::filesystem;

std::uint64_t run_seed(std::uint64_t master_seed, int run_id)
{
    return derive_seed(master_seed, "run", static_cast<std::uint64_t>(run_id));
}

RunState::RunState(const ExperimentConfig& config, int run_id, std::uint64_t seed)
    : config_(config), run_id_(run_id), run_seed_(seed), env_(config.env)
{
    const EnvSpec env_spec = env_.env_spec();
    std::vector<int> layers;
    layers.push_back(env_spec.state_dim + env_spec.action_count);
    layers.insert(layers.end(), config.dynamics.hidden_layers.begin(), config.dynamics.hidden_layers.end());
    layers.push_back(env_spec.state_dim);

    arms_.reserve(config.arms.size());
    for (std::size_t i = 0; i < config.arms.size(); ++i) {
        arms_.push_back(ArmState{
            Agent(config.arms[i], env_spec, derive_seed(seed, "agent", i)),
            init_variational(layers, config.dynamics.prior_std, derive_seed(seed, "dynamics-init", i)),
            RunningNorm{},
            CertaintyAverager(config.surrogate.ma_window),
            Rng(derive_seed(seed, "dynamics-train", i)),
        });
    }
}

std::uint64_t RunState::next_episode_seed()
{
    return derive_seed(run_seed_, "episode", static_cast<std::uint64_t>(episodes_run_++));
}

double run_episode(ArmState& arm, Environment& env, std::uint64_t reset_seed)
{
    auto state = env.reset(reset_seed);
    const auto batch_size = static_cast<std::size_t>(arm.agent.config().batch_size);
    double total = 0.0;
    while (true) {
        const int action = arm.agent.act(state, ActMode::Explore);
        Transition t = env.step(action);
        total += t.reward;
        const bool done = t.done;
        state = t.next_state;
        arm.agent.observe(std::move(t));
        if (arm.agent.replay().size() >= batch_size &&
            arm.agent.steps_seen() % arm.agent.config().update_interval == 0)
            arm.agent.update();
        if (done) break;
    }
    return total;
}

double train_dynamics(ArmState& arm, const DynamicsConfig& config, int action_count)
{
    const auto& replay = arm.agent.replay();
    if (replay.size() == 0) return 0.0;
    const VariationalParams before = arm.dynamics;
    DynamicsBatch batch;
    batch.inputs.resize(static_cast<std::size_t>(config.batch_size));
    batch.targets.resize(static_cast<std::size_t>(config.batch_size));
    for (int step = 0; step < config.train_steps; ++step) {
        for (std::size_t r = 0; r < batch.size(); ++r) {
            const Transition& t = replay.at(arm.dynamics_rng.below(replay.size()));
            batch.inputs[r] = dynamics_input(t.state, t.action, action_count);
            batch.targets[r] = t.next_state;
        }
        auto [updated, estimate] =
            train_step(arm.dynamics, batch, config.learning_rate, arm.dynamics_rng.next_u64(), config.obs_std);
        arm.dynamics = std::move(updated);
    }
    return posterior_kl(arm.dynamics, before);
}

WindowRecord run_window(int arm_index, RunState& state, int window_episodes)
{
    auto& arms = state.arms();
    if (arm_index < 0 || static_cast<std::size_t>(arm_index) >= arms.size())
        throw InvalidAction("arm " + std::to_string(arm_index) + " out of range");
    if (window_episodes < 1) throw InvalidConfig("window_episodes must be positive");

    ArmState& arm = arms[static_cast<std::size_t>(arm_index)];
    const auto& config = state.config();
    const int action_count = state.env().env_spec().action_count;

    WindowRecord record;
    record.run_id = state.run_id();
    record.chosen_arm = arm_index;
    record.arm_label = arm.agent.config().label;
    double info_gain = 0.0;
    for (int e = 0; e < window_episodes; ++e) {
        record.episode_returns.push_back(run_episode(arm, state.env(), state.next_episode_seed()));
        const double kl = train_dynamics(arm, config.dynamics, action_count);
        info_gain += kl;
        record.certainty_ma = arm.certainty.push(certainty_score(kl, arm.kl_norm));
    }
    record.mean_return = std::accumulate(record.episode_returns.begin(), record.episode_returns.end(), 0.0) /
                         static_cast<double>(window_episodes);
    record.mean_info_gain = info_gain / static_cast<double>(window_episodes);
    return record;
}

void score_window(WindowRecord& record, RunState& state, const SurrogateConfig& surrogate)
{
    record.normalized_return = normalize_reward(record.mean_return, state.reward_norm(), surrogate.clip);
    record.composite_reward = composite_reward(record.normalized_return, record.certainty_ma, surrogate);
}

RunResult run_single(const ExperimentConfig& config, int run_id, const StrategySpec& strategy)
{
    RunState state(config, run_id, run_seed(config.master_seed, run_id));
    BanditHyper hyper = config.bandit;
    hyper.fixed_index = strategy.fixed_index;
    Bandit bandit(strategy.strategy, static_cast<int>(config.arms.size()), hyper,
                  derive_seed(run_seed(config.master_seed, run_id), "bandit:" + strategy.name));

    RunResult result;
    for (int w = 0; w < config.total_windows; ++w) {
        const int arm = bandit.select();
        WindowRecord record = run_window(arm, state, config.window_episodes);
        record.window_index = w;
        record.strategy = strategy.name;
        score_window(record, state, config.surrogate);
        // Without clipping the composite can leave [0, 1]; the bandit still
        // needs a bounded reward.
        bandit.update(arm, std::clamp(record.composite_reward, 0.0, 1.0));

        result.pulls.push_back({w, arm, record.composite_reward});
        result.total_episodes += static_cast<std::int64_t>(record.episode_returns.size());
        for (double r : record.episode_returns) result.cumulative_true_reward += r;
        result.cumulative_composite_reward += record.composite_reward;
        result.windows.push_back(std::move(record));
    }
    result.recommended_arm = bandit.recommend();
    return result;
}

namespace {

// Runs jobs [0, count) on a small pool; rethrows the first failure.
template <typename Job>
void parallel_for(int count, int threads, Job job)
{
    if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    threads = std::min(threads, count);
    if (threads <= 1) {
        for (int i = 0; i < count; ++i) job(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (int i = next++; i < count; i = next++) {
                try {
                    job(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

std::ofstream open_output(const fs::path& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    return out;
}

}  // namespace

CalibrationResult calibrate_oracle(const ExperimentConfig& config)
{
    const int arm_count = static_cast<int>(config.arms.size());
    const int runs = config.effective_calibration_runs();
    const int quarter = std::max(1, config.total_windows / 4);
    std::vector<double> final_quarter(static_cast<std::size_t>(arm_count * runs), 0.0);

    parallel_for(arm_count * runs, config.threads, [&](int job) {
        const int arm = job / runs;
        const int run = job % runs;
        RunState state(config, run, derive_seed(config.master_seed, "calibration", static_cast<std::uint64_t>(run)));
        double tail = 0.0;
        for (int w = 0; w < config.total_windows; ++w) {
            const WindowRecord record = run_window(arm, state, config.window_episodes);
            if (w >= config.total_windows - quarter) tail += record.mean_return;
        }
        final_quarter[static_cast<std::size_t>(job)] = tail / quarter;
    });

    CalibrationResult result;
    for (int arm = 0; arm < arm_count; ++arm) {
        double sum = 0.0;
        for (int run = 0; run < runs; ++run) sum += final_quarter[static_cast<std::size_t>(arm * runs + run)];
        result.arm_means.push_back(sum / runs);
    }
    const auto& m = result.arm_means;
    result.oracle_arm = static_cast<int>(std::max_element(m.begin(), m.end()) - m.begin());
    result.worst_arm = static_cast<int>(std::min_element(m.begin(), m.end()) - m.begin());
    return result;
}

ExperimentConfig pin_calibration(ExperimentConfig config, const CalibrationResult& calibration)
{
    config.oracle_arm = calibration.oracle_arm;
    config.worst_arm = calibration.worst_arm;
    config.arm_means = calibration.arm_means;
    return config;
}

fs::path window_csv_path(const fs::path& out, int run_id, const std::string& strategy)
{
    char id[16];
    std::snprintf(id, sizeof id, "%03d", run_id);
    return out / "runs" / ("run_" + std::string(id) + "_" + strategy + ".csv");
}

void write_window_csv(std::ostream& os, const std::vector<WindowRecord>& windows)
{
    os << kWindowCsvHeader << '\n';
    for (const auto& w : windows) {
        os << w.run_id << ',' << w.window_index << ',' << w.strategy << ',' << w.chosen_arm << ','
           << w.arm_label << ',';
        for (std::size_t i = 0; i < w.episode_returns.size(); ++i) {
            if (i) os << ';';
            os << format_double(w.episode_returns[i]);
        }
        os << ',' << format_double(w.mean_return) << ',' << format_double(w.normalized_return) << ','
           << format_double(w.mean_info_gain) << ',' << format_double(w.certainty_ma) << ','
           << format_double(w.composite_reward) << '\n';
    }
}

void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows)
{
    os << kSummaryCsvHeader << '\n';
    for (const auto& r : rows) {
        os << r.run_id << ',' << r.strategy << ',' << r.recommended_arm << ',' << r.recommended_label << ','
           << r.total_episodes << ',' << format_double(r.cumulative_true_reward) << ','
           << format_double(r.cumulative_composite_reward) << ','
           << (r.cumulative_regret ? format_double(*r.cumulative_regret) : "") << '\n';
    }
}

std::vector<SummaryRow> run_experiment(ExperimentConfig config)
{
    config.validate();
    const fs::path out = config.output_dir;
    std::error_code ec;
    fs::create_directories(out / "runs", ec);
    if (ec) throw IoError("cannot create " + (out / "runs").string() + ": " + ec.message());

    if (config.needs_calibration()) {
        const auto calibration = calibrate_oracle(config);
        config = pin_calibration(std::move(config), calibration);
        auto cal = open_output(out / "calibration.csv");
        cal << kCalibrationCsvHeader << '\n';
        for (std::size_t i = 0; i < config.arms.size(); ++i) {
            const int arm = static_cast<int>(i);
            const char* role = arm == calibration.oracle_arm ? "best"
                               : arm == calibration.worst_arm ? "worst"
                                                              : "";
            cal << i << ',' << config.arms[i].label << ',' << format_double(calibration.arm_means[i]) << ','
                << role << '\n';
        }
    }
    const auto strategies = config.resolved_strategies();

    open_output(out / "config.resolved") << to_text(config);
    {
        auto arms = open_output(out / "arms.csv");
        arms << "arm,arm_label\n";
        for (std::size_t i = 0; i < config.arms.size(); ++i) arms << i << ',' << config.arms[i].label << '\n';
    }

    const int n_strategies = static_cast<int>(strategies.size());
    std::vector<SummaryRow> rows(static_cast<std::size_t>(config.n_runs * n_strategies));
    parallel_for(config.n_runs * n_strategies, config.threads, [&](int job) {
        const int run_id = job / n_strategies;
        const auto& strategy = strategies[static_cast<std::size_t>(job % n_strategies)];
        const RunResult result = run_single(config, run_id, strategy);

        auto csv = open_output(window_csv_path(out, run_id, strategy.name));
        write_window_csv(csv, result.windows);
        if (!csv) throw IoError("write failed for run " + std::to_string(run_id));

        SummaryRow& row = rows[static_cast<std::size_t>(job)];
        row.run_id = run_id;
        row.strategy = strategy.name;
        row.recommended_arm = result.recommended_arm;
        row.recommended_label = config.arms[static_cast<std::size_t>(result.recommended_arm)].label;
        row.total_episodes = result.total_episodes;
        row.cumulative_true_reward = result.cumulative_true_reward;
        row.cumulative_composite_reward = result.cumulative_composite_reward;
        if (!config.arm_means.empty()) row.cumulative_regret = regret(result.pulls, config.arm_means);
    });

    auto summary = open_output(out / "summary.csv");
    write_summary_csv(summary, rows);
    if (!summary) throw IoError("write failed for summary.csv");
    return rows;
}

}  // namespace banditrl
