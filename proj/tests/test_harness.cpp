#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "banditrl/aggregate.hpp"
#include "banditrl/errors.hpp"
#include "banditrl/harness.hpp"

using namespace banditrl;
namespace fs = std::filesystem;

namespace {

ExperimentConfig small_config(const std::string& out)
{
    auto c = parse_config(R"(
env = noisychain
window_episodes = 3
total_windows = 8
n_runs = 2
calibration_runs = 1
strategies = ucb1,uniform,exp3,best,worst
)");
    c.output_dir = fs::path(::testing::TempDir()) / out;
    fs::remove_all(c.output_dir);
    return c;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::string first_line(const fs::path& p)
{
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    return line;
}

}  // namespace

TEST(Harness, RunSeedsAreDistinct)
{
    EXPECT_NE(run_seed(1, 0), run_seed(1, 1));
    EXPECT_NE(run_seed(1, 0), run_seed(2, 0));
}

TEST(Harness, RunWindowTouchesOnlyChosenArm)
{
    auto config = small_config("unused");
    RunState state(config, 0, run_seed(1, 0));
    Rng picks(3);
    for (int w = 0; w < 12; ++w) {
        const int arm = static_cast<int>(picks.below(state.arms().size()));
        std::vector<std::uint64_t> before;
        std::vector<VariationalParams> dyn_before;
        for (const auto& a : state.arms()) {
            before.push_back(a.agent.parameter_hash());
            dyn_before.push_back(a.dynamics);
        }
        const auto rec = run_window(arm, state, 2);
        EXPECT_EQ(rec.episode_returns.size(), 2u);
        EXPECT_GE(rec.mean_info_gain, 0.0);
        for (std::size_t i = 0; i < state.arms().size(); ++i) {
            if (static_cast<int>(i) == arm) continue;
            ASSERT_EQ(state.arms()[i].agent.parameter_hash(), before[i]);
            ASSERT_EQ(state.arms()[i].dynamics, dyn_before[i]);
        }
    }
    EXPECT_THROW(run_window(9, state, 1), InvalidAction);
}

TEST(Harness, SingleEpisodeWindow)
{
    auto config = small_config("unused");
    RunState state(config, 0, run_seed(1, 0));
    const auto dyn = state.arms()[0].dynamics;
    const auto rec = run_window(0, state, 1);
    EXPECT_EQ(rec.episode_returns.size(), 1u);
    EXPECT_EQ(state.episodes_run(), 1);
    EXPECT_EQ(rec.mean_info_gain, posterior_kl(state.arms()[0].dynamics, dyn));
}

TEST(Harness, RunWindowIsDeterministic)
{
    auto config = small_config("unused");
    RunState a(config, 0, run_seed(5, 0)), b(config, 0, run_seed(5, 0));
    for (int arm : {0, 2, 2, 1, 0}) ASSERT_EQ(run_window(arm, a, 2), run_window(arm, b, 2));
}

TEST(Harness, CrippledArmDoesNotLearnOnNoisyChain)
{
    auto config = small_config("unused");
    RunState state(config, 0, run_seed(1, 0));
    const auto hash = state.arms()[3].agent.parameter_hash();
    for (int w = 0; w < 20; ++w) run_window(3, state, 5);
    EXPECT_EQ(state.arms()[3].agent.parameter_hash(), hash);
}

TEST(Harness, RunSingleInvariants)
{
    auto config = small_config("unused");
    config.surrogate.eta = 0.7;
    for (const auto& name : {"ucb1", "uniform", "exp3", "fixed2"}) {
        const auto r = run_single(config, 0, config.resolve_strategy(name));
        ASSERT_EQ(r.windows.size(), static_cast<std::size_t>(config.total_windows));
        std::int64_t episodes = 0;
        double total = 0.0, composite = 0.0;
        for (const auto& w : r.windows) {
            episodes += static_cast<std::int64_t>(w.episode_returns.size());
            for (double x : w.episode_returns) total += x;
            composite += w.composite_reward;
            ASSERT_GE(w.composite_reward, 0.0);
            ASSERT_LE(w.composite_reward, 1.0);
            ASSERT_GE(w.normalized_return, 0.0);
            ASSERT_LE(w.normalized_return, 1.0);
            ASSERT_GT(w.certainty_ma, 0.0);
            ASSERT_LE(w.certainty_ma, 1.0);
            ASSERT_EQ(w.episode_returns.size(), static_cast<std::size_t>(config.window_episodes));
        }
        EXPECT_EQ(episodes, r.total_episodes);
        EXPECT_EQ(r.total_episodes, static_cast<std::int64_t>(config.total_windows) * config.window_episodes);
        EXPECT_EQ(total, r.cumulative_true_reward);
        EXPECT_EQ(composite, r.cumulative_composite_reward);
    }
    const auto fixed = run_single(config, 1, config.resolve_strategy("fixed2"));
    for (const auto& w : fixed.windows) EXPECT_EQ(w.chosen_arm, 2);
    EXPECT_EQ(fixed.recommended_arm, 2);
}

TEST(Harness, EtaZeroFeedsNormalizedReward)
{
    auto config = small_config("unused");
    config.surrogate.eta = 0.0;
    const auto r = run_single(config, 0, config.resolve_strategy("ucb1"));
    for (std::size_t i = 0; i < r.windows.size(); ++i) {
        EXPECT_EQ(r.windows[i].composite_reward, r.windows[i].normalized_return);
        EXPECT_EQ(r.pulls[i].reward, r.windows[i].normalized_return);
    }
}

TEST(Harness, UniformStrategySpreadsPulls)
{
    auto config = parse_config("env = noisychain\nwindow_episodes = 1\ntotal_windows = 800\nstrategies = uniform");
    const auto r = run_single(config, 0, config.resolve_strategy("uniform"));
    std::vector<double> counts(4, 0.0);
    for (const auto& w : r.windows) counts[static_cast<std::size_t>(w.chosen_arm)] += 1;
    const double sd = std::sqrt(800 * 0.25 * 0.75);
    for (double c : counts) EXPECT_NEAR(c, 200.0, 3 * sd);
}

TEST(Harness, CalibrationSingleArmAndTies)
{
    auto config = small_config("unused");
    config.total_windows = 4;
    auto single = config;
    single.arms.resize(1);
    const auto one = calibrate_oracle(single);
    EXPECT_EQ(one.oracle_arm, 0);
    EXPECT_EQ(one.worst_arm, 0);

    // A random walker never reaches the MountainCar goal within the cap, so
    // identical frozen arms tie exactly at -200.
    auto flat = parse_config("env = mountaincar\nwindow_episodes = 1\ntotal_windows = 4\ncalibration_runs = 1\nn_runs = 1");
    const auto crippled = default_pool(EnvKind::MountainCar)[3];
    flat.arms = {crippled, crippled, crippled};
    const auto tie = calibrate_oracle(flat);
    EXPECT_EQ(tie.arm_means, (std::vector<double>{-200.0, -200.0, -200.0}));
    EXPECT_EQ(tie.oracle_arm, 0);
    EXPECT_EQ(tie.worst_arm, 0);
}

TEST(Harness, ExperimentOutputsAndReproducibility)
{
    auto first = small_config("exp_a");
    const auto rows = run_experiment(first);
    EXPECT_EQ(rows.size(), static_cast<std::size_t>(first.n_runs) * first.strategies.size());

    const fs::path dir = first.output_dir;
    for (const char* f : {"summary.csv", "arms.csv", "calibration.csv", "config.resolved"}) EXPECT_TRUE(fs::exists(dir / f)) << f;

    // Calibrated config pins best/worst and arm means for regret.
    const auto resolved = load_config(dir / "config.resolved");
    ASSERT_TRUE(resolved.oracle_arm);
    ASSERT_TRUE(resolved.worst_arm);
    ASSERT_EQ(resolved.arm_means.size(), resolved.arms.size());
    for (const auto& row : rows) {
        ASSERT_TRUE(row.cumulative_regret);
        EXPECT_GE(*row.cumulative_regret, 0.0);
        if (row.strategy == "best") {
            EXPECT_EQ(row.recommended_arm, *resolved.oracle_arm);
            EXPECT_EQ(*row.cumulative_regret, 0.0);
        }
        const auto windows = read_window_csv(window_csv_path(dir, row.run_id, row.strategy));
        ASSERT_EQ(windows.size(), static_cast<std::size_t>(first.total_windows));
        std::int64_t episodes = 0;
        for (const auto& w : windows) {
            episodes += static_cast<std::int64_t>(w.episode_returns.size());
            ASSERT_GE(w.composite_reward, 0.0);
            ASSERT_LE(w.composite_reward, 1.0);
            if (row.strategy == "best") {
                ASSERT_EQ(w.chosen_arm, *resolved.oracle_arm);
            }
        }
        EXPECT_EQ(episodes, row.total_episodes);
    }

    auto second = small_config("exp_b");
    run_experiment(second);
    std::size_t compared = 0;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (entry.path().extension() != ".csv") continue;
        const auto rel = fs::relative(entry.path(), dir);
        ASSERT_EQ(slurp(entry.path()), slurp(second.output_dir / rel)) << rel;
        ++compared;
    }
    EXPECT_EQ(compared, 3 + rows.size());
}

TEST(Harness, CsvRoundTrip)
{
    auto config = small_config("unused");
    const auto r = run_single(config, 1, config.resolve_strategy("exp3"));
    const fs::path path = fs::path(::testing::TempDir()) / "roundtrip.csv";
    {
        std::ofstream out(path);
        write_window_csv(out, r.windows);
    }
    EXPECT_EQ(read_window_csv(path), r.windows);
}

TEST(Harness, CsvSchemasMatchGoldenFile)
{
    auto config = small_config("schema");
    run_experiment(config);
    write_aggregate(config.output_dir, aggregate(config.output_dir));

    std::ifstream golden(BANDITRL_GOLDEN_DIR "/schemas.txt");
    ASSERT_TRUE(golden);
    std::string file, header;
    int checked = 0;
    while (golden >> file >> header) {
        EXPECT_EQ(first_line(config.output_dir / file), header) << file;
        ++checked;
    }
    EXPECT_EQ(checked, 9);
    EXPECT_EQ(std::string(kWindowCsvHeader), first_line(config.output_dir / "runs/run_001_exp3.csv"));
}

TEST(Harness, InvalidConfigRejectedBeforeRunning)
{
    auto config = small_config("bad");
    config.n_runs = 0;
    EXPECT_THROW(run_experiment(config), ConfigError);
}

TEST(Harness, UnwritableOutputDirectory)
{
    auto config = small_config("unused");
    const fs::path blocker = fs::path(::testing::TempDir()) / "blocker_file";
    std::ofstream(blocker) << "x";
    config.output_dir = blocker / "sub";
    EXPECT_THROW(run_experiment(config), IoError);
}
