#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "banditrl/aggregate.hpp"
#include "banditrl/errors.hpp"
#include "banditrl/harness.hpp"
#include "banditrl/text.hpp"

int run_selftest(std::ostream& os);

namespace {

struct Overrides {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<int> runs;
    std::optional<std::string> strategies;
};

void add_common(CLI::App* cmd, Overrides& o)
{
    cmd->add_option("--config", o.config_path, "Experiment config file (key = value)")->check(CLI::ExistingFile);
    cmd->add_option("--seed", o.seed, "Override master_seed");
    cmd->add_option("--out", o.out, "Override output_dir");
    cmd->add_option("--runs", o.runs, "Override n_runs");
    cmd->add_option("--strategies", o.strategies, "Comma-separated strategy list");
}

banditrl::ExperimentConfig resolve(const Overrides& o)
{
    using namespace banditrl;
    ExperimentConfig config = o.config_path.empty() ? parse_config("") : load_config(o.config_path);
    if (o.seed) config.master_seed = *o.seed;
    if (o.out) config.output_dir = *o.out;
    if (o.runs) config.n_runs = *o.runs;
    if (o.strategies) config.strategies = split(*o.strategies, ',');
    config.validate();
    return config;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Bandit selection over reinforcement-learning agents"};
    app.require_subcommand(1);

    Overrides calibrate_opts, run_opts;
    auto* calibrate = app.add_subcommand("calibrate", "Train each arm alone and pin the best/worst arms");
    add_common(calibrate, calibrate_opts);
    auto* run = app.add_subcommand("run", "Run every (run, strategy) pair and write CSV logs");
    add_common(run, run_opts);

    std::string aggregate_dir;
    auto* aggregate = app.add_subcommand("aggregate", "Summarize an output directory");
    aggregate->add_option("--out", aggregate_dir, "Output directory of a finished run")->required();

    app.add_subcommand("selftest", "Quick numerical self-checks");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*calibrate) {
            auto config = resolve(calibrate_opts);
            const auto result = banditrl::calibrate_oracle(config);
            config = banditrl::pin_calibration(std::move(config), result);
            for (std::size_t i = 0; i < config.arms.size(); ++i)
                std::cout << i << ' ' << config.arms[i].label << ' ' << banditrl::format_double(result.arm_means[i])
                          << '\n';
            std::cout << "oracle_arm = " << result.oracle_arm << "\nworst_arm = " << result.worst_arm << '\n';
            std::filesystem::create_directories(config.output_dir);
            const auto path = config.output_dir / "config.calibrated";
            std::ofstream(path) << banditrl::to_text(config);
            std::cout << "pinned config written to " << path.string() << '\n';
        } else if (*run) {
            const auto rows = banditrl::run_experiment(resolve(run_opts));
            std::cout << rows.size() << " summary rows written to "
                      << (resolve(run_opts).output_dir / "summary.csv").string() << '\n';
        } else if (*aggregate) {
            const auto tables = banditrl::aggregate(aggregate_dir);
            banditrl::write_aggregate(aggregate_dir, tables);
            std::cout << "aggregate tables written to "
                      << (std::filesystem::path(aggregate_dir) / "aggregate").string() << '\n';
        } else {
            return run_selftest(std::cout);
        }
    } catch (const banditrl::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
