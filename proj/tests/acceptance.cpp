#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>

#include "banditrl/aggregate.hpp"
#include "banditrl/dynamics.hpp"
#include "banditrl/harness.hpp"
#include "banditrl/text.hpp"
#include "oracles.hpp"

using namespace banditrl;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Context {
    fs::path out;
};

VariationalParams single_weight(double mu, double sigma)
{
    VariationalParams p;
    p.layer_sizes = {1, 1};
    p.prior_std = 1.0;
    p.mu = {mu, 0.0};
    p.rho = {inverse_softplus(sigma), inverse_softplus(1.0)};
    return p;
}

VariationalParams random_params(std::vector<int> sizes, Rng& r)
{
    auto p = init_variational(std::move(sizes), 0.3 + r.uniform(), r.next_u64());
    for (std::size_t i = 0; i < p.size(); ++i) {
        p.mu[i] += 0.3 * r.normal();
        p.rho[i] += 0.5 * r.normal();
    }
    return p;
}

DynamicsBatch random_batch(const VariationalParams& p, int rows, Rng& r)
{
    DynamicsBatch b;
    for (int i = 0; i < rows; ++i) {
        std::vector<double> in(static_cast<std::size_t>(p.layer_sizes.front()));
        std::vector<double> out(static_cast<std::size_t>(p.layer_sizes.back()));
        for (auto& x : in) x = r.normal();
        for (auto& y : out) y = r.normal();
        b.inputs.push_back(in);
        b.targets.push_back(out);
    }
    return b;
}

std::vector<std::vector<int>> shipped_dynamics_shapes()
{
    std::vector<std::vector<int>> shapes;
    for (EnvKind k : {EnvKind::CartPole, EnvKind::MountainCar, EnvKind::NoisyChain}) {
        const EnvSpec s = spec(k);
        std::vector<int> layers{s.state_dim + s.action_count};
        const DynamicsConfig defaults;
        layers.insert(layers.end(), defaults.hidden_layers.begin(), defaults.hidden_layers.end());
        layers.push_back(s.state_dim);
        shapes.push_back(layers);
    }
    return shapes;
}

// Independent closed form: sum of KL(N(mu, s^2) || N(0, p^2)).
double kl_to_prior_oracle(const VariationalParams& p)
{
    double total = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double s = std::log1p(std::exp(p.rho[i]));
        total += std::log(p.prior_std / s) + (s * s + p.mu[i] * p.mu[i]) / (2 * p.prior_std * p.prior_std) - 0.5;
    }
    return total;
}

Outcome exact_math(const Context&)
{
    Rng r(101);
    int kl_self_nonzero = 0;
    for (const auto& shape : shipped_dynamics_shapes()) {
        for (int i = 0; i < 10; ++i) {
            const auto p = random_params(shape, r);
            if (posterior_kl(p, p) != 0.0) ++kl_self_nonzero;
        }
    }
    const double e = std::exp(1.0);
    const double err1 = std::abs(posterior_kl(single_weight(1, 1), single_weight(0, 1)) -
                                 oracle::kl_by_quadrature(1, 1, 0, 1));
    const double err2 = std::abs(posterior_kl(single_weight(0, e), single_weight(0, 1)) -
                                 oracle::kl_by_quadrature(0, e, 0, 1));
    int identity_failures = 0;
    for (int i = 0; i < 100; ++i) {
        const auto p = random_params({4, 5, 3}, r);
        const auto batch = random_batch(p, 1 + static_cast<int>(r.below(6)), r);
        const auto est = elbo(p, batch, 1 + static_cast<int>(r.below(4)), r.next_u64());
        const double kl = kl_to_prior_oracle(p);
        const bool ok = est.value == est.log_likelihood_term - est.kl_to_prior_term &&
                        std::abs(est.kl_to_prior_term - kl) <= 1e-12 * std::max(1.0, kl);
        identity_failures += ok ? 0 : 1;
    }
    std::ostringstream d;
    d << "self-KL nonzero " << kl_self_nonzero << "/30, KL example errors " << err1 << ", " << err2
      << ", identity failures " << identity_failures << "/100";
    return {kl_self_nonzero == 0 && err1 < 1e-9 && err2 < 1e-9 && identity_failures == 0, d.str()};
}

Outcome gradients(const Context&)
{
    Rng r(202);
    std::size_t checked = 0, bad = 0;
    for (const auto& shape : shipped_dynamics_shapes()) {
        const auto p = init_variational(shape, DynamicsConfig{}.prior_std, r.next_u64());
        const auto batch = random_batch(p, 6, r);
        const std::uint64_t noise = r.next_u64();
        const auto [value, grad] = elbo_with_gradient(p, batch, 2, noise);
        (void)value;
        const std::size_t n = p.size();
        std::vector<double> x(p.mu);
        x.insert(x.end(), p.rho.begin(), p.rho.end());
        std::vector<double> analytic(grad.mu);
        analytic.insert(analytic.end(), grad.rho.begin(), grad.rho.end());
        const auto f = [&](const std::vector<double>& v) {
            VariationalParams q = p;
            std::copy(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n), q.mu.begin());
            std::copy(v.begin() + static_cast<std::ptrdiff_t>(n), v.end(), q.rho.begin());
            return elbo(q, batch, 2, noise).value;
        };
        bad += oracle::check_gradient(f, x, analytic).size();
        checked += x.size();
    }
    for (EnvKind k : {EnvKind::CartPole, EnvKind::MountainCar, EnvKind::NoisyChain}) {
        const EnvSpec s = spec(k);
        for (const auto& c : default_pool(k)) {
            Agent a(c, s, r.next_u64());
            for (auto& w : a.q_params()) w += 0.05 * r.normal();
            std::vector<Transition> batch;
            for (int i = 0; i < 8; ++i) {
                std::vector<double> s0(static_cast<std::size_t>(s.state_dim)), s1(s0.size());
                for (auto& v : s0) v = r.normal();
                for (auto& v : s1) v = r.normal();
                batch.push_back({s0, static_cast<int>(r.below(s.action_count)), s1, r.uniform(), r.bernoulli(0.2)});
            }
            std::vector<double> grad;
            a.td_loss(batch, &grad);
            const std::vector<double> x(a.q_params().begin(), a.q_params().end());
            const auto f = [&](const std::vector<double>& v) {
                std::copy(v.begin(), v.end(), a.q_params().begin());
                return a.td_loss(batch);
            };
            bad += oracle::check_gradient(f, x, grad).size();
            checked += x.size();
        }
    }
    std::ostringstream d;
    d << bad << " of " << checked << " gradient components outside relative 1e-4";
    return {bad == 0, d.str()};
}

Bandit play(const std::vector<double>& means, int horizon, std::uint64_t seed, std::vector<PullRecord>* history)
{
    Bandit b(Strategy::UCB1, static_cast<int>(means.size()), {}, seed);
    Rng env(derive_seed(seed, "bernoulli"));
    for (int t = 0; t < horizon; ++t) {
        const int arm = b.select();
        const double x = env.bernoulli(means[static_cast<std::size_t>(arm)]) ? 1.0 : 0.0;
        b.update(arm, x);
        if (history) history->push_back({t, arm, x});
    }
    return b;
}

Outcome bandit_correctness(const Context&)
{
    const std::vector<double> means{0.9, 0.5, 0.1};
    int hits = 0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const auto b = play(means, 2000, seed, nullptr);
        const auto& counts = b.counts();
        const auto most = std::max_element(counts.begin(), counts.end()) - counts.begin();
        hits += most == 0;
    }
    double short_regret = 0.0, long_regret = 0.0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        std::vector<PullRecord> h1, h8;
        play(means, 1000, 5000 + seed, &h1);
        play(means, 8000, 9000 + seed, &h8);
        short_regret += regret(h1, means) / 1000 / 100;
        long_regret += regret(h8, means) / 8000 / 100;
    }
    std::ostringstream d;
    d << "best arm most pulled in " << hits << "/200 runs; per-round regret T=1000 " << short_regret
      << ", T=8000 " << long_regret << " (ratio " << long_regret / short_regret << ")";
    return {hits >= 190 && long_regret < 0.5 * short_regret, d.str()};
}

ExperimentConfig load_shipped(const std::string& name, const fs::path& out)
{
    auto config = load_config(fs::path(BANDITRL_CONFIG_DIR) / name);
    config.output_dir = out;
    fs::remove_all(out);
    return config;
}

// Windows until the series covers 80% of its first-to-final change.
std::size_t reach_from_start(std::vector<double> values)
{
    const double first = values.front();
    for (auto& v : values) v -= first;
    return windows_to_reach(values, 0.8);
}

Outcome noisychain_certainty(const Context& ctx)
{
    auto config = load_shipped("noisychain_certainty.cfg", ctx.out / "noisychain_certainty");
    run_experiment(config);
    const auto tables = aggregate(config.output_dir);
    write_aggregate(config.output_dir, tables);
    std::vector<double> reward, certainty;
    for (const auto& row : tables.series) {
        if (row.strategy != "fixed0") continue;
        reward.push_back(row.true_reward_smoothed);
        certainty.push_back(row.certainty_smoothed);
    }
    const auto r = pearson(reward, certainty);
    const auto reach_certainty = windows_to_reach(certainty, 0.8);
    const auto reach_reward = windows_to_reach(reward, 0.8);
    std::ostringstream d;
    d << "pearson r " << (r ? format_double(*r) : std::string("undefined")) << " over " << reward.size()
      << " windows; 80% of final reached at window " << reach_certainty << " (certainty) vs " << reach_reward
      << " (true reward); measured from the first window instead: " << reach_from_start(certainty) << " vs "
      << reach_from_start(reward);
    return {r && *r > 0.5 && reach_certainty < reach_reward, d.str()};
}

std::vector<int> ranking(const std::vector<double>& values)
{
    std::vector<int> order(values.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return values[static_cast<std::size_t>(a)] > values[static_cast<std::size_t>(b)];
    });
    return order;
}

Outcome cartpole_ranking(const Context& ctx)
{
    auto config = load_shipped("cartpole_ranking.cfg", ctx.out / "cartpole_ranking");
    run_experiment(config);
    const auto tables = aggregate(config.output_dir);
    write_aggregate(config.output_dir, tables);
    std::vector<double> true_totals(config.arms.size()), composite_totals(config.arms.size());
    for (const auto& row : tables.surrogate_totals) {
        true_totals.at(static_cast<std::size_t>(row.arm)) = row.mean_cumulative_true_reward;
        composite_totals.at(static_cast<std::size_t>(row.arm)) = row.mean_cumulative_composite_reward;
    }
    const auto by_true = ranking(true_totals);
    const auto by_composite = ranking(composite_totals);
    std::ostringstream d;
    d << "ranking by true reward";
    for (int a : by_true) d << ' ' << config.arms[static_cast<std::size_t>(a)].label;
    d << ", by composite";
    for (int a : by_composite) d << ' ' << config.arms[static_cast<std::size_t>(a)].label;
    d << " (composite";
    for (double c : composite_totals) d << ' ' << format_double(c);
    d << ')';
    return {by_true == by_composite, d.str()};
}

double welch_p(const std::vector<double>& a, const std::vector<double>& b)
{
    const auto moments = [](const std::vector<double>& v) {
        double m = 0.0;
        for (double x : v) m += x;
        m /= static_cast<double>(v.size());
        double s = 0.0;
        for (double x : v) s += (x - m) * (x - m);
        return std::pair{m, s / static_cast<double>(v.size() - 1)};
    };
    const auto [ma, va] = moments(a);
    const auto [mb, vb] = moments(b);
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    const double se2 = va / na + vb / nb;
    if (se2 == 0.0) return ma == mb ? 1.0 : 0.0;
    const double t = (ma - mb) / std::sqrt(se2);
    const double df = se2 * se2 / ((va / na) * (va / na) / (na - 1) + (vb / nb) * (vb / nb) / (nb - 1));
    boost::math::students_t dist(df);
    return 2 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

Outcome cartpole_bandits(const Context& ctx)
{
    auto config = load_shipped("cartpole_bandits.cfg", ctx.out / "cartpole_bandits");
    const auto rows = run_experiment(config);
    write_aggregate(config.output_dir, aggregate(config.output_dir));
    const auto resolved = load_config(config.output_dir / "config.resolved");
    const int oracle_arm = resolved.oracle_arm.value();

    std::map<std::string, std::vector<double>> totals;
    int ucb_hits = 0, ucb_runs = 0;
    for (const auto& row : rows) {
        totals[row.strategy].push_back(row.cumulative_true_reward);
        if (row.strategy == "ucb1") {
            ++ucb_runs;
            ucb_hits += row.recommended_arm == oracle_arm;
        }
    }
    const auto mean = [&](const std::string& s) {
        double m = 0.0;
        for (double x : totals.at(s)) m += x;
        return m / static_cast<double>(totals.at(s).size());
    };
    const double best = mean("best"), ucb = mean("ucb1"), uniform = mean("uniform"), worst = mean("worst");
    const double p = welch_p(totals.at("ucb1"), totals.at("uniform"));
    const double hit_rate = static_cast<double>(ucb_hits) / ucb_runs;
    std::ostringstream d;
    d << "oracle arm " << oracle_arm << " (" << resolved.arms[static_cast<std::size_t>(oracle_arm)].label
      << "); UCB1 recommends it in " << ucb_hits << "/" << ucb_runs << " runs; mean cumulative true reward best "
      << best << ", ucb1 " << ucb << ", uniform " << uniform << ", worst " << worst << "; ucb1 vs uniform p = " << p;
    const bool ordered = best >= ucb && ucb > uniform && uniform > worst;
    return {hit_rate >= 0.8 && ordered && p < 0.05, d.str()};
}

Outcome eta_zero(const Context&)
{
    auto config = parse_config("env = cartpole\nwindow_episodes = 2\ntotal_windows = 12\nsurrogate.eta = 0\n");
    std::size_t compared = 0, mismatched = 0;
    for (const std::string name : {"ucb1", "epsilon_greedy", "softmax", "exp3", "uniform"}) {
        for (int run = 0; run < 2; ++run) {
            const auto result = run_single(config, run, config.resolve_strategy(name));
            std::ostringstream csv;
            write_window_csv(csv, result.windows);
            std::istringstream in(csv.str());
            std::string line;
            std::getline(in, line);
            for (std::size_t w = 0; std::getline(in, line); ++w) {
                const auto f = split(line, ',');
                const bool logged = f.at(7) == f.at(10);
                const bool fed = result.pulls.at(w).reward == result.windows.at(w).normalized_return;
                mismatched += logged && fed ? 0 : 1;
                ++compared;
            }
        }
    }
    std::ostringstream d;
    d << mismatched << " of " << compared << " windows where bandit input or logged composite differs from the"
      << " normalized reward";
    return {compared > 0 && mismatched == 0, d.str()};
}

std::map<std::string, std::string> csv_files(const fs::path& dir)
{
    std::map<std::string, std::string> files;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".csv") continue;
        std::ifstream in(entry.path(), std::ios::binary);
        std::ostringstream s;
        s << in.rdbuf();
        files[fs::relative(entry.path(), dir).generic_string()] = s.str();
    }
    return files;
}

Outcome reproducibility(const Context& ctx)
{
    const fs::path first = ctx.out / "cartpole_bandits";
    if (!fs::exists(first / "summary.csv")) {
        auto config = load_shipped("cartpole_bandits.cfg", first);
        run_experiment(config);
        write_aggregate(first, aggregate(first));
    }
    auto config = load_shipped("cartpole_bandits.cfg", ctx.out / "cartpole_bandits_rerun");
    run_experiment(config);
    write_aggregate(config.output_dir, aggregate(config.output_dir));
    const auto a = csv_files(first);
    const auto b = csv_files(config.output_dir);
    std::size_t differing = 0;
    for (const auto& [name, content] : a) {
        const auto it = b.find(name);
        differing += it == b.end() || it->second != content;
    }
    std::ostringstream d;
    d << a.size() << " CSV files in first run, " << b.size() << " in rerun, " << differing << " differ";
    return {!a.empty() && a.size() == b.size() && differing == 0, d.str()};
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Acceptance checks"};
    std::string out = "acceptance_out";
    std::vector<int> only;
    app.add_option("--out", out, "Scratch directory for experiment output");
    app.add_option("--only", only, "Criteria to run (default: all)");
    CLI11_PARSE(app, argc, argv);

    struct Criterion {
        int id;
        const char* name;
        double budget_seconds;
        std::function<Outcome(const Context&)> check;
    };
    const std::vector<Criterion> criteria = {
        {1, "exact math", 1, exact_math},
        {2, "gradients", 10, gradients},
        {3, "bandit correctness", 30, bandit_correctness},
        {4, "certainty tracks true reward on NoisyChain", 600, noisychain_certainty},
        {5, "composite ranking equals true ranking on CartPole", 1800, cartpole_ranking},
        {6, "UCB1 matches the oracle arm on CartPole", 7200, cartpole_bandits},
        {7, "eta = 0 feeds the normalized reward", 60, eta_zero},
        {8, "byte-identical rerun", 7200, reproducibility},
    };

    const Context ctx{out};
    fs::create_directories(ctx.out);
    int failures = 0;
    for (const auto& c : criteria) {
        if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome outcome;
        try {
            outcome = c.check(ctx);
        } catch (const std::exception& e) {
            outcome = {false, std::string("exception: ") + e.what()};
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_time = seconds < c.budget_seconds;
        const bool pass = outcome.pass && in_time;
        failures += pass ? 0 : 1;
        std::cout << (pass ? "PASS" : "FAIL") << "  criterion " << c.id << " (" << c.name << "): " << outcome.detail
                  << "; " << format_double(std::round(seconds * 100) / 100) << " s of " << c.budget_seconds << " s"
                  << (in_time ? "" : " (over budget)") << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
