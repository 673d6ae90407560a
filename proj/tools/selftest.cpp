#include <cmath>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "banditrl/agents.hpp"
#include "banditrl/bandits.hpp"
#include "banditrl/dynamics.hpp"
#include "banditrl/environments.hpp"
#include "banditrl/surrogate.hpp"

namespace {

using namespace banditrl;

VariationalParams single_weight(double mu, double sigma)
{
    VariationalParams p;
    p.layer_sizes = {1, 1};
    p.prior_std = 1.0;
    p.mu = {mu, 0.0};
    p.rho = {inverse_softplus(sigma), inverse_softplus(1.0)};
    return p;
}

bool elbo_gradient_matches()
{
    auto params = init_variational({3, 4, 1}, 1.0, 7);
    DynamicsBatch batch;
    Rng rng(3);
    for (int r = 0; r < 5; ++r) {
        batch.inputs.push_back({rng.normal(), 1.0, 0.0});
        batch.targets.push_back({rng.normal()});
    }
    const auto [value, grad] = elbo_with_gradient(params, batch, 4, 11);
    const double h = 1e-6;
    for (std::size_t i = 0; i < params.size(); ++i) {
        for (auto* field : {&params.mu, &params.rho}) {
            const double saved = (*field)[i];
            (*field)[i] = saved + h;
            const double up = elbo(params, batch, 4, 11).value;
            (*field)[i] = saved - h;
            const double down = elbo(params, batch, 4, 11).value;
            (*field)[i] = saved;
            const double fd = (up - down) / (2 * h);
            const double analytic = field == &params.mu ? grad.mu[i] : grad.rho[i];
            if (std::abs(fd - analytic) > 1e-4 * std::max({std::abs(fd), std::abs(analytic), 1e-2}))
                return false;
        }
    }
    return true;
}

}  // namespace

int run_selftest(std::ostream& os)
{
    const std::vector<std::pair<std::string, std::function<bool()>>> checks = {
        {"posterior_kl of identical posteriors is zero",
         [] {
             const auto p = init_variational({3, 8, 2}, 1.0, 1);
             return posterior_kl(p, p) == 0.0;
         }},
        {"KL(N(1,1) || N(0,1)) = 0.5",
         [] { return std::abs(posterior_kl(single_weight(1, 1), single_weight(0, 1)) - 0.5) < 1e-12; }},
        {"KL(N(0,e^2) || N(0,1)) = e^2/2 - 3/2",
         [] {
             const double e = std::exp(1.0);
             return std::abs(posterior_kl(single_weight(0, e), single_weight(0, 1)) - (e * e / 2 - 1.5)) < 1e-12;
         }},
        {"ELBO reparameterization gradient matches finite differences", elbo_gradient_matches},
        {"UCB1 index example picks arm 0",
         [] {
             Bandit b(Strategy::UCB1, 2, {}, 1);
             b.update(0, 0.5);
             b.update(1, 0.2);
             return b.select() == 0;
         }},
        {"EXP3 weight update multiplies by e^0.1",
         [] {
             BanditHyper h;
             h.exp3_gamma = 0.1;
             Bandit b(Strategy::EXP3, 2, h, 1);
             b.update(0, 1.0);
             return std::abs(b.exp3_weights()[0] - std::exp(0.1)) < 1e-12;
         }},
        {"MountainCar velocity update",
         [] {
             Environment env(EnvKind::MountainCar);
             env.reset(0);
             const std::vector<double> start{-0.5, 0.0};
             env.set_state(start);
             const auto t = env.step(2);
             return std::abs(t.next_state[1] - (0.001 - 0.0025 * std::cos(-1.5))) < 1e-15;
         }},
        {"environment reset is deterministic",
         [] {
             Environment a(EnvKind::CartPole), b(EnvKind::CartPole);
             return a.reset(42) == b.reset(42);
         }},
        {"composite reward example",
         [] {
             SurrogateConfig c;
             c.eta = 1.0;
             return std::abs(composite_reward(0.4, 0.8, c) - 0.6) < 1e-15;
         }},
    };

    int failures = 0;
    for (const auto& [name, check] : checks) {
        bool ok = false;
        try {
            ok = check();
        } catch (const std::exception&) {
            ok = false;
        }
        os << (ok ? "PASS  " : "FAIL  ") << name << '\n';
        failures += ok ? 0 : 1;
    }
    os << (failures == 0 ? "selftest passed" : "selftest FAILED") << '\n';
    return failures == 0 ? 0 : 1;
}
