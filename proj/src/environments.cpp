#include "banditrl/environments.hpp"

#include <algorithm>
#include <cmath>

#include "banditrl/errors.hpp"

namespace banditrl {

std::string_view to_string(EnvKind kind)
{
    switch (kind) {
    case EnvKind::CartPole: return "cartpole";
    case EnvKind::MountainCar: return "mountaincar";
    case EnvKind::NoisyChain: return "noisychain";
    }
    return "unknown";
}

EnvKind env_kind_from_string(std::string_view name)
{
    if (name == "cartpole") return EnvKind::CartPole;
    if (name == "mountaincar") return EnvKind::MountainCar;
    if (name == "noisychain") return EnvKind::NoisyChain;
    throw ConfigError("unknown environment '" + std::string(name) + "'");
}

EnvSpec spec(EnvKind kind)
{
    switch (kind) {
    case EnvKind::CartPole: return {4, 2, 0.0, 1.0, 200};
    case EnvKind::MountainCar: return {2, 3, -1.0, 0.0, 200};
    case EnvKind::NoisyChain: return {1, 2, 0.0, noisy_chain::goal_reward, 12};
    }
    throw ConfigError("unknown environment kind");
}

namespace noisy_chain {

double transition_probability(int from, int action, int to)
{
    const auto target = [from](int direction) { return std::clamp(from + direction, 0, states - 1); };
    const int intended = action == 1 ? 1 : -1;
    double p = 0.0;
    if (target(intended) == to) p += 1.0 - slip;
    if (target(-intended) == to) p += slip;
    return p;
}

double encode(int index) { return static_cast<double>(index) / (states - 1); }

}  // namespace noisy_chain

Environment::Environment(EnvKind kind) : kind_(kind), spec_(banditrl::spec(kind))
{
    state_.assign(static_cast<std::size_t>(spec_.state_dim), 0.0);
}

std::vector<double> Environment::reset(std::uint64_t seed)
{
    rng_ = Rng(seed);
    step_count_ = 0;
    done_ = false;
    switch (kind_) {
    case EnvKind::CartPole:
        for (auto& x : state_) x = rng_.uniform(-cartpole::start_box, cartpole::start_box);
        break;
    case EnvKind::MountainCar:
        state_[0] = rng_.uniform(-0.6, -0.4);
        state_[1] = 0.0;
        break;
    case EnvKind::NoisyChain:
        chain_index_ = 0;
        state_[0] = noisy_chain::encode(chain_index_);
        break;
    }
    return state_;
}

void Environment::set_state(std::span<const double> state)
{
    if (state.size() != state_.size())
        throw DimensionMismatch("state has length " + std::to_string(state.size()));
    std::copy(state.begin(), state.end(), state_.begin());
    if (kind_ == EnvKind::NoisyChain) {
        chain_index_ = static_cast<int>(std::lround(state[0] * (noisy_chain::states - 1)));
        chain_index_ = std::clamp(chain_index_, 0, noisy_chain::states - 1);
        state_[0] = noisy_chain::encode(chain_index_);
    }
}

Transition Environment::step(int action)
{
    if (done_) throw StepAfterDone("reset() required before stepping");
    if (action < 0 || action >= spec_.action_count)
        throw InvalidAction("action " + std::to_string(action) + " not in [0, " +
                            std::to_string(spec_.action_count) + ")");

    Transition t;
    t.state = state_;
    t.action = action;
    const auto [reward, terminal] = advance(action);
    ++step_count_;
    // Truncation is treated exactly like termination.
    done_ = terminal || step_count_ >= spec_.max_episode_steps;
    t.next_state = state_;
    t.reward = reward;
    t.done = done_;
    return t;
}

std::pair<double, bool> Environment::advance(int action)
{
    switch (kind_) {
    case EnvKind::CartPole: {
        using namespace cartpole;
        double x = state_[0], x_dot = state_[1], theta = state_[2], theta_dot = state_[3];
        const double force = action == 1 ? force_mag : -force_mag;
        const double cos_theta = std::cos(theta);
        const double sin_theta = std::sin(theta);
        const double temp = (force + pole_mass_length * theta_dot * theta_dot * sin_theta) / total_mass;
        const double theta_acc = (gravity * sin_theta - cos_theta * temp) /
                                 (half_length * (4.0 / 3.0 - mass_pole * cos_theta * cos_theta / total_mass));
        const double x_acc = temp - pole_mass_length * theta_acc * cos_theta / total_mass;
        // Explicit Euler.
        x += tau * x_dot;
        x_dot += tau * x_acc;
        theta += tau * theta_dot;
        theta_dot += tau * theta_acc;
        state_ = {x, x_dot, theta, theta_dot};
        const bool fell = x < -x_threshold || x > x_threshold || theta < -theta_threshold ||
                          theta > theta_threshold;
        return {1.0, fell};
    }
    case EnvKind::MountainCar: {
        using namespace mountain_car;
        double position = state_[0], velocity = state_[1];
        velocity += (action - 1) * force - gravity * std::cos(3.0 * position);
        velocity = std::clamp(velocity, -max_speed, max_speed);
        position += velocity;
        position = std::clamp(position, min_position, max_position);
        if (position == min_position && velocity < 0.0) velocity = 0.0;
        state_ = {position, velocity};
        return {-1.0, position >= goal_position};
    }
    case EnvKind::NoisyChain: {
        using namespace noisy_chain;
        int direction = action == 1 ? 1 : -1;
        if (rng_.bernoulli(slip)) direction = -direction;
        chain_index_ = std::clamp(chain_index_ + direction, 0, states - 1);
        state_[0] = encode(chain_index_);
        const bool goal = chain_index_ == states - 1;
        return {goal ? goal_reward : 0.0, goal};
    }
    }
    return {0.0, true};
}

}  // namespace banditrl
