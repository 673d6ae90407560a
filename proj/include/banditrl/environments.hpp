#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "banditrl/rng.hpp"

namespace banditrl {

enum class EnvKind { CartPole, MountainCar, NoisyChain };

std::string_view to_string(EnvKind kind);
EnvKind env_kind_from_string(std::string_view name);

/// Static description of an environment kind.
struct EnvSpec {
    int state_dim;
    int action_count;
    double reward_min;
    double reward_max;
    int max_episode_steps;
};

/// One environment interaction.
struct Transition {
    std::vector<double> state;
    int action = 0;
    std::vector<double> next_state;
    double reward = 0.0;
    bool done = false;

    bool operator==(const Transition&) const = default;
};

EnvSpec spec(EnvKind kind);

/// Classic-control constants. Values follow the usual Gym formulations.
namespace cartpole {
inline constexpr double gravity = 9.8;
inline constexpr double mass_cart = 1.0;
inline constexpr double mass_pole = 0.1;
inline constexpr double total_mass = mass_cart + mass_pole;
inline constexpr double half_length = 0.5;
inline constexpr double pole_mass_length = mass_pole * half_length;
inline constexpr double force_mag = 10.0;
inline constexpr double tau = 0.02;
inline constexpr double theta_threshold = 12.0 * 2.0 * 3.14159265358979323846 / 360.0;
inline constexpr double x_threshold = 2.4;
inline constexpr double start_box = 0.05;
}  // namespace cartpole

namespace mountain_car {
inline constexpr double min_position = -1.2;
inline constexpr double max_position = 0.6;
inline constexpr double max_speed = 0.07;
inline constexpr double goal_position = 0.5;
inline constexpr double force = 0.001;
inline constexpr double gravity = 0.0025;
}  // namespace mountain_car

// 5-state chain. Action 1 moves right, 0 moves left; with probability
// slip the opposite move happens. Walls reflect. Entering the last state
// ends the episode with reward 1.
namespace noisy_chain {
inline constexpr int states = 5;
inline constexpr double slip = 0.2;
inline constexpr double goal_reward = 1.0;

/// Exact probability of landing in `to` from `from` under `action`.
double transition_probability(int from, int action, int to);
/// Observation of chain index i: i / (states - 1).
double encode(int index);
}  // namespace noisy_chain

/// Seeded environment instance. Not thread-safe; distinct instances are
/// independent.
class Environment {
public:
    explicit Environment(EnvKind kind);

    EnvKind kind() const { return kind_; }
    const EnvSpec& env_spec() const { return spec_; }

    /// Start a new episode. Identical seeds give identical start states.
    std::vector<double> reset(std::uint64_t seed);

    /// Advance one step. Throws StepAfterDone after termination (or before
    /// the first reset) and InvalidAction for actions out of range.
    Transition step(int action);

    std::span<const double> state() const { return state_; }
    int step_count() const { return step_count_; }
    bool done() const { return done_; }

    /// Overwrite the physical state. Intended for tests and oracles.
    void set_state(std::span<const double> state);

private:
    // Returns (reward, terminal) after updating state_ in place.
    std::pair<double, bool> advance(int action);

    EnvKind kind_;
    EnvSpec spec_;
    Rng rng_;
    std::vector<double> state_;
    int chain_index_ = 0;
    int step_count_ = 0;
    bool done_ = true;
};

}  // namespace banditrl
