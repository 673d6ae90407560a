#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "banditrl/environments.hpp"
#include "banditrl/mlp.hpp"
#include "banditrl/rng.hpp"

namespace banditrl {

enum class OptimizerKind { Sgd, Adam };

/// Hyperparameters of one arm. Together they encode its inductive bias.
struct AgentConfig {
    std::string label;
    std::vector<int> hidden_layers;
    double learning_rate = 1e-3;
    double discount = 0.99;
    double epsilon_start = 1.0;
    double epsilon_end = 0.05;
    int epsilon_decay_steps = 5000;
    int replay_capacity = 10000;
    int batch_size = 32;
    int target_sync_interval = 100;  // in updates
    int update_interval = 1;         // environment steps per TD update
    OptimizerKind optimizer = OptimizerKind::Adam;
    bool use_bias = true;

    /// Throws InvalidConfig when a field is out of range.
    void validate() const;

    bool operator==(const AgentConfig&) const = default;
};

/// Fixed-capacity FIFO of transitions.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity);

    void push(Transition t);
    std::size_t size() const { return items_.size(); }
    std::size_t capacity() const { return capacity_; }
    /// i-th oldest stored transition.
    const Transition& at(std::size_t i) const;

private:
    std::size_t capacity_;
    std::size_t head_ = 0;  // slot of the oldest item once full
    std::vector<Transition> items_;
};

enum class ActMode { Explore, Greedy };

/// DQN-style agent: ReLU Q-network, target network, replay buffer and an
/// epsilon-greedy behaviour policy with linear decay.
class Agent {
public:
    Agent(AgentConfig config, EnvSpec spec, std::uint64_t seed);

    const AgentConfig& config() const { return config_; }
    const mlp::Shape& shape() const { return shape_; }

    /// Greedy ties go to the lowest action index.
    int act(std::span<const double> state, ActMode mode);
    std::vector<double> q_values(std::span<const double> state) const;
    double epsilon() const;

    void observe(Transition t);

    /// One TD step on a uniformly sampled minibatch; returns the loss before
    /// the step. Throws InsufficientData while the buffer holds fewer than
    /// batch_size transitions.
    double update();

    /// Mean of 0.5 * (Q(s,a) - y)^2 with y = r + discount * max_a' Q_target(s', a')
    /// (no bootstrap on done). Adds dLoss/dParams into grad when given.
    double td_loss(std::span<const Transition> batch, std::vector<double>* grad = nullptr) const;

    std::span<double> q_params() { return q_params_; }
    std::span<const double> q_params() const { return q_params_; }
    std::span<const double> target_params() const { return target_params_; }
    void sync_target();

    const ReplayBuffer& replay() const { return replay_; }
    std::int64_t steps_seen() const { return steps_seen_; }
    std::int64_t updates_done() const { return updates_done_; }

    /// Hash of the learnable parameters, for frozen-arm checks.
    std::uint64_t parameter_hash() const;

private:
    void apply_gradient(const std::vector<double>& grad);
    double td_loss_refs(std::span<const Transition* const> batch, std::vector<double>* grad) const;

    AgentConfig config_;
    EnvSpec spec_;
    mlp::Shape shape_;
    std::vector<double> q_params_;
    std::vector<double> target_params_;
    std::vector<double> adam_m_;
    std::vector<double> adam_v_;
    ReplayBuffer replay_;
    Rng rng_;
    std::int64_t steps_seen_ = 0;
    std::int64_t updates_done_ = 0;

    // Scratch buffers reused across updates.
    std::vector<const Transition*> batch_;
    std::vector<double> grad_;
    mutable mlp::Trace single_trace_;
    mutable mlp::BatchTrace trace_, target_trace_;
    mutable std::vector<double> states_, next_states_, grad_out_;
};

/// The four-arm pool shipped for an environment: a well-tuned config, a
/// wider network, an aggressive learning rate and a crippled (lr = 0) arm.
std::vector<AgentConfig> default_pool(EnvKind kind);

}  // namespace banditrl
