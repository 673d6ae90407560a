#include "banditrl/agents.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "banditrl/errors.hpp"

namespace banditrl {

namespace {
constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;
}  // namespace

void AgentConfig::validate() const
{
    const auto fail = [this](const std::string& what) {
        throw InvalidConfig("arm '" + label + "': " + what);
    };
    for (int h : hidden_layers)
        if (h <= 0) fail("hidden layer sizes must be positive");
    if (!(learning_rate >= 0.0)) fail("learning_rate must be nonnegative");
    if (!(discount > 0.0 && discount <= 1.0)) fail("discount must lie in (0, 1]");
    if (!(epsilon_start >= 0.0 && epsilon_start <= 1.0)) fail("epsilon_start must lie in [0, 1]");
    if (!(epsilon_end >= 0.0 && epsilon_end <= 1.0)) fail("epsilon_end must lie in [0, 1]");
    if (epsilon_end > epsilon_start) fail("epsilon_end exceeds epsilon_start");
    if (epsilon_decay_steps <= 0) fail("epsilon_decay_steps must be positive");
    if (replay_capacity <= 0) fail("replay_capacity must be positive");
    if (batch_size <= 0) fail("batch_size must be positive");
    if (batch_size > replay_capacity) fail("batch_size exceeds replay_capacity");
    if (target_sync_interval <= 0) fail("target_sync_interval must be positive");
    if (update_interval <= 0) fail("update_interval must be positive");
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) { items_.reserve(std::min<std::size_t>(capacity, 4096)); }

void ReplayBuffer::push(Transition t)
{
    if (items_.size() < capacity_) {
        items_.push_back(std::move(t));
        return;
    }
    items_[head_] = std::move(t);
    head_ = (head_ + 1) % capacity_;
}

const Transition& ReplayBuffer::at(std::size_t i) const { return items_[(head_ + i) % items_.size()]; }

Agent::Agent(AgentConfig config, EnvSpec spec, std::uint64_t seed)
    : config_(std::move(config)),
      spec_(spec),
      replay_(static_cast<std::size_t>(std::max(config_.replay_capacity, 1))),
      rng_(derive_seed(seed, "agent-policy"))
{
    config_.validate();
    shape_.sizes.push_back(spec_.state_dim);
    shape_.sizes.insert(shape_.sizes.end(), config_.hidden_layers.begin(), config_.hidden_layers.end());
    shape_.sizes.push_back(spec_.action_count);
    shape_.bias = config_.use_bias;
    shape_.activation = mlp::Activation::Relu;

    q_params_.assign(shape_.param_count(), 0.0);
    Rng init(derive_seed(seed, "agent-init"));
    for (std::size_t l = 0; l < shape_.layer_count(); ++l) {
        const auto in = static_cast<std::size_t>(shape_.sizes[l]);
        const auto out = static_cast<std::size_t>(shape_.sizes[l + 1]);
        const double bound = 1.0 / std::sqrt(static_cast<double>(in));
        const std::size_t offset = shape_.layer_offset(l);
        for (std::size_t k = 0; k < in * out; ++k) q_params_[offset + k] = init.uniform(-bound, bound);
    }
    target_params_ = q_params_;
    adam_m_.assign(q_params_.size(), 0.0);
    adam_v_.assign(q_params_.size(), 0.0);
}

std::vector<double> Agent::q_values(std::span<const double> state) const
{
    if (state.size() != static_cast<std::size_t>(spec_.state_dim))
        throw DimensionMismatch("state has length " + std::to_string(state.size()));
    mlp::forward(shape_, q_params_, state, single_trace_);
    const auto out = single_trace_.output();
    return {out.begin(), out.end()};
}

double Agent::epsilon() const
{
    if (steps_seen_ >= config_.epsilon_decay_steps) return config_.epsilon_end;
    const double progress = static_cast<double>(steps_seen_) / config_.epsilon_decay_steps;
    return config_.epsilon_start + progress * (config_.epsilon_end - config_.epsilon_start);
}

int Agent::act(std::span<const double> state, ActMode mode)
{
    const auto q = q_values(state);
    if (mode == ActMode::Explore && rng_.uniform() < epsilon())
        return static_cast<int>(rng_.below(static_cast<std::uint64_t>(spec_.action_count)));
    return static_cast<int>(std::max_element(q.begin(), q.end()) - q.begin());
}

void Agent::observe(Transition t)
{
    replay_.push(std::move(t));
    ++steps_seen_;
}

double Agent::td_loss(std::span<const Transition> batch, std::vector<double>* grad) const
{
    std::vector<const Transition*> refs;
    refs.reserve(batch.size());
    for (const auto& t : batch) refs.push_back(&t);
    return td_loss_refs(refs, grad);
}

double Agent::td_loss_refs(std::span<const Transition* const> batch, std::vector<double>* grad) const
{
    if (batch.empty()) throw InsufficientData("empty TD batch");
    if (grad) grad->assign(q_params_.size(), 0.0);

    const std::size_t n = batch.size();
    const auto dim = static_cast<std::size_t>(spec_.state_dim);
    const auto actions = static_cast<std::size_t>(spec_.action_count);
    states_.resize(dim * n);
    next_states_.resize(dim * n);
    for (std::size_t s = 0; s < n; ++s) {
        const Transition& t = *batch[s];
        if (t.state.size() != dim || t.next_state.size() != dim)
            throw DimensionMismatch("transition state has wrong length");
        if (t.action < 0 || static_cast<std::size_t>(t.action) >= actions)
            throw InvalidAction("transition action " + std::to_string(t.action));
        for (std::size_t k = 0; k < dim; ++k) {
            states_[k * n + s] = t.state[k];
            next_states_[k * n + s] = t.next_state[k];
        }
    }
    mlp::forward_batch(shape_, target_params_, next_states_, n, target_trace_);
    mlp::forward_batch(shape_, q_params_, states_, n, trace_);

    const double scale = 1.0 / static_cast<double>(n);
    grad_out_.assign(actions * n, 0.0);
    double loss = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
        const Transition& t = *batch[s];
        double target = t.reward;
        if (!t.done) {
            double best = target_trace_.output(0, s);
            for (std::size_t a = 1; a < actions; ++a) best = std::max(best, target_trace_.output(a, s));
            target += config_.discount * best;
        }
        const auto a = static_cast<std::size_t>(t.action);
        const double error = trace_.output(a, s) - target;
        loss += 0.5 * error * error * scale;
        grad_out_[a * n + s] = error * scale;
    }
    if (grad) mlp::backward_batch(shape_, q_params_, trace_, grad_out_, *grad);
    return loss;
}

double Agent::update()
{
    const auto batch_size = static_cast<std::size_t>(config_.batch_size);
    if (replay_.size() < batch_size)
        throw InsufficientData("replay holds " + std::to_string(replay_.size()) + " of " +
                               std::to_string(batch_size) + " transitions");

    batch_.clear();
    for (std::size_t i = 0; i < batch_size; ++i) batch_.push_back(&replay_.at(rng_.below(replay_.size())));

    const double loss = td_loss_refs(batch_, &grad_);
    apply_gradient(grad_);

    ++updates_done_;
    if (updates_done_ % config_.target_sync_interval == 0) sync_target();
    return loss;
}

void Agent::apply_gradient(const std::vector<double>& grad)
{
    const double lr = config_.learning_rate;
    if (lr == 0.0) return;
    if (config_.optimizer == OptimizerKind::Sgd) {
        for (std::size_t i = 0; i < grad.size(); ++i) q_params_[i] -= lr * grad[i];
        return;
    }
    const double step = static_cast<double>(updates_done_ + 1);
    const double correction1 = 1.0 - std::pow(kAdamBeta1, step);
    const double correction2 = 1.0 - std::pow(kAdamBeta2, step);
    double* __restrict q = q_params_.data();
    double* __restrict m = adam_m_.data();
    double* __restrict v = adam_v_.data();
    const double* __restrict g = grad.data();
    for (std::size_t i = 0; i < grad.size(); ++i) {
        m[i] = kAdamBeta1 * m[i] + (1.0 - kAdamBeta1) * g[i];
        v[i] = kAdamBeta2 * v[i] + (1.0 - kAdamBeta2) * g[i] * g[i];
        const double m_hat = m[i] / correction1;
        const double v_hat = v[i] / correction2;
        q[i] -= lr * m_hat / (std::sqrt(v_hat) + kAdamEps);
    }
}

void Agent::sync_target() { target_params_ = q_params_; }

std::uint64_t Agent::parameter_hash() const
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    const auto mix = [&h](double v) {
        h ^= std::bit_cast<std::uint64_t>(v);
        h = mix64(h);
    };
    for (double v : q_params_) mix(v);
    for (double v : target_params_) mix(v);
    return h;
}

std::vector<AgentConfig> default_pool(EnvKind kind)
{
    AgentConfig good;
    good.label = "good";
    good.hidden_layers = {32};
    good.learning_rate = 5e-3;

    AgentConfig wider = good;
    wider.label = "wider";
    wider.hidden_layers = {128};
    wider.learning_rate = 2e-4;

    AgentConfig high_lr = good;
    high_lr.label = "high_lr";
    high_lr.learning_rate = 1e-1;

    // Never learns and never stops exploring.
    AgentConfig crippled = good;
    crippled.label = "crippled";
    crippled.learning_rate = 0.0;
    crippled.epsilon_end = 1.0;

    if (kind == EnvKind::NoisyChain) {
        for (auto* c : {&good, &wider, &high_lr, &crippled}) {
            c->discount = 0.9;
            c->epsilon_decay_steps = 1000;
            c->replay_capacity = 2000;
        }
    }
    return {good, wider, high_lr, crippled};
}

}  // namespace banditrl
