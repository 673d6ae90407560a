#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "banditrl/mlp.hpp"

namespace banditrl {

inline constexpr double kDefaultObsStd = 0.1;

double softplus(double x);
double inverse_softplus(double y);

/// Mean-field Gaussian posterior over the weights of a dynamics network.
///
/// Every network parameter i has q(theta_i) = N(mu[i], softplus(rho[i])^2).
/// The flat ordering matches mlp::Shape: per layer, weights row-major and
/// then biases.
struct VariationalParams {
    std::vector<int> layer_sizes;
    double prior_std = 1.0;
    std::vector<double> mu;
    std::vector<double> rho;

    mlp::Shape shape() const { return {layer_sizes, true}; }
    std::size_t size() const { return mu.size(); }
    double sigma(std::size_t i) const { return softplus(rho[i]); }

    bool operator==(const VariationalParams&) const = default;
};

/// Paired rows of (state ++ one-hot action) inputs and next-state targets.
struct DynamicsBatch {
    std::vector<std::vector<double>> inputs;
    std::vector<std::vector<double>> targets;

    std::size_t size() const { return inputs.size(); }
};

struct ElboEstimate {
    double value = 0.0;
    double log_likelihood_term = 0.0;
    double kl_to_prior_term = 0.0;
    int n_mc_samples = 1;
};

struct ElboGradient {
    std::vector<double> mu;
    std::vector<double> rho;
};

/// Weights drawn from U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero, and
/// every sigma equal to prior_std / 2.
VariationalParams init_variational(std::vector<int> layer_sizes, double prior_std, std::uint64_t seed);

/// Network input for a (state, action) pair: state followed by a one-hot action.
std::vector<double> dynamics_input(std::span<const double> state, int action, int action_count);

/// One reparameterized draw theta = mu + sigma * eps followed by a forward pass.
std::vector<double> sample_forward(const VariationalParams& params, std::span<const double> input,
                                   std::uint64_t noise_seed);

/// Closed-form KL(q || N(0, prior_std^2)) summed over all parameters.
double kl_to_prior(const VariationalParams& params);

/// Monte Carlo estimate of E_q[log p(D|theta)] - KL(q || prior) with a
/// diagonal Gaussian observation model of standard deviation obs_std.
/// A fixed noise_seed fixes every eps draw (common random numbers).
ElboEstimate elbo(const VariationalParams& params, const DynamicsBatch& batch, int n_mc_samples,
                  std::uint64_t noise_seed, double obs_std = kDefaultObsStd);

/// Same estimate together with its reparameterization gradient in (mu, rho).
std::pair<ElboEstimate, ElboGradient> elbo_with_gradient(const VariationalParams& params,
                                                         const DynamicsBatch& batch, int n_mc_samples,
                                                         std::uint64_t noise_seed,
                                                         double obs_std = kDefaultObsStd);

/// One gradient-ascent step on the ELBO (single MC sample). Returns the
/// updated parameters and the estimate taken before the step.
std::pair<VariationalParams, ElboEstimate> train_step(const VariationalParams& params,
                                                      const DynamicsBatch& batch, double learning_rate,
                                                      std::uint64_t noise_seed,
                                                      double obs_std = kDefaultObsStd);

/// KL(q_new || q_old) summed over all weights; the information gain of an update.
double posterior_kl(const VariationalParams& updated, const VariationalParams& old);

/// Text snapshot: a header line, the layer sizes, prior_std, then one
/// "mu rho" line per parameter in flat order. Values round-trip exactly.
void write_snapshot(std::ostream& os, const VariationalParams& params);
VariationalParams read_snapshot(std::istream& is);

}  // namespace banditrl
