#include "banditrl/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <string>

#include "banditrl/errors.hpp"
#include "banditrl/rng.hpp"
#include "banditrl/text.hpp"

namespace banditrl {

double softplus(double x)
{
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double inverse_softplus(double y) { return y + std::log(-std::expm1(-y)); }

namespace {

double sigmoid(double x)
{
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

void check_architecture(const std::vector<int>& sizes)
{
    if (sizes.size() < 2)
        throw InvalidArchitecture("need at least an input and an output layer");
    for (int s : sizes)
        if (s <= 0) throw InvalidArchitecture("layer sizes must be positive");
}

void check_batch(const VariationalParams& params, const DynamicsBatch& batch)
{
    if (batch.size() == 0) throw InsufficientData("empty dynamics batch");
    if (batch.inputs.size() != batch.targets.size())
        throw DimensionMismatch("inputs and targets differ in row count");
    const auto in = static_cast<std::size_t>(params.layer_sizes.front());
    const auto out = static_cast<std::size_t>(params.layer_sizes.back());
    for (std::size_t r = 0; r < batch.size(); ++r) {
        if (batch.inputs[r].size() != in || batch.targets[r].size() != out)
            throw DimensionMismatch("batch row " + std::to_string(r) + " does not match the network");
    }
}

// Shared implementation of the ELBO estimate and (optionally) its gradient.
ElboEstimate estimate(const VariationalParams& params, const DynamicsBatch& batch, int n_mc_samples,
                      std::uint64_t noise_seed, double obs_std, ElboGradient* gradient)
{
    check_batch(params, batch);
    if (n_mc_samples < 1) throw InvalidConfig("n_mc_samples must be positive");

    const auto shape = params.shape();
    const std::size_t n = params.size();
    const double inv_var = 1.0 / (obs_std * obs_std);
    const double log_norm = -0.5 * std::log(2.0 * std::numbers::pi * obs_std * obs_std);

    std::vector<double> eps(n), theta(n), grad_theta(n), grad_out;
    std::vector<double> sigma(n), dsigma(n);
    for (std::size_t i = 0; i < n; ++i) {
        sigma[i] = params.sigma(i);
        dsigma[i] = sigmoid(params.rho[i]);
    }
    if (gradient) {
        gradient->mu.assign(n, 0.0);
        gradient->rho.assign(n, 0.0);
    }

    mlp::Trace trace;
    double log_likelihood = 0.0;
    for (int s = 0; s < n_mc_samples; ++s) {
        Rng noise(derive_seed(noise_seed, "elbo-eps", static_cast<std::uint64_t>(s)));
        for (std::size_t i = 0; i < n; ++i) {
            eps[i] = noise.normal();
            theta[i] = params.mu[i] + sigma[i] * eps[i];
        }
        if (gradient) std::fill(grad_theta.begin(), grad_theta.end(), 0.0);

        double sample_ll = 0.0;
        for (std::size_t r = 0; r < batch.size(); ++r) {
            mlp::forward(shape, theta, batch.inputs[r], trace);
            const auto out = trace.output();
            const auto& target = batch.targets[r];
            grad_out.resize(out.size());
            for (std::size_t d = 0; d < out.size(); ++d) {
                const double residual = target[d] - out[d];
                sample_ll += log_norm - 0.5 * residual * residual * inv_var;
                grad_out[d] = residual * inv_var;
            }
            if (gradient) mlp::backward(shape, theta, trace, grad_out, grad_theta);
        }
        log_likelihood += sample_ll;

        if (gradient) {
            for (std::size_t i = 0; i < n; ++i) {
                gradient->mu[i] += grad_theta[i];
                gradient->rho[i] += grad_theta[i] * eps[i] * dsigma[i];
            }
        }
    }

    const double scale = 1.0 / n_mc_samples;
    ElboEstimate result;
    result.n_mc_samples = n_mc_samples;
    result.log_likelihood_term = log_likelihood * scale;
    result.kl_to_prior_term = kl_to_prior(params);
    result.value = result.log_likelihood_term - result.kl_to_prior_term;

    if (gradient) {
        const double prior_var = params.prior_std * params.prior_std;
        for (std::size_t i = 0; i < n; ++i) {
            gradient->mu[i] = gradient->mu[i] * scale - params.mu[i] / prior_var;
            const double dkl_dsigma = -1.0 / sigma[i] + sigma[i] / prior_var;
            gradient->rho[i] = gradient->rho[i] * scale - dkl_dsigma * dsigma[i];
        }
    }
    return result;
}

}  // namespace

VariationalParams init_variational(std::vector<int> layer_sizes, double prior_std, std::uint64_t seed)
{
    check_architecture(layer_sizes);
    if (!(prior_std > 0.0)) throw InvalidArchitecture("prior_std must be positive");

    VariationalParams params;
    params.layer_sizes = std::move(layer_sizes);
    params.prior_std = prior_std;
    const auto shape = params.shape();
    const std::size_t n = shape.param_count();
    params.mu.assign(n, 0.0);
    params.rho.assign(n, inverse_softplus(prior_std / 2.0));

    Rng rng(derive_seed(seed, "variational-init"));
    for (std::size_t l = 0; l < shape.layer_count(); ++l) {
        const auto in = static_cast<std::size_t>(shape.sizes[l]);
        const auto out = static_cast<std::size_t>(shape.sizes[l + 1]);
        const double bound = 1.0 / std::sqrt(static_cast<double>(in));
        const std::size_t offset = shape.layer_offset(l);
        for (std::size_t k = 0; k < in * out; ++k) params.mu[offset + k] = rng.uniform(-bound, bound);
    }
    return params;
}

std::vector<double> dynamics_input(std::span<const double> state, int action, int action_count)
{
    std::vector<double> input(state.begin(), state.end());
    input.resize(state.size() + static_cast<std::size_t>(action_count), 0.0);
    input[state.size() + static_cast<std::size_t>(action)] = 1.0;
    return input;
}

std::vector<double> sample_forward(const VariationalParams& params, std::span<const double> input,
                                   std::uint64_t noise_seed)
{
    if (input.size() != static_cast<std::size_t>(params.layer_sizes.front()))
        throw DimensionMismatch("input has length " + std::to_string(input.size()) + ", expected " +
                                std::to_string(params.layer_sizes.front()));
    Rng noise(derive_seed(noise_seed, "forward-eps"));
    std::vector<double> theta(params.size());
    for (std::size_t i = 0; i < theta.size(); ++i) {
        const double sigma = params.sigma(i);
        const double eps = noise.normal();
        theta[i] = sigma == 0.0 ? params.mu[i] : params.mu[i] + sigma * eps;
    }
    mlp::Trace trace;
    mlp::forward(params.shape(), theta, input, trace);
    const auto out = trace.output();
    return {out.begin(), out.end()};
}

double kl_to_prior(const VariationalParams& params)
{
    const double prior_std = params.prior_std;
    double total = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double sigma = params.sigma(i);
        const double mu = params.mu[i];
        const double term = std::log(prior_std / sigma) +
                            (sigma * sigma + mu * mu) / (2.0 * prior_std * prior_std) - 0.5;
        total += std::max(0.0, term);
    }
    return total;
}

ElboEstimate elbo(const VariationalParams& params, const DynamicsBatch& batch, int n_mc_samples,
                  std::uint64_t noise_seed, double obs_std)
{
    return estimate(params, batch, n_mc_samples, noise_seed, obs_std, nullptr);
}

std::pair<ElboEstimate, ElboGradient> elbo_with_gradient(const VariationalParams& params,
                                                         const DynamicsBatch& batch, int n_mc_samples,
                                                         std::uint64_t noise_seed, double obs_std)
{
    ElboGradient gradient;
    auto value = estimate(params, batch, n_mc_samples, noise_seed, obs_std, &gradient);
    return {value, std::move(gradient)};
}

std::pair<VariationalParams, ElboEstimate> train_step(const VariationalParams& params,
                                                      const DynamicsBatch& batch, double learning_rate,
                                                      std::uint64_t noise_seed, double obs_std)
{
    auto [value, gradient] = elbo_with_gradient(params, batch, 1, noise_seed, obs_std);
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (!std::isfinite(gradient.mu[i]) || !std::isfinite(gradient.rho[i]))
            throw NonFiniteGradient("ELBO gradient at parameter " + std::to_string(i));
    }
    VariationalParams updated = params;
    if (learning_rate == 0.0) return {std::move(updated), value};
    for (std::size_t i = 0; i < params.size(); ++i) {
        updated.mu[i] += learning_rate * gradient.mu[i];
        updated.rho[i] += learning_rate * gradient.rho[i];
    }
    return {std::move(updated), value};
}

double posterior_kl(const VariationalParams& updated, const VariationalParams& old)
{
    if (updated.layer_sizes != old.layer_sizes || updated.size() != old.size())
        throw ArchitectureMismatch("posteriors have different layer sizes");
    double total = 0.0;
    for (std::size_t i = 0; i < updated.size(); ++i) {
        const double s1 = updated.sigma(i);
        const double s0 = old.sigma(i);
        const double dmu = updated.mu[i] - old.mu[i];
        const double term = std::log(s0 / s1) + (s1 * s1 + dmu * dmu) / (2.0 * s0 * s0) - 0.5;
        total += std::max(0.0, term);
    }
    return total;
}

void write_snapshot(std::ostream& os, const VariationalParams& params)
{
    os << "banditrl-variational 1\n";
    os << "layers";
    for (int s : params.layer_sizes) os << ' ' << s;
    os << "\nprior_std " << format_double(params.prior_std) << '\n';
    for (std::size_t i = 0; i < params.size(); ++i)
        os << format_double(params.mu[i]) << ' ' << format_double(params.rho[i]) << '\n';
}

VariationalParams read_snapshot(std::istream& is)
{
    std::string word;
    int version = 0;
    if (!(is >> word >> version) || word != "banditrl-variational" || version != 1)
        throw IoError("not a variational snapshot");
    std::string line;
    std::getline(is, line);
    if (!std::getline(is, line) || line.rfind("layers", 0) != 0) throw IoError("missing layers line");
    VariationalParams params;
    for (const auto& part : split(trim(line.substr(6)), ' '))
        if (!part.empty()) params.layer_sizes.push_back(static_cast<int>(parse_int(part)));
    check_architecture(params.layer_sizes);
    if (!(is >> word) || word != "prior_std") throw IoError("missing prior_std");
    is >> word;
    params.prior_std = parse_double(word);
    const std::size_t n = params.shape().param_count();
    params.mu.resize(n);
    params.rho.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::string mu, rho;
        if (!(is >> mu >> rho)) throw IoError("snapshot truncated at parameter " + std::to_string(i));
        params.mu[i] = parse_double(mu);
        params.rho[i] = parse_double(rho);
    }
    return params;
}

}  // namespace banditrl
