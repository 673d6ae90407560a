#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace banditrl::mlp {

enum class Activation { Tanh, Relu };

/// Layer shapes of a fully connected network with tanh or ReLU hidden units
/// and a linear output layer. Parameters live in one flat array; layer l stores its
/// weights row-major (out x in) followed by its biases when `bias` is set.
struct Shape {
    std::vector<int> sizes;
    bool bias = true;
    Activation activation = Activation::Tanh;

    int input_dim() const { return sizes.front(); }
    int output_dim() const { return sizes.back(); }
    std::size_t layer_count() const { return sizes.size() - 1; }
    std::size_t param_count() const;
    /// Offset of layer l's first weight in the flat array.
    std::size_t layer_offset(std::size_t l) const;

    bool operator==(const Shape&) const = default;
};

/// Per-sample activations kept for backpropagation.
struct Trace {
    std::vector<std::vector<double>> activations;

    std::span<const double> output() const { return activations.back(); }
};

void forward(const Shape& shape, std::span<const double> params, std::span<const double> input,
             Trace& trace);

/// Accumulate d(output . grad_output)/d(params) into grad_params.
void backward(const Shape& shape, std::span<const double> params, const Trace& trace,
              std::span<const double> grad_output, std::span<double> grad_params);

/// Activations for a whole batch, stored feature-major: layer l holds
/// sizes[l] rows of `batch` values each.
struct BatchTrace {
    std::size_t batch = 0;
    std::vector<std::vector<double>> activations;

    double output(std::size_t unit, std::size_t sample) const { return activations.back()[unit * batch + sample]; }
};

/// Batched forward pass; inputs is feature-major (input_dim x batch). Each
/// sample's outputs equal those of forward() bit for bit.
void forward_batch(const Shape& shape, std::span<const double> params, std::span<const double> inputs,
                   std::size_t batch, BatchTrace& trace);

/// Batched backward; grad_outputs is feature-major (output_dim x batch).
void backward_batch(const Shape& shape, std::span<const double> params, const BatchTrace& trace,
                    std::span<const double> grad_outputs, std::span<double> grad_params);

}  // namespace banditrl::mlp
