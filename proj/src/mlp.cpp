#include "banditrl/mlp.hpp"

#include <cmath>

namespace banditrl::mlp {

std::size_t Shape::param_count() const { return layer_offset(layer_count()); }

std::size_t Shape::layer_offset(std::size_t l) const
{
    std::size_t offset = 0;
    for (std::size_t i = 0; i < l; ++i) {
        const auto in = static_cast<std::size_t>(sizes[i]);
        const auto out = static_cast<std::size_t>(sizes[i + 1]);
        offset += out * in + (bias ? out : 0);
    }
    return offset;
}

void forward(const Shape& shape, std::span<const double> params, std::span<const double> input,
             Trace& trace)
{
    const std::size_t layers = shape.layer_count();
    trace.activations.resize(layers + 1);
    trace.activations[0].assign(input.begin(), input.end());

    std::size_t offset = 0;
    for (std::size_t l = 0; l < layers; ++l) {
        const auto in = static_cast<std::size_t>(shape.sizes[l]);
        const auto out = static_cast<std::size_t>(shape.sizes[l + 1]);
        const auto& x = trace.activations[l];
        auto& y = trace.activations[l + 1];
        y.resize(out);
        const double* w = params.data() + offset;
        const double* b = w + out * in;
        for (std::size_t o = 0; o < out; ++o) {
            double acc = shape.bias ? b[o] : 0.0;
            const double* row = w + o * in;
            for (std::size_t i = 0; i < in; ++i) acc += row[i] * x[i];
            if (l + 1 == layers)
                y[o] = acc;
            else
                y[o] = shape.activation == Activation::Tanh ? std::tanh(acc) : (acc > 0.0 ? acc : 0.0);
        }
        offset += out * in + (shape.bias ? out : 0);
    }
}

void backward(const Shape& shape, std::span<const double> params, const Trace& trace,
              std::span<const double> grad_output, std::span<double> grad_params)
{
    const std::size_t layers = shape.layer_count();
    thread_local std::vector<double> delta, prev;
    delta.assign(grad_output.begin(), grad_output.end());

    for (std::size_t l = layers; l-- > 0;) {
        const auto in = static_cast<std::size_t>(shape.sizes[l]);
        const auto out = static_cast<std::size_t>(shape.sizes[l + 1]);
        const std::size_t offset = shape.layer_offset(l);
        const auto& x = trace.activations[l];
        const double* w = params.data() + offset;
        double* gw = grad_params.data() + offset;
        double* gb = gw + out * in;

        // delta holds dL/d(pre-activation) of layer l.
        for (std::size_t o = 0; o < out; ++o) {
            double* grow = gw + o * in;
            for (std::size_t i = 0; i < in; ++i) grow[i] += delta[o] * x[i];
            if (shape.bias) gb[o] += delta[o];
        }
        if (l == 0) break;

        prev.assign(in, 0.0);
        for (std::size_t o = 0; o < out; ++o) {
            const double* row = w + o * in;
            for (std::size_t i = 0; i < in; ++i) prev[i] += row[i] * delta[o];
        }
        // x is the activated output of layer l-1.
        if (shape.activation == Activation::Tanh) {
            for (std::size_t i = 0; i < in; ++i) prev[i] *= 1.0 - x[i] * x[i];
        } else {
            for (std::size_t i = 0; i < in; ++i)
                if (x[i] <= 0.0) prev[i] = 0.0;
        }
        delta.swap(prev);
    }
}

void forward_batch(const Shape& shape, std::span<const double> params, std::span<const double> inputs,
                   std::size_t batch, BatchTrace& trace)
{
    const std::size_t layers = shape.layer_count();
    trace.batch = batch;
    trace.activations.resize(layers + 1);
    trace.activations[0].assign(inputs.begin(), inputs.end());

    std::size_t offset = 0;
    for (std::size_t l = 0; l < layers; ++l) {
        const auto in = static_cast<std::size_t>(shape.sizes[l]);
        const auto out = static_cast<std::size_t>(shape.sizes[l + 1]);
        const double* x = trace.activations[l].data();
        auto& yv = trace.activations[l + 1];
        yv.resize(out * batch);
        const double* w = params.data() + offset;
        const double* b = w + out * in;
        for (std::size_t o = 0; o < out; ++o) {
            double* y = yv.data() + o * batch;
            const double init = shape.bias ? b[o] : 0.0;
            for (std::size_t s = 0; s < batch; ++s) y[s] = init;
            for (std::size_t i = 0; i < in; ++i) {
                const double wi = w[o * in + i];
                const double* xi = x + i * batch;
                for (std::size_t s = 0; s < batch; ++s) y[s] += wi * xi[s];
            }
            if (l + 1 == layers) continue;
            if (shape.activation == Activation::Tanh) {
                for (std::size_t s = 0; s < batch; ++s) y[s] = std::tanh(y[s]);
            } else {
                for (std::size_t s = 0; s < batch; ++s) y[s] = y[s] > 0.0 ? y[s] : 0.0;
            }
        }
        offset += out * in + (shape.bias ? out : 0);
    }
}

void backward_batch(const Shape& shape, std::span<const double> params, const BatchTrace& trace,
                    std::span<const double> grad_outputs, std::span<double> grad_params)
{
    const std::size_t layers = shape.layer_count();
    const std::size_t batch = trace.batch;
    thread_local std::vector<double> delta, prev, xt;
    delta.assign(grad_outputs.begin(), grad_outputs.end());

    for (std::size_t l = layers; l-- > 0;) {
        const auto in = static_cast<std::size_t>(shape.sizes[l]);
        const auto out = static_cast<std::size_t>(shape.sizes[l + 1]);
        const std::size_t offset = shape.layer_offset(l);
        const double* x = trace.activations[l].data();
        const double* w = params.data() + offset;
        double* gw = grad_params.data() + offset;
        double* gb = gw + out * in;

        // Sample-major copy so the weight-gradient loop runs over inputs.
        xt.resize(in * batch);
        for (std::size_t i = 0; i < in; ++i)
            for (std::size_t s = 0; s < batch; ++s) xt[s * in + i] = x[i * batch + s];
        for (std::size_t o = 0; o < out; ++o) {
            const double* d = delta.data() + o * batch;
            double* __restrict grow = gw + o * in;
            for (std::size_t s = 0; s < batch; ++s) {
                const double ds = d[s];
                const double* __restrict xs = xt.data() + s * in;
                for (std::size_t i = 0; i < in; ++i) grow[i] += ds * xs[i];
                if (shape.bias) gb[o] += ds;
            }
        }
        if (l == 0) break;

        prev.assign(in * batch, 0.0);
        for (std::size_t o = 0; o < out; ++o) {
            const double* d = delta.data() + o * batch;
            for (std::size_t i = 0; i < in; ++i) {
                const double wi = w[o * in + i];
                double* p = prev.data() + i * batch;
                for (std::size_t s = 0; s < batch; ++s) p[s] += wi * d[s];
            }
        }
        if (shape.activation == Activation::Tanh) {
            for (std::size_t k = 0; k < in * batch; ++k) prev[k] *= 1.0 - x[k] * x[k];
        } else {
            for (std::size_t k = 0; k < in * batch; ++k)
                if (x[k] <= 0.0) prev[k] = 0.0;
        }
        delta.swap(prev);
    }
}

}  // namespace banditrl::mlp
