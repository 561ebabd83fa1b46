#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "svdd/rng.hpp"

namespace svdd {

using Vec = std::vector<double>;

// Row-major dense matrix.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

enum class Activation { identity, leaky_relu };

// Negative-side slope of leaky_relu; also its subgradient at exactly 0.
inline constexpr double kLeakyReluAlpha = 0.01;

struct Layer {
    std::size_t in_dim = 0;
    std::size_t out_dim = 0;
    Matrix weight;  // out_dim x in_dim
    bool has_bias = false;
    Vec bias;  // out_dim entries iff has_bias
    Activation activation = Activation::identity;
};

struct DenseNet {
    std::vector<Layer> layers;

    std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().in_dim; }
    std::size_t output_dim() const { return layers.empty() ? 0 : layers.back().out_dim; }
};

// Throws ShapeError naming the offending layer if adjacent dimensions do not
// chain or weight/bias storage disagrees with the declared dims.
void validate_net(const DenseNet& net);

// Fully-connected net with the given layer widths (dims.size() >= 2 entries),
// leaky_relu on hidden layers, identity on the final layer.  Weights drawn
// uniformly from +-sqrt(6/(in+out)); biases (when enabled) start at zero.
DenseNet make_mlp(const std::vector<std::size_t>& dims, bool has_bias, SeededRng& rng);

// Per-layer inputs and pre-activations captured by forward() for backward().
struct ForwardCache {
    std::vector<Vec> inputs;   // inputs[k]  = input fed to layer k
    std::vector<Vec> preacts;  // preacts[k] = W x (+ b) of layer k
};

Vec forward(const DenseNet& net, const Vec& input, ForwardCache* cache = nullptr);

// Parameter-shaped tensors: gradients or Adam moments.
struct NetGrads {
    std::vector<Matrix> weight;
    std::vector<Vec> bias;  // empty vec for bias-free layers
};

NetGrads zero_grads(const DenseNet& net);

// Backpropagates output_gradient through the cached pass, accumulating
// parameter gradients into `grads` (so batch loops can sum samples), and
// returns the gradient with respect to the input.  A cache whose shapes do
// not match the net raises ContractError.
Vec backward(const DenseNet& net, const ForwardCache& cache, const Vec& output_gradient,
             NetGrads& grads);

struct AdamState {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::uint64_t step_count = 0;
    NetGrads m;
    NetGrads v;
};

AdamState init_adam(const DenseNet& net, double lr = 1e-3, double beta1 = 0.9,
                    double beta2 = 0.999, double eps = 1e-8);

// One bias-corrected Adam step.  Non-finite gradients or resulting parameters
// raise TrainingError carrying the parameter path.
void adam_update(DenseNet& net, const NetGrads& grads, AdamState& state);

// Sum of squared Frobenius norms of all weight matrices (bias excluded).
double frobenius_squared(const DenseNet& net);

}  // namespace svdd
