#include "svdd/dense_net.hpp"

#include <cmath>

#include "svdd/errors.hpp"

namespace svdd {

namespace {

std::string layer_tag(std::size_t k) { return "layer " + std::to_string(k); }

}  // namespace

void validate_net(const DenseNet& net) {
    if (net.layers.empty()) throw ShapeError("net has no layers");
    for (std::size_t k = 0; k < net.layers.size(); ++k) {
        const Layer& l = net.layers[k];
        if (l.in_dim == 0 || l.out_dim == 0)
            throw ShapeError(layer_tag(k) + ": zero-sized dimension");
        if (l.weight.rows != l.out_dim || l.weight.cols != l.in_dim ||
            l.weight.data.size() != l.out_dim * l.in_dim)
            throw ShapeError(layer_tag(k) + ": weight storage does not match declared dims");
        if (l.has_bias && l.bias.size() != l.out_dim)
            throw ShapeError(layer_tag(k) + ": bias size " + std::to_string(l.bias.size()) +
                             " != out_dim " + std::to_string(l.out_dim));
        if (!l.has_bias && !l.bias.empty())
            throw ShapeError(layer_tag(k) + ": bias present on bias-free layer");
        if (k > 0 && net.layers[k - 1].out_dim != l.in_dim)
            throw ShapeError(layer_tag(k) + ": in_dim " + std::to_string(l.in_dim) +
                             " does not chain from previous out_dim " +
                             std::to_string(net.layers[k - 1].out_dim));
    }
}

DenseNet make_mlp(const std::vector<std::size_t>& dims, bool has_bias, SeededRng& rng) {
    if (dims.size() < 2) throw ContractError("make_mlp: need at least two layer widths");
    DenseNet net;
    for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
        Layer l;
        l.in_dim = dims[k];
        l.out_dim = dims[k + 1];
        if (l.in_dim == 0 || l.out_dim == 0)
            throw ContractError("make_mlp: zero layer width");
        l.weight = Matrix(l.out_dim, l.in_dim);
        double bound = std::sqrt(6.0 / static_cast<double>(l.in_dim + l.out_dim));
        for (double& w : l.weight.data) w = rng.uniform(-bound, bound);
        l.has_bias = has_bias;
        if (has_bias) l.bias.assign(l.out_dim, 0.0);
        l.activation =
            (k + 2 == dims.size()) ? Activation::identity : Activation::leaky_relu;
        net.layers.push_back(std::move(l));
    }
    validate_net(net);
    return net;
}

Vec forward(const DenseNet& net, const Vec& input, ForwardCache* cache) {
    if (net.layers.empty()) throw ShapeError("forward: net has no layers");
    if (input.size() != net.input_dim())
        throw ShapeError("forward: input length " + std::to_string(input.size()) +
                         " != layer 0 in_dim " + std::to_string(net.input_dim()));
    if (cache) {
        cache->inputs.clear();
        cache->preacts.clear();
        cache->inputs.reserve(net.layers.size());
        cache->preacts.reserve(net.layers.size());
    }
    Vec x = input;
    for (std::size_t k = 0; k < net.layers.size(); ++k) {
        const Layer& l = net.layers[k];
        if (x.size() != l.in_dim)
            throw ShapeError(layer_tag(k) + ": input length " + std::to_string(x.size()) +
                             " != in_dim " + std::to_string(l.in_dim));
        Vec pre(l.out_dim, 0.0);
        const double* xp = x.data();
        for (std::size_t r = 0; r < l.out_dim; ++r) {
            const double* row = &l.weight.data[r * l.in_dim];
            double s = 0.0;
            for (std::size_t c = 0; c < l.in_dim; ++c) s += row[c] * xp[c];
            if (l.has_bias) s += l.bias[r];
            pre[r] = s;
        }
        if (cache) {
            cache->inputs.push_back(std::move(x));
            cache->preacts.push_back(pre);
        }
        if (l.activation == Activation::leaky_relu) {
            for (double& v : pre)
                if (v < 0.0) v *= kLeakyReluAlpha;
        }
        x = std::move(pre);
    }
    return x;
}

NetGrads zero_grads(const DenseNet& net) {
    NetGrads g;
    g.weight.reserve(net.layers.size());
    g.bias.reserve(net.layers.size());
    for (const Layer& l : net.layers) {
        g.weight.emplace_back(l.out_dim, l.in_dim);
        g.bias.emplace_back(l.has_bias ? l.out_dim : 0, 0.0);
    }
    return g;
}

Vec backward(const DenseNet& net, const ForwardCache& cache, const Vec& output_gradient,
             NetGrads& grads) {
    const std::size_t L = net.layers.size();
    if (L == 0) throw ShapeError("backward: net has no layers");
    if (cache.inputs.size() != L || cache.preacts.size() != L)
        throw ContractError("backward: cache does not match net (layer count)");
    if (grads.weight.size() != L || grads.bias.size() != L)
        throw ContractError("backward: gradient accumulator does not match net");
    if (output_gradient.size() != net.output_dim())
        throw ShapeError("backward: output gradient length " +
                         std::to_string(output_gradient.size()) + " != output dim " +
                         std::to_string(net.output_dim()));
    for (std::size_t k = 0; k < L; ++k) {
        const Layer& l = net.layers[k];
        if (cache.inputs[k].size() != l.in_dim || cache.preacts[k].size() != l.out_dim)
            throw ContractError("backward: cache does not match net at " + layer_tag(k));
        if (grads.weight[k].rows != l.out_dim || grads.weight[k].cols != l.in_dim)
            throw ContractError("backward: gradient shape mismatch at " + layer_tag(k));
    }

    Vec delta = output_gradient;
    for (std::size_t kk = L; kk-- > 0;) {
        const Layer& l = net.layers[kk];
        const Vec& pre = cache.preacts[kk];
        const Vec& in = cache.inputs[kk];
        if (l.activation == Activation::leaky_relu) {
            for (std::size_t r = 0; r < l.out_dim; ++r)
                if (pre[r] <= 0.0) delta[r] *= kLeakyReluAlpha;
        }
        Matrix& gw = grads.weight[kk];
        for (std::size_t r = 0; r < l.out_dim; ++r) {
            const double d = delta[r];
            double* grow = &gw.data[r * l.in_dim];
            const double* ip = in.data();
            for (std::size_t c = 0; c < l.in_dim; ++c) grow[c] += d * ip[c];
        }
        if (l.has_bias) {
            Vec& gb = grads.bias[kk];
            for (std::size_t r = 0; r < l.out_dim; ++r) gb[r] += delta[r];
        }
        Vec dx(l.in_dim, 0.0);
        for (std::size_t r = 0; r < l.out_dim; ++r) {
            const double d = delta[r];
            const double* row = &l.weight.data[r * l.in_dim];
            double* dp = dx.data();
            for (std::size_t c = 0; c < l.in_dim; ++c) dp[c] += row[c] * d;
        }
        delta = std::move(dx);
    }
    return delta;
}

AdamState init_adam(const DenseNet& net, double lr, double beta1, double beta2, double eps) {
    AdamState s;
    s.lr = lr;
    s.beta1 = beta1;
    s.beta2 = beta2;
    s.eps = eps;
    s.step_count = 0;
    s.m = zero_grads(net);
    s.v = zero_grads(net);
    return s;
}

namespace {

void adam_step_array(double* p, const double* g, double* m, double* v, std::size_t n,
                     const AdamState& s, double bc1, double bc2, const std::string& where) {
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(g[i]))
            throw TrainingError("non-finite gradient at " + where + "[" + std::to_string(i) + "]");
        m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * g[i];
        v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * g[i] * g[i];
        double mhat = m[i] / bc1;
        double vhat = v[i] / bc2;
        p[i] -= s.lr * mhat / (std::sqrt(vhat) + s.eps);
        if (!std::isfinite(p[i]))
            throw TrainingError("non-finite parameter at " + where + "[" + std::to_string(i) + "]");
    }
}

}  // namespace

void adam_update(DenseNet& net, const NetGrads& grads, AdamState& state) {
    const std::size_t L = net.layers.size();
    if (grads.weight.size() != L || state.m.weight.size() != L || state.v.weight.size() != L)
        throw ContractError("adam_update: tensor shapes do not match net");
    state.step_count += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));
    for (std::size_t k = 0; k < L; ++k) {
        Layer& l = net.layers[k];
        if (grads.weight[k].data.size() != l.weight.data.size())
            throw ContractError("adam_update: weight gradient shape mismatch at " + layer_tag(k));
        adam_step_array(l.weight.data.data(), grads.weight[k].data.data(),
                        state.m.weight[k].data.data(), state.v.weight[k].data.data(),
                        l.weight.data.size(), state, bc1, bc2, layer_tag(k) + " weight");
        if (l.has_bias) {
            if (grads.bias[k].size() != l.bias.size())
                throw ContractError("adam_update: bias gradient shape mismatch at " + layer_tag(k));
            adam_step_array(l.bias.data(), grads.bias[k].data(), state.m.bias[k].data(),
                            state.v.bias[k].data(), l.bias.size(), state, bc1, bc2,
                            layer_tag(k) + " bias");
        }
    }
}

double frobenius_squared(const DenseNet& net) {
    double s = 0.0;
    for (const Layer& l : net.layers)
        for (double w : l.weight.data) s += w * w;
    return s;
}

}  // namespace svdd
