#include "svdd/deep_svdd.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "svdd/errors.hpp"
#include "svdd/io.hpp"

namespace svdd {

namespace {

using ordered_json = nlohmann::ordered_json;

void check_inputs(const DenseNet& encoder, const std::vector<Vec>& vectors) {
    if (vectors.empty()) {
        throw ContractError("one-class training set is empty");
    }
    const std::size_t d = encoder.input_dim();
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        if (vectors[i].size() != d) {
            throw ShapeError("vector " + std::to_string(i) + " has dimension " +
                             std::to_string(vectors[i].size()) + ", encoder expects " +
                             std::to_string(d));
        }
    }
}

}  // namespace

Vec init_center(const DenseNet& encoder, const std::vector<Vec>& vectors) {
    check_inputs(encoder, vectors);
    const std::size_t out = encoder.output_dim();
    Vec center(out, 0.0);
    for (const Vec& v : vectors) {
        Vec y = forward(encoder, v, nullptr);
        for (std::size_t j = 0; j < out; ++j) center[j] += y[j];
    }
    const double inv_n = 1.0 / static_cast<double>(vectors.size());
    for (std::size_t j = 0; j < out; ++j) {
        center[j] *= inv_n;
        if (std::abs(center[j]) < 0.1) {
            center[j] = center[j] < 0.0 ? -0.1 : 0.1;
        }
    }
    return center;
}

double objective(const DeepSvddModel& model, const std::vector<Vec>& vectors) {
    check_inputs(model.encoder, vectors);
    double sum = 0.0;
    for (const Vec& v : vectors) {
        sum += score_one(model, v);
    }
    return sum / static_cast<double>(vectors.size()) +
           0.5 * model.weight_decay * frobenius_squared(model.encoder);
}

SvddTrainResult train_one_class(DeepSvddModel& model, const std::vector<Vec>& vectors,
                                std::size_t epochs, std::size_t batch_size, SeededRng& rng) {
    check_inputs(model.encoder, vectors);
    if (model.center.size() != model.encoder.output_dim()) {
        throw ContractError("center is uninitialized or does not match the encoder output");
    }
    if (batch_size == 0) {
        throw ContractError("batch_size must be positive");
    }

    const std::size_t n = vectors.size();
    SvddTrainResult result;
    result.objective_trace.reserve(epochs);

    AdamState adam = init_adam(model.encoder);
    ForwardCache cache;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < n; start += batch_size) {
            const std::size_t count = std::min(batch_size, n - start);
            NetGrads grads = zero_grads(model.encoder);
            const double scale = 2.0 / static_cast<double>(count);
            for (std::size_t b = 0; b < count; ++b) {
                const Vec& x = vectors[order[start + b]];
                Vec y = forward(model.encoder, x, &cache);
                Vec dout(y.size());
                for (std::size_t j = 0; j < y.size(); ++j) {
                    dout[j] = scale * (y[j] - model.center[j]);
                }
                backward(model.encoder, cache, dout, grads);
            }
            // Weight decay lives in the loss, so its gradient is added here
            // rather than folded into the optimizer.
            for (std::size_t l = 0; l < model.encoder.layers.size(); ++l) {
                const Matrix& w = model.encoder.layers[l].weight;
                Matrix& gw = grads.weight[l];
                for (std::size_t k = 0; k < w.data.size(); ++k) {
                    gw.data[k] += model.weight_decay * w.data[k];
                }
            }
            adam_update(model.encoder, grads, adam);
        }
        const double obj = objective(model, vectors);
        if (!std::isfinite(obj)) {
            throw TrainingError("one-class training diverged at epoch " + std::to_string(epoch));
        }
        result.objective_trace.push_back(obj);
    }

    // Descriptive radius: (1-nu) empirical quantile of the raw train scores.
    Vec raw = score(model, vectors);
    std::sort(raw.begin(), raw.end());
    const double q = 1.0 - model.nu;
    std::size_t idx = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n)));
    idx = idx == 0 ? 0 : idx - 1;
    if (idx >= n) idx = n - 1;
    model.radius = std::sqrt(std::max(0.0, raw[idx]));
    return result;
}

double score_one(const DeepSvddModel& model, const Vec& v) {
    Vec y = forward(model.encoder, v, nullptr);
    if (y.size() != model.center.size()) {
        throw ContractError("center dimension does not match the encoder output");
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < y.size(); ++j) {
        const double d = y[j] - model.center[j];
        sum += d * d;
    }
    return sum;
}

Vec score(const DeepSvddModel& model, const std::vector<Vec>& vectors) {
    Vec out;
    out.reserve(vectors.size());
    for (const Vec& v : vectors) out.push_back(score_one(model, v));
    return out;
}

Vec normalize_scores(const Vec& raw) {
    if (raw.empty()) {
        throw ContractError("cannot normalize an empty score set");
    }
    const auto [lo_it, hi_it] = std::minmax_element(raw.begin(), raw.end());
    const double lo = *lo_it;
    const double hi = *hi_it;
    Vec out(raw.size(), 0.0);
    if (hi > lo) {
        // Direct division so the max lands on exactly 1.0 (a reciprocal
        // multiply can round to 0.999...).
        const double range = hi - lo;
        for (std::size_t i = 0; i < raw.size(); ++i) {
            out[i] = (raw[i] - lo) / range;
        }
    }
    return out;
}

std::string model_to_json(const DeepSvddModel& model) {
    ordered_json doc;
    doc["format_version"] = 1;
    doc["weight_decay"] = model.weight_decay;
    doc["nu"] = model.nu;
    doc["seed"] = model.seed;
    doc["radius"] = model.radius;
    doc["center"] = model.center;
    ordered_json layers = ordered_json::array();
    for (const Layer& layer : model.encoder.layers) {
        ordered_json jl;
        jl["in_dim"] = layer.in_dim;
        jl["out_dim"] = layer.out_dim;
        jl["activation"] = layer.activation == Activation::leaky_relu ? "leaky_relu" : "identity";
        jl["has_bias"] = layer.has_bias;
        jl["weight"] = layer.weight.data;  // row-major
        if (layer.has_bias) jl["bias"] = layer.bias;
        layers.push_back(std::move(jl));
    }
    doc["encoder"] = std::move(layers);
    return doc.dump();
}

DeepSvddModel model_from_json(const std::string& json_text) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(json_text);
    } catch (const std::exception& e) {
        throw DataError(std::string("model file is not valid JSON: ") + e.what());
    }
    try {
        if (doc.at("format_version").get<int>() != 1) {
            throw DataError("unsupported model format_version");
        }
        DeepSvddModel model;
        model.weight_decay = doc.at("weight_decay").get<double>();
        model.nu = doc.at("nu").get<double>();
        model.seed = doc.at("seed").get<std::uint64_t>();
        model.radius = doc.at("radius").get<double>();
        model.center = doc.at("center").get<Vec>();
        for (const auto& jl : doc.at("encoder")) {
            Layer layer;
            layer.in_dim = jl.at("in_dim").get<std::size_t>();
            layer.out_dim = jl.at("out_dim").get<std::size_t>();
            const std::string act = jl.at("activation").get<std::string>();
            if (act == "leaky_relu") {
                layer.activation = Activation::leaky_relu;
            } else if (act == "identity") {
                layer.activation = Activation::identity;
            } else {
                throw DataError("unknown activation '" + act + "' in model file");
            }
            layer.has_bias = jl.at("has_bias").get<bool>();
            layer.weight.rows = layer.out_dim;
            layer.weight.cols = layer.in_dim;
            layer.weight.data = jl.at("weight").get<Vec>();
            if (layer.weight.data.size() != layer.out_dim * layer.in_dim) {
                throw DataError("weight length does not match layer dimensions");
            }
            if (layer.has_bias) {
                layer.bias = jl.at("bias").get<Vec>();
                if (layer.bias.size() != layer.out_dim) {
                    throw DataError("bias length does not match layer output");
                }
            }
            model.encoder.layers.push_back(std::move(layer));
        }
        validate_net(model.encoder);
        if (model.center.size() != model.encoder.output_dim()) {
            throw DataError("center length does not match the encoder output");
        }
        return model;
    } catch (const ordered_json::exception& e) {
        throw DataError(std::string("model file is missing fields: ") + e.what());
    }
}

void save_model(const DeepSvddModel& model, const std::string& path) {
    write_text_file_atomic(path, model_to_json(model) + "\n");
}

DeepSvddModel load_model(const std::string& path) {
    return model_from_json(read_text_file(path));
}

}  // namespace svdd
