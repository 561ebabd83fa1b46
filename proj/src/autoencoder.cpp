#include "svdd/autoencoder.hpp"

#include <algorithm>
#include <cmath>

#include "svdd/errors.hpp"

namespace svdd {

AutoencoderModel make_autoencoder(const std::vector<std::size_t>& encoder_dims, SeededRng& rng) {
    if (encoder_dims.size() < 2)
        throw ContractError("autoencoder needs at least two encoder widths");
    AutoencoderModel model;
    model.encoder = make_mlp(encoder_dims, /*has_bias=*/false, rng);
    std::vector<std::size_t> decoder_dims(encoder_dims.rbegin(), encoder_dims.rend());
    model.decoder = make_mlp(decoder_dims, /*has_bias=*/false, rng);
    return model;
}

PretrainResult pretrain(AutoencoderModel& model, const std::vector<Vec>& vectors,
                        std::size_t epochs, std::size_t batch_size, SeededRng& rng) {
    PretrainResult result;
    if (epochs == 0) return result;
    if (vectors.empty()) throw ContractError("pretrain: empty training set");
    if (batch_size == 0) throw ContractError("pretrain: batch_size must be >= 1");
    const std::size_t d = model.encoder.input_dim();
    for (const Vec& v : vectors)
        if (v.size() != d)
            throw ShapeError("pretrain: vector length " + std::to_string(v.size()) +
                             " != encoder input dim " + std::to_string(d));

    AdamState opt_enc = init_adam(model.encoder);
    AdamState opt_dec = init_adam(model.decoder);
    const std::size_t n = vectors.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;

    result.loss_trace.reserve(epochs);
    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        rng.shuffle(order);
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < n; start += batch_size) {
            const std::size_t count = std::min(batch_size, n - start);
            NetGrads genc = zero_grads(model.encoder);
            NetGrads gdec = zero_grads(model.decoder);
            const double scale = 2.0 / (static_cast<double>(count) * static_cast<double>(d));
            for (std::size_t i = 0; i < count; ++i) {
                const Vec& x = vectors[order[start + i]];
                ForwardCache cenc, cdec;
                Vec h = forward(model.encoder, x, &cenc);
                Vec xhat = forward(model.decoder, h, &cdec);
                Vec dout(d);
                double sample_se = 0.0;
                for (std::size_t j = 0; j < d; ++j) {
                    const double diff = xhat[j] - x[j];
                    sample_se += diff * diff;
                    dout[j] = scale * diff;
                }
                loss_sum += sample_se / static_cast<double>(d);
                Vec dh = backward(model.decoder, cdec, dout, gdec);
                backward(model.encoder, cenc, dh, genc);
            }
            adam_update(model.decoder, gdec, opt_dec);
            adam_update(model.encoder, genc, opt_enc);
        }
        const double epoch_loss = loss_sum / static_cast<double>(n);
        if (!std::isfinite(epoch_loss))
            throw TrainingError("pretraining diverged at epoch " + std::to_string(epoch));
        result.loss_trace.push_back(epoch_loss);
    }
    return result;
}

Vec encode(const AutoencoderModel& model, const Vec& v) {
    return forward(model.encoder, v);
}

Vec reconstruct(const AutoencoderModel& model, const Vec& v) {
    return forward(model.decoder, forward(model.encoder, v));
}

}  // namespace svdd
