#pragma once

#include <cstddef>
#include <vector>

#include "svdd/dense_net.hpp"
#include "svdd/rng.hpp"

namespace svdd {

// Bias-free encoder/decoder pair; the decoder mirrors the encoder widths.
struct AutoencoderModel {
    DenseNet encoder;
    DenseNet decoder;
};

// encoder_dims = {input, h1, ..., bottleneck}; hidden layers use leaky_relu,
// each half ends in an identity layer.  All layers are bias-free.
AutoencoderModel make_autoencoder(const std::vector<std::size_t>& encoder_dims, SeededRng& rng);

struct PretrainResult {
    // Mean per-sample reconstruction loss of each epoch (batch-weighted
    // running mean over the epoch's training pass); length == epochs.
    std::vector<double> loss_trace;
};

// Minimizes mean squared reconstruction error with Adam (defaults: lr 1e-3)
// over minibatches; data order is reshuffled through `rng` every epoch.
// Per-sample loss is the mean over dimensions of the squared difference.
// epochs == 0 leaves the model untouched and returns an empty trace.
// Non-finite losses raise TrainingError naming the epoch.
PretrainResult pretrain(AutoencoderModel& model, const std::vector<Vec>& vectors,
                        std::size_t epochs, std::size_t batch_size, SeededRng& rng);

// Bottleneck representation of one vector.
Vec encode(const AutoencoderModel& model, const Vec& v);

Vec reconstruct(const AutoencoderModel& model, const Vec& v);

}  // namespace svdd
