#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>

#include "svdd/autoencoder.hpp"
#include "svdd/errors.hpp"

using namespace svdd;

namespace {

// Samples lying (up to noise) in the span of `basis` (rows are orthonormal
// directions in R^dim); coefficients are standard normal scaled so the
// per-dimension variance is about one.
std::vector<Vec> subspace_data(const std::vector<Vec>& basis, std::size_t dim, std::size_t n,
                               SeededRng& rng, double noise = 0.0) {
    const double scale = std::sqrt(static_cast<double>(dim) / static_cast<double>(basis.size()));
    std::vector<Vec> data(n, Vec(dim, 0.0));
    for (auto& x : data) {
        for (const Vec& b : basis) {
            const double t = scale * rng.gaussian();
            for (std::size_t j = 0; j < dim; ++j) x[j] += t * b[j];
        }
        if (noise > 0.0) {
            for (std::size_t j = 0; j < dim; ++j) x[j] += noise * rng.gaussian();
        }
    }
    return data;
}

// Gram-Schmidt over random vectors.
std::vector<Vec> random_orthonormal(std::size_t count, std::size_t dim, SeededRng& rng) {
    std::vector<Vec> basis;
    while (basis.size() < count) {
        Vec v(dim);
        for (double& x : v) x = rng.gaussian();
        for (const Vec& b : basis) {
            double dot = 0.0;
            for (std::size_t j = 0; j < dim; ++j) dot += v[j] * b[j];
            for (std::size_t j = 0; j < dim; ++j) v[j] -= dot * b[j];
        }
        double nrm = 0.0;
        for (double x : v) nrm += x * x;
        nrm = std::sqrt(nrm);
        if (nrm < 1e-8) continue;
        for (double& x : v) x /= nrm;
        basis.push_back(std::move(v));
    }
    return basis;
}

bool nets_equal(const DenseNet& a, const DenseNet& b) {
    if (a.layers.size() != b.layers.size()) return false;
    for (std::size_t l = 0; l < a.layers.size(); ++l) {
        if (a.layers[l].weight.data.size() != b.layers[l].weight.data.size()) return false;
        if (std::memcmp(a.layers[l].weight.data.data(), b.layers[l].weight.data.data(),
                        a.layers[l].weight.data.size() * sizeof(double)) != 0)
            return false;
    }
    return true;
}

}  // namespace

TEST_CASE("autoencoder mirrors the encoder dims and stays bias-free") {
    SeededRng rng(1);
    auto model = make_autoencoder({8, 4, 2}, rng);
    REQUIRE(model.encoder.layers.size() == 2);
    REQUIRE(model.decoder.layers.size() == 2);
    CHECK(model.encoder.input_dim() == 8);
    CHECK(model.encoder.output_dim() == 2);
    CHECK(model.decoder.input_dim() == 2);
    CHECK(model.decoder.output_dim() == 8);
    CHECK(model.encoder.layers[0].activation == Activation::leaky_relu);
    CHECK(model.encoder.layers[1].activation == Activation::identity);
    CHECK(model.decoder.layers[0].activation == Activation::leaky_relu);
    CHECK(model.decoder.layers[1].activation == Activation::identity);
    for (const auto& layer : model.encoder.layers) CHECK_FALSE(layer.has_bias);
    for (const auto& layer : model.decoder.layers) CHECK_FALSE(layer.has_bias);
}

TEST_CASE("encode and reconstruct produce the declared shapes") {
    SeededRng rng(2);
    auto model = make_autoencoder({6, 3}, rng);
    Vec x = {1, 2, 3, 4, 5, 6};
    CHECK(encode(model, x).size() == 3);
    CHECK(reconstruct(model, x).size() == 6);
}

TEST_CASE("zero epochs leaves the model untouched with an empty trace") {
    SeededRng net_rng(3);
    auto model = make_autoencoder({4, 2}, net_rng);
    auto before_enc = model.encoder;
    auto before_dec = model.decoder;
    std::vector<Vec> data(5, Vec(4, 1.0));
    SeededRng rng(4);
    auto result = pretrain(model, data, 0, 2, rng);
    CHECK(result.loss_trace.empty());
    CHECK(nets_equal(model.encoder, before_enc));
    CHECK(nets_equal(model.decoder, before_dec));
}

TEST_CASE("pretraining validates its inputs") {
    SeededRng net_rng(5);
    auto model = make_autoencoder({4, 2}, net_rng);
    SeededRng rng(6);
    std::vector<Vec> empty;
    CHECK_THROWS_AS(pretrain(model, empty, 3, 2, rng), ContractError);
    std::vector<Vec> wrong_dim(3, Vec(5, 0.0));
    CHECK_THROWS_AS(pretrain(model, wrong_dim, 3, 2, rng), ShapeError);
    std::vector<Vec> good(3, Vec(4, 0.0));
    CHECK_THROWS_AS(pretrain(model, good, 3, 0, rng), ContractError);
}

TEST_CASE("pretraining drives reconstruction loss down on low-rank data") {
    SeededRng data_rng(7);
    auto basis = random_orthonormal(1, 8, data_rng);
    auto data = subspace_data(basis, 8, 64, data_rng);

    SeededRng net_rng(8);
    auto model = make_autoencoder({8, 4, 2}, net_rng);
    SeededRng train_rng(9);
    auto result = pretrain(model, data, 150, 8, train_rng);
    REQUIRE(result.loss_trace.size() == 150);
    for (double loss : result.loss_trace) CHECK(std::isfinite(loss));
    CHECK(result.loss_trace.back() < 0.1 * result.loss_trace.front());
}

TEST_CASE("pretraining is reproducible and seed-sensitive") {
    SeededRng data_rng(10);
    auto basis = random_orthonormal(2, 6, data_rng);
    auto data = subspace_data(basis, 6, 32, data_rng);

    auto run = [&](std::uint64_t net_seed, std::uint64_t train_seed) {
        SeededRng net_rng(net_seed);
        auto model = make_autoencoder({6, 3}, net_rng);
        SeededRng train_rng(train_seed);
        auto result = pretrain(model, data, 10, 8, train_rng);
        return std::make_pair(std::move(model), std::move(result));
    };

    auto [model_a, result_a] = run(11, 12);
    auto [model_b, result_b] = run(11, 12);
    CHECK(result_a.loss_trace == result_b.loss_trace);
    CHECK(nets_equal(model_a.encoder, model_b.encoder));
    CHECK(nets_equal(model_a.decoder, model_b.decoder));

    auto [model_c, result_c] = run(11, 13);
    CHECK(result_a.loss_trace != result_c.loss_trace);
}

TEST_CASE("deep bottleneck recovers a rank-matched subspace to low loss") {
    SeededRng data_rng(14);
    auto basis = random_orthonormal(4, 16, data_rng);
    auto data = subspace_data(basis, 16, 128, data_rng);

    SeededRng net_rng(15);
    auto model = make_autoencoder({16, 8, 4}, net_rng);
    SeededRng train_rng(16);
    auto result = pretrain(model, data, 200, 16, train_rng);
    REQUIRE(result.loss_trace.size() == 200);
    // Per-dimension data variance is about 1, so 0.05 means the subspace was
    // essentially captured rather than averaged away.
    CHECK(result.loss_trace.back() < 0.05);
}
