#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "svdd/dense_net.hpp"
#include "svdd/rng.hpp"

namespace svdd {

// One-class hypersphere model: a bias-free encoder pulled toward a frozen,
// non-zero center.  radius is descriptive output, never a training variable.
struct DeepSvddModel {
    DenseNet encoder;
    Vec center;
    double radius = 0.0;
    double weight_decay = 1e-6;  // lambda
    double nu = 0.1;
    std::uint64_t seed = 0;
};

// Mean encoded vector, with every coordinate whose magnitude falls below 0.1
// pushed to +-0.1 (sign kept; the sign of zero counts as +).  Keeping the
// center away from the origin blocks the all-zero-weights collapse.
Vec init_center(const DenseNet& encoder, const std::vector<Vec>& vectors);

struct SvddTrainResult {
    // Full-dataset objective evaluated after each epoch; length == epochs.
    std::vector<double> objective_trace;
};

// Mean squared center distance plus (weight_decay/2) * sum of squared
// Frobenius norms — the quantity train_one_class minimizes.
double objective(const DeepSvddModel& model, const std::vector<Vec>& vectors);

// Adam minibatch training of the one-class objective; the center stays
// frozen.  Requires init_center to have been called (ContractError
// otherwise).  After the final epoch the descriptive radius is set to the
// square root of the empirical (1-nu) quantile of the raw train scores.
// Non-finite objectives raise TrainingError naming the epoch.
SvddTrainResult train_one_class(DeepSvddModel& model, const std::vector<Vec>& vectors,
                                std::size_t epochs, std::size_t batch_size, SeededRng& rng);

// Raw outlierness: squared distance of the encoded vector from the center.
double score_one(const DeepSvddModel& model, const Vec& v);
Vec score(const DeepSvddModel& model, const std::vector<Vec>& vectors);

// Min-max normalization to [0, 1].  A constant (or single-score) set maps to
// all zeros.  Empty input raises ContractError.
Vec normalize_scores(const Vec& raw);

// Scores for a batch of records, raw and normalized, aligned by position.
struct ScoreSet {
    std::vector<std::string> ids;
    Vec raw;
    Vec normalized;
};

// JSON persistence.  Weights round-trip value-exactly (shortest decimal
// serialization that parses back to the identical double).
std::string model_to_json(const DeepSvddModel& model);
DeepSvddModel model_from_json(const std::string& json_text);
void save_model(const DeepSvddModel& model, const std::string& path);
DeepSvddModel load_model(const std::string& path);

}  // namespace svdd
