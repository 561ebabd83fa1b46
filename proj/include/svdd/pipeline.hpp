#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "svdd/autoencoder.hpp"
#include "svdd/dataset.hpp"
#include "svdd/deep_svdd.hpp"

namespace svdd {

struct FitConfig {
    // Encoder layer widths {input, hidden..., code}.  Empty selects the
    // default ladder {dim, max(4, dim/3), max(2, dim/12)}.
    std::vector<std::size_t> encoder_dims;
    std::size_t ae_epochs = 100;
    std::size_t ae_batch = 64;
    std::size_t svdd_epochs = 150;
    std::size_t svdd_batch = 64;
    double weight_decay = 1e-6;
    double nu = 0.1;
    std::size_t min_class_size = 500;
    bool allow_small_classes = false;
    std::uint64_t seed = 0;
};

std::vector<std::size_t> derive_encoder_dims(std::size_t dim);

// Everything fitted for one label class.
struct ClassModels {
    int label = 0;
    PretrainResult pretrain;
    SvddTrainResult training;
    DeepSvddModel model;
    ScoreSet train_scores;  // over this class's training records, normalized within class
};

// Trains one autoencoder-initialized one-class model per label over the given
// records (already restricted to the training split), embeddings aligned by
// position.  Classes are processed in ascending label order with rng streams
// forked per label from config.seed, so results do not depend on class order
// or count.  A class smaller than min_class_size is refused (DataError citing
// the limit) unless allow_small_classes is set.
std::vector<ClassModels> fit_per_class(const std::vector<DatasetRecord>& records,
                                       const std::vector<Vec>& embeddings,
                                       const FitConfig& config);

struct LabeledScores {
    int label = 0;
    ScoreSet scores;
};

struct ClassFilter {
    int label = 0;
    std::vector<std::string> kept_ids;
    std::vector<std::string> removed_ids;
    double coverage_percent = 0.0;
};

struct FilterReport {
    double threshold = 0.0;
    std::uint64_t seed = 0;
    std::size_t total = 0;
    std::size_t kept = 0;
    double data_coverage_percent = 0.0;
    std::vector<ClassFilter> classes;  // ascending label
    std::string created_at;            // ISO-8601 UTC; informational only
};

// Keeps a record iff its normalized score <= tau (inclusive).  Pure function
// of (scores, tau): same scores and threshold always produce the same report.
// tau outside [0, 1] raises ContractError.
FilterReport filter_by_threshold(const std::vector<LabeledScores>& scores, double tau,
                                 std::uint64_t seed);

// Fixed-point text rendering of a report: per-class and overall coverage with
// three-decimal percentages.
std::string coverage_text(const FilterReport& report);

// --- persistence -----------------------------------------------------------

// Score rows are JSONL: {"format_version": 1, "id": ..., "raw": ...,
// "normalized": ...}.  Values round-trip exactly.
void write_score_set(const std::string& path, const ScoreSet& scores);
ScoreSet read_score_set(const std::string& path);

std::string report_to_json(const FilterReport& report);
FilterReport report_from_json(const std::string& text);

// report_<tau>.json with tau rendered to three decimals, e.g. report_0.600.json
std::string report_filename(double tau);
void write_report(const FilterReport& report, const std::string& directory);
FilterReport read_report(const std::string& path);

}  // namespace svdd
