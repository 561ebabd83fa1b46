#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "svdd/dataset.hpp"
#include "svdd/dense_net.hpp"

namespace svdd {

// Synthetic labeled clusters with controllable contamination, used as ground
// truth for end-to-end checks.  Class centers sit on the coordinate axes at
// +-12 cluster_std, so any two are at least 12*sqrt(2) sigma apart; this
// requires n_classes <= 2 * dim.
struct SynthSpec {
    std::size_t n_classes = 2;
    std::size_t n_per_class = 600;
    std::size_t dim = 32;
    double cluster_std = 1.0;
    double outlier_fraction = 0.0;  // rho in [0, 0.5); floor(rho * n_per_class) per class
    enum class Mode {
        label_flip,  // relabel the rho most extreme points (along a random
                     // class-specific direction) to the next class; their
                     // vectors stay near their true center
        far_point,   // displace rho random points by 20 sigma in a random
                     // direction; labels stay truthful
    };
    Mode mode = Mode::label_flip;
    std::uint64_t seed = 0;
};

SynthSpec::Mode parse_synth_mode(const std::string& name);  // "label_flip" | "far_point"

struct SynthDataset {
    std::vector<DatasetRecord> records;  // sequential ids, token-soup text, observed labels
    std::vector<Vec> embeddings;         // aligned with records
    std::vector<bool> is_injected;       // truth flags, aligned; for tests only
    std::vector<int> true_labels;        // aligned; differs from the record label on flips
};

// Deterministic in spec.seed.  Records are grouped by class in ascending
// label order; ids are the zero-based global indices rendered in decimal.
SynthDataset generate(const SynthSpec& spec);

// Writes the dataset (records JSONL), the vectors (precomputed-embedding
// JSONL {"id", "vector"}), and the truth sidecar ({"id", "is_injected",
// "true_label"} JSONL).  Any path may be empty to skip that file.
void write_synth(const SynthDataset& data, const std::string& dataset_path,
                 const std::string& vectors_path, const std::string& truth_path);

}  // namespace svdd
