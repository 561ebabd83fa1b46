#include "svdd/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "svdd/errors.hpp"
#include "svdd/io.hpp"
#include "svdd/rng.hpp"

namespace svdd {

namespace {

using ordered_json = nlohmann::ordered_json;

Vec class_center(std::size_t label, std::size_t dim, double cluster_std) {
    Vec center(dim, 0.0);
    center[label / 2] = (label % 2 == 0 ? 12.0 : -12.0) * cluster_std;
    return center;
}

Vec random_unit(std::size_t dim, SeededRng& rng) {
    Vec u(dim);
    double norm = 0.0;
    do {
        norm = 0.0;
        for (double& x : u) {
            x = rng.gaussian();
            norm += x * x;
        }
    } while (norm == 0.0);
    norm = std::sqrt(norm);
    for (double& x : u) x /= norm;
    return u;
}

std::string token_soup(std::size_t label, SeededRng& rng) {
    std::string text;
    for (int t = 0; t < 6; ++t) {
        if (t > 0) text += ' ';
        text += 'w';
        text += std::to_string(label);
        text += '_';
        text += std::to_string(rng.below(50));
    }
    return text;
}

}  // namespace

SynthSpec::Mode parse_synth_mode(const std::string& name) {
    if (name == "label_flip") return SynthSpec::Mode::label_flip;
    if (name == "far_point") return SynthSpec::Mode::far_point;
    throw ConfigError("unknown outlier mode \"" + name +
                      "\" (expected label_flip or far_point)");
}

SynthDataset generate(const SynthSpec& spec) {
    if (spec.n_per_class < 10) throw ContractError("n_per_class must be at least 10");
    if (spec.dim < 2) throw ContractError("dim must be at least 2");
    if (spec.n_classes < 1) throw ContractError("need at least one class");
    if (spec.n_classes > 2 * spec.dim)
        throw ContractError("center layout supports at most 2*dim classes, got " +
                            std::to_string(spec.n_classes));
    if (!(spec.outlier_fraction >= 0.0 && spec.outlier_fraction < 0.5))
        throw ContractError("outlier_fraction must lie in [0, 0.5), got " +
                            std::to_string(spec.outlier_fraction));
    if (!(spec.cluster_std > 0.0)) throw ContractError("cluster_std must be positive");

    SynthDataset data;
    const SeededRng base(spec.seed);
    const std::size_t injected_per_class =
        static_cast<std::size_t>(spec.outlier_fraction * static_cast<double>(spec.n_per_class));

    for (std::size_t label = 0; label < spec.n_classes; ++label) {
        SeededRng class_rng = base.fork(0x73796e7468ULL ^ label);
        SeededRng point_rng = class_rng.fork(1);
        SeededRng inject_rng = class_rng.fork(2);
        SeededRng text_rng = class_rng.fork(3);

        const Vec center = class_center(label, spec.dim, spec.cluster_std);
        const std::size_t offset = data.records.size();
        for (std::size_t i = 0; i < spec.n_per_class; ++i) {
            Vec x(spec.dim);
            for (std::size_t j = 0; j < spec.dim; ++j)
                x[j] = center[j] + spec.cluster_std * point_rng.gaussian();
            DatasetRecord record;
            record.id = std::to_string(data.records.size());
            record.text = token_soup(label, text_rng);
            record.label = static_cast<int>(label);
            data.records.push_back(std::move(record));
            data.embeddings.push_back(std::move(x));
            data.is_injected.push_back(false);
            data.true_labels.push_back(static_cast<int>(label));
        }

        if (injected_per_class == 0) continue;
        if (spec.mode == SynthSpec::Mode::label_flip) {
            // Flip the labels of the points sitting farthest along a random
            // direction: a coherent cap of the cluster, mislabeled but still
            // geometrically at home in its true class.
            const Vec direction = random_unit(spec.dim, inject_rng);
            std::vector<std::pair<double, std::size_t>> projected;
            for (std::size_t i = 0; i < spec.n_per_class; ++i) {
                double dot = 0.0;
                for (std::size_t j = 0; j < spec.dim; ++j)
                    dot += direction[j] * data.embeddings[offset + i][j];
                projected.push_back({dot, offset + i});
            }
            std::sort(projected.begin(), projected.end(), [](const auto& a, const auto& b) {
                if (a.first != b.first) return a.first > b.first;
                return a.second < b.second;
            });
            const int flipped_to = static_cast<int>((label + 1) % spec.n_classes);
            for (std::size_t r = 0; r < injected_per_class; ++r) {
                const std::size_t at = projected[r].second;
                data.records[at].label = flipped_to;
                data.is_injected[at] = true;
            }
        } else {
            std::vector<std::size_t> order(spec.n_per_class);
            std::iota(order.begin(), order.end(), 0);
            inject_rng.shuffle(order);
            for (std::size_t r = 0; r < injected_per_class; ++r) {
                const std::size_t at = offset + order[r];
                const Vec direction = random_unit(spec.dim, inject_rng);
                for (std::size_t j = 0; j < spec.dim; ++j)
                    data.embeddings[at][j] += 20.0 * spec.cluster_std * direction[j];
                data.is_injected[at] = true;
            }
        }
    }
    return data;
}

void write_synth(const SynthDataset& data, const std::string& dataset_path,
                 const std::string& vectors_path, const std::string& truth_path) {
    if (!dataset_path.empty()) {
        std::string body;
        for (const DatasetRecord& record : data.records) {
            ordered_json row;
            row["id"] = record.id;
            row["text"] = record.text;
            row["label"] = record.label;
            body += row.dump();
            body += "\n";
        }
        write_text_file_atomic(dataset_path, body);
    }
    if (!vectors_path.empty()) {
        std::string body;
        for (std::size_t i = 0; i < data.records.size(); ++i) {
            ordered_json row;
            row["id"] = data.records[i].id;
            row["vector"] = data.embeddings[i];
            body += row.dump();
            body += "\n";
        }
        write_text_file_atomic(vectors_path, body);
    }
    if (!truth_path.empty()) {
        std::string body;
        for (std::size_t i = 0; i < data.records.size(); ++i) {
            ordered_json row;
            row["id"] = data.records[i].id;
            row["is_injected"] = static_cast<bool>(data.is_injected[i]);
            row["true_label"] = data.true_labels[i];
            body += row.dump();
            body += "\n";
        }
        write_text_file_atomic(truth_path, body);
    }
}

}  // namespace svdd
