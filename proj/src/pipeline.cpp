#include "svdd/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <sstream>

#include <nlohmann/json.hpp>

#include "svdd/errors.hpp"
#include "svdd/io.hpp"

namespace svdd {

namespace {

using ordered_json = nlohmann::ordered_json;

}  // namespace

std::vector<std::size_t> derive_encoder_dims(std::size_t dim) {
    if (dim < 2) throw ContractError("embedding dimension must be at least 2");
    const std::size_t h1 = std::max<std::size_t>(4, dim / 3);
    const std::size_t h2 = std::max<std::size_t>(2, dim / 12);
    return {dim, std::max(h1, h2), h2};
}

std::vector<ClassModels> fit_per_class(const std::vector<DatasetRecord>& records,
                                       const std::vector<Vec>& embeddings,
                                       const FitConfig& config) {
    if (records.empty()) throw ContractError("no training records");
    if (records.size() != embeddings.size())
        throw ContractError("got " + std::to_string(records.size()) + " records but " +
                            std::to_string(embeddings.size()) + " embeddings");

    auto groups = partition_by_label(records);
    if (!config.allow_small_classes) {
        for (const auto& [label, indices] : groups) {
            if (indices.size() < config.min_class_size)
                throw DataError(
                    "class " + std::to_string(label) + " has " +
                    std::to_string(indices.size()) + " training records, below the " +
                    std::to_string(config.min_class_size) +
                    "-sample minimum for reliable one-class training; rerun with "
                    "--allow-small-classes to proceed anyway");
        }
    }

    const std::size_t dim = embeddings.front().size();
    std::vector<std::size_t> dims =
        config.encoder_dims.empty() ? derive_encoder_dims(dim) : config.encoder_dims;
    if (dims.size() < 2) throw ConfigError("encoder needs at least two layer widths");
    if (dims.front() != dim)
        throw ConfigError("encoder input width " + std::to_string(dims.front()) +
                          " does not match embedding dimension " + std::to_string(dim));

    std::vector<ClassModels> out;
    const SeededRng base(config.seed);
    for (const auto& [label, indices] : groups) {
        std::vector<Vec> vectors;
        vectors.reserve(indices.size());
        ScoreSet scores;
        for (std::size_t i : indices) {
            vectors.push_back(embeddings[i]);
            scores.ids.push_back(records[i].id);
        }

        // One stream per (seed, label): results are independent of which
        // other classes exist.
        SeededRng class_rng = base.fork(0x636c6173ULL ^ static_cast<std::uint64_t>(label));
        SeededRng net_rng = class_rng.fork(1);
        SeededRng ae_rng = class_rng.fork(2);
        SeededRng svdd_rng = class_rng.fork(3);

        ClassModels fitted;
        fitted.label = label;
        AutoencoderModel autoencoder = make_autoencoder(dims, net_rng);
        fitted.pretrain = pretrain(autoencoder, vectors, config.ae_epochs, config.ae_batch,
                                   ae_rng);
        fitted.model.encoder = std::move(autoencoder.encoder);
        fitted.model.weight_decay = config.weight_decay;
        fitted.model.nu = config.nu;
        fitted.model.seed = config.seed;
        fitted.model.center = init_center(fitted.model.encoder, vectors);
        fitted.training = train_one_class(fitted.model, vectors, config.svdd_epochs,
                                          config.svdd_batch, svdd_rng);
        scores.raw = score(fitted.model, vectors);
        scores.normalized = normalize_scores(scores.raw);
        fitted.train_scores = std::move(scores);
        out.push_back(std::move(fitted));
    }
    return out;
}

FilterReport filter_by_threshold(const std::vector<LabeledScores>& scores, double tau,
                                 std::uint64_t seed) {
    if (!(tau >= 0.0 && tau <= 1.0))
        throw ContractError("threshold must lie in [0, 1], got " + std::to_string(tau));

    FilterReport report;
    report.threshold = tau;
    report.seed = seed;
    report.created_at = iso_utc_now();

    std::vector<LabeledScores const*> ordered;
    for (const auto& entry : scores) ordered.push_back(&entry);
    std::sort(ordered.begin(), ordered.end(),
              [](const auto* a, const auto* b) { return a->label < b->label; });

    for (const auto* entry : ordered) {
        const ScoreSet& set = entry->scores;
        if (set.ids.size() != set.normalized.size())
            throw ContractError("score set for class " + std::to_string(entry->label) +
                                " has " + std::to_string(set.ids.size()) + " ids but " +
                                std::to_string(set.normalized.size()) + " scores");
        ClassFilter cf;
        cf.label = entry->label;
        for (std::size_t i = 0; i < set.ids.size(); ++i) {
            (set.normalized[i] <= tau ? cf.kept_ids : cf.removed_ids).push_back(set.ids[i]);
        }
        const std::size_t class_total = set.ids.size();
        cf.coverage_percent = class_total == 0
                                  ? 100.0
                                  : 100.0 * static_cast<double>(cf.kept_ids.size()) /
                                        static_cast<double>(class_total);
        report.total += class_total;
        report.kept += cf.kept_ids.size();
        report.classes.push_back(std::move(cf));
    }
    report.data_coverage_percent =
        report.total == 0
            ? 100.0
            : 100.0 * static_cast<double>(report.kept) / static_cast<double>(report.total);
    return report;
}

std::string coverage_text(const FilterReport& report) {
    std::ostringstream out;
    out << "threshold " << format_fixed3(report.threshold) << "\n";
    for (const ClassFilter& cf : report.classes) {
        out << "  class " << cf.label << ": kept " << cf.kept_ids.size() << "/"
            << (cf.kept_ids.size() + cf.removed_ids.size()) << " ("
            << format_percent(cf.coverage_percent) << ")\n";
    }
    out << "  overall: kept " << report.kept << "/" << report.total << " ("
        << format_percent(report.data_coverage_percent) << ")\n";
    return out.str();
}

void write_score_set(const std::string& path, const ScoreSet& scores) {
    if (scores.ids.size() != scores.raw.size() || scores.ids.size() != scores.normalized.size())
        throw ContractError("score set fields must align");
    std::string body;
    for (std::size_t i = 0; i < scores.ids.size(); ++i) {
        ordered_json row;
        row["format_version"] = 1;
        row["id"] = scores.ids[i];
        row["raw"] = scores.raw[i];
        row["normalized"] = scores.normalized[i];
        body += row.dump();
        body += "\n";
    }
    write_text_file_atomic(path, body);
}

ScoreSet read_score_set(const std::string& path) {
    const std::string text = read_text_file(path);
    ScoreSet scores;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        const std::string line = text.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (line.empty()) continue;
        ordered_json row;
        try {
            row = ordered_json::parse(line);
        } catch (const std::exception& e) {
            throw DataError(path + " line " + std::to_string(line_no) +
                            ": invalid JSON: " + e.what());
        }
        try {
            if (row.at("format_version").get<int>() != 1)
                throw DataError(path + " line " + std::to_string(line_no) +
                                ": unsupported format_version");
            scores.ids.push_back(row.at("id").get<std::string>());
            scores.raw.push_back(row.at("raw").get<double>());
            scores.normalized.push_back(row.at("normalized").get<double>());
        } catch (const ordered_json::exception& e) {
            throw DataError(path + " line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return scores;
}

std::string report_to_json(const FilterReport& report) {
    ordered_json doc;
    doc["format_version"] = 1;
    doc["threshold"] = report.threshold;
    doc["seed"] = report.seed;
    doc["total"] = report.total;
    doc["kept"] = report.kept;
    doc["data_coverage_percent"] = report.data_coverage_percent;
    doc["created_at"] = report.created_at;
    ordered_json classes = ordered_json::array();
    for (const ClassFilter& cf : report.classes) {
        ordered_json jc;
        jc["label"] = cf.label;
        jc["coverage_percent"] = cf.coverage_percent;
        jc["kept"] = cf.kept_ids;
        jc["removed"] = cf.removed_ids;
        classes.push_back(std::move(jc));
    }
    doc["classes"] = std::move(classes);
    return doc.dump(2);
}

FilterReport report_from_json(const std::string& text) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(text);
    } catch (const std::exception& e) {
        throw DataError(std::string("report is not valid JSON: ") + e.what());
    }
    try {
        if (doc.at("format_version").get<int>() != 1)
            throw DataError("unsupported report format_version");
        FilterReport report;
        report.threshold = doc.at("threshold").get<double>();
        report.seed = doc.at("seed").get<std::uint64_t>();
        report.total = doc.at("total").get<std::size_t>();
        report.kept = doc.at("kept").get<std::size_t>();
        report.data_coverage_percent = doc.at("data_coverage_percent").get<double>();
        report.created_at = doc.at("created_at").get<std::string>();
        for (const auto& jc : doc.at("classes")) {
            ClassFilter cf;
            cf.label = jc.at("label").get<int>();
            cf.coverage_percent = jc.at("coverage_percent").get<double>();
            cf.kept_ids = jc.at("kept").get<std::vector<std::string>>();
            cf.removed_ids = jc.at("removed").get<std::vector<std::string>>();
            report.classes.push_back(std::move(cf));
        }
        return report;
    } catch (const ordered_json::exception& e) {
        throw DataError(std::string("report is missing fields: ") + e.what());
    }
}

std::string report_filename(double tau) {
    return "report_" + format_fixed3(tau) + ".json";
}

void write_report(const FilterReport& report, const std::string& directory) {
    const auto path = std::filesystem::path(directory) / report_filename(report.threshold);
    write_text_file_atomic(path.string(), report_to_json(report) + "\n");
}

FilterReport read_report(const std::string& path) {
    return report_from_json(read_text_file(path));
}

}  // namespace svdd
