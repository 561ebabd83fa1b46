#include "svdd/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "svdd/classifiers.hpp"
#include "svdd/dataset.hpp"
#include "svdd/deep_svdd.hpp"
#include "svdd/embeddings.hpp"
#include "svdd/errors.hpp"
#include "svdd/io.hpp"
#include "svdd/oracle.hpp"
#include "svdd/pipeline.hpp"
#include "svdd/synth.hpp"

namespace svdd {

namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

const std::vector<std::string> kKnownClassifiers = {"knn", "logistic_regression", "lda",
                                                    "decision_tree"};

std::string fmt6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

std::string fmt3(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

std::string join_fmt6(const Vec& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ", ";
        out += fmt6(v[i]);
    }
    return out;
}

ordered_json parse_json_file(const std::string& path) {
    const std::string text = read_text_file(path);
    try {
        return ordered_json::parse(text);
    } catch (const std::exception& e) {
        throw DataError(path + ": invalid JSON: " + std::string(e.what()));
    }
}

// --- clean ------------------------------------------------------------------

struct CleanOptions {
    std::string data;
    std::string format = "auto";
    std::string embedder = "hashing";
    std::size_t dim = 384;
    std::string vectors_file;
    std::string embed_url;
    std::uint64_t hash_seed = 0;
    std::size_t batch_size = 32;
    std::size_t retries = 3;
    double timeout_seconds = 30.0;
    double threshold = 0.6;
    std::vector<double> thresholds;
    bool threshold_given = false;
    bool thresholds_given = false;
    double test_fraction = 0.1;
    std::uint64_t seed = 0;
    std::string out = "svdd_run";
    bool allow_small_classes = false;
    std::size_t min_class_size = 500;
    std::vector<std::string> classifiers = kKnownClassifiers;
    std::size_t knn_k = 5;
    std::size_t logreg_epochs = 300;
    double logreg_lr = 0.1;
    std::size_t tree_depth = 8;
    std::size_t tree_min_leaf = 1;
    std::size_t epochs_ae = 100;
    std::size_t epochs_svdd = 150;
    std::size_t batch_ae = 64;
    std::size_t batch_svdd = 64;
    double lambda = 1e-6;
    double nu = 0.1;
    std::vector<std::size_t> encoder_dims;
};

std::vector<double> resolve_thresholds(bool single_given, double single, bool list_given,
                                       std::vector<double> list, bool allow_default) {
    std::vector<double> out;
    if (list_given) {
        out = std::move(list);
        if (out.empty()) throw ConfigError("--thresholds needs at least one value");
    } else if (single_given) {
        out = {single};
    } else if (allow_default) {
        out = {0.2, 0.4, 0.6, 0.8, 1.0};
    } else {
        throw ConfigError("pass --threshold or --thresholds");
    }
    for (double tau : out) {
        if (!(tau >= 0.0 && tau <= 1.0))
            throw ConfigError("threshold " + std::to_string(tau) + " is outside [0, 1]");
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

void validate_classifiers(const std::vector<std::string>& names) {
    if (names.empty()) throw ConfigError("no classifiers selected");
    for (const std::string& name : names) {
        if (std::find(kKnownClassifiers.begin(), kKnownClassifiers.end(), name) ==
            kKnownClassifiers.end()) {
            std::string known;
            for (const std::string& k : kKnownClassifiers) {
                if (!known.empty()) known += ", ";
                known += k;
            }
            throw ConfigError("unknown classifier \"" + name + "\" (known: " + known + ")");
        }
    }
}

void validate_clean(const CleanOptions& o) {
    if (o.dim < 2) throw ConfigError("--dim must be at least 2");
    if (!(o.nu > 0.0 && o.nu <= 1.0)) throw ConfigError("--nu must lie in (0, 1]");
    if (o.lambda < 0.0) throw ConfigError("--lambda must be nonnegative");
    if (!(o.test_fraction > 0.0 && o.test_fraction < 1.0))
        throw ConfigError("--test-fraction must lie in (0, 1)");
    if (o.batch_ae < 1 || o.batch_svdd < 1) throw ConfigError("batch sizes must be positive");
    if (o.knn_k < 1) throw ConfigError("--knn-k must be at least 1");
    if (o.tree_depth < 1) throw ConfigError("--tree-depth must be at least 1");
    if (o.tree_min_leaf < 1) throw ConfigError("--tree-min-leaf must be at least 1");
    if (!(o.logreg_lr > 0.0)) throw ConfigError("--logreg-lr must be positive");
    validate_classifiers(o.classifiers);
}

EmbeddingProviderConfig embedder_config(const CleanOptions& o) {
    EmbeddingProviderConfig ec;
    ec.dim = o.dim;
    ec.hash_seed = o.hash_seed;
    ec.batch_size = o.batch_size;
    ec.retries = o.retries;
    ec.timeout_seconds = o.timeout_seconds;
    if (o.embedder == "hashing") {
        ec.kind = EmbeddingProviderConfig::Kind::hashing;
    } else if (o.embedder == "precomputed") {
        if (o.vectors_file.empty())
            throw ConfigError("--embedder precomputed requires --vectors");
        ec.kind = EmbeddingProviderConfig::Kind::precomputed;
        ec.file_path = o.vectors_file;
    } else if (o.embedder == "remote") {
        if (o.embed_url.empty())
            throw ConfigError(
                "--embedder remote requires --embed-url or SVDD_CLEAN_EMBED_URL");
        ec.kind = EmbeddingProviderConfig::Kind::remote;
        ec.base_url = o.embed_url;
    } else {
        throw ConfigError("unknown embedder \"" + o.embedder +
                          "\" (hashing, precomputed, remote)");
    }
    return ec;
}

ordered_json config_json(const CleanOptions& o, const std::vector<std::size_t>& dims,
                         const std::vector<double>& thresholds) {
    ordered_json doc;
    doc["format_version"] = 1;
    doc["data"] = o.data;
    doc["format"] = o.format;
    ordered_json embedder;
    embedder["kind"] = o.embedder;
    embedder["dim"] = o.dim;
    embedder["hash_seed"] = o.hash_seed;
    embedder["vectors_file"] = o.vectors_file;
    embedder["base_url"] = o.embed_url;
    embedder["batch_size"] = o.batch_size;
    embedder["retries"] = o.retries;
    embedder["timeout_seconds"] = o.timeout_seconds;
    doc["embedder"] = std::move(embedder);
    doc["encoder_dims"] = dims;
    doc["ae"] = ordered_json{{"epochs", o.epochs_ae}, {"batch", o.batch_ae}};
    doc["svdd"] = ordered_json{{"epochs", o.epochs_svdd},
                               {"batch", o.batch_svdd},
                               {"lambda", o.lambda},
                               {"nu", o.nu}};
    doc["thresholds"] = thresholds;
    doc["test_fraction"] = o.test_fraction;
    doc["seed"] = o.seed;
    doc["min_class_size"] = o.min_class_size;
    doc["allow_small_classes"] = o.allow_small_classes;
    ordered_json classifiers;
    classifiers["selected"] = o.classifiers;
    classifiers["knn_k"] = o.knn_k;
    classifiers["logreg_epochs"] = o.logreg_epochs;
    classifiers["logreg_lr"] = o.logreg_lr;
    classifiers["tree_depth"] = o.tree_depth;
    classifiers["tree_min_leaf"] = o.tree_min_leaf;
    doc["classifiers"] = std::move(classifiers);
    return doc;
}

int cmd_clean(const CleanOptions& o) {
    validate_clean(o);
    const std::vector<double> thresholds = resolve_thresholds(
        o.threshold_given, o.threshold, o.thresholds_given, o.thresholds, true);

    const std::vector<DatasetRecord> records = load_dataset(o.data, parse_dataset_format(o.format));
    if (records.empty()) throw DataError("dataset " + o.data + " has no records");
    const std::vector<Vec> embeddings = embed(embedder_config(o), records);
    const std::size_t dim = embeddings.front().size();
    const std::vector<std::size_t> dims =
        o.encoder_dims.empty() ? derive_encoder_dims(dim) : o.encoder_dims;

    const SeededRng split_rng(o.seed);
    const SplitIds split = split_train_test(records, o.test_fraction, split_rng);
    std::map<std::string, std::size_t> row;
    for (std::size_t i = 0; i < records.size(); ++i) row[records[i].id] = i;

    std::vector<DatasetRecord> train_records;
    std::vector<Vec> train_vectors;
    for (const std::string& id : split.train) {
        const std::size_t i = row.at(id);
        train_records.push_back(records[i]);
        train_vectors.push_back(embeddings[i]);
    }
    std::cout << "loaded " << records.size() << " records from " << o.data << " (train "
              << split.train.size() << ", test " << split.test.size() << ")\n";

    FitConfig fit;
    fit.encoder_dims = dims;
    fit.ae_epochs = o.epochs_ae;
    fit.ae_batch = o.batch_ae;
    fit.svdd_epochs = o.epochs_svdd;
    fit.svdd_batch = o.batch_svdd;
    fit.weight_decay = o.lambda;
    fit.nu = o.nu;
    fit.min_class_size = o.min_class_size;
    fit.allow_small_classes = o.allow_small_classes;
    fit.seed = o.seed;
    const std::vector<ClassModels> models = fit_per_class(train_records, train_vectors, fit);

    // Score the held-out records with their own class's model, normalized
    // within the class's test subset.
    std::map<int, std::vector<std::size_t>> test_by_label;
    for (const std::string& id : split.test) {
        const std::size_t i = row.at(id);
        test_by_label[records[i].label].push_back(i);
    }
    std::map<int, ScoreSet> test_scores;
    std::set<int> model_labels;
    for (const ClassModels& cm : models) {
        model_labels.insert(cm.label);
        ScoreSet scores;
        auto it = test_by_label.find(cm.label);
        if (it != test_by_label.end()) {
            std::vector<Vec> vectors;
            for (std::size_t i : it->second) {
                scores.ids.push_back(records[i].id);
                vectors.push_back(embeddings[i]);
            }
            scores.raw = score(cm.model, vectors);
            scores.normalized = normalize_scores(scores.raw);
        }
        test_scores[cm.label] = std::move(scores);
    }
    for (const auto& [label, indices] : test_by_label) {
        if (!model_labels.count(label))
            throw DataError("test split contains class " + std::to_string(label) +
                            " with no trained model");
    }

    fs::create_directories(o.out);
    const fs::path dir(o.out);
    write_text_file_atomic((dir / "config.json").string(),
                           config_json(o, dims, thresholds).dump(2) + "\n");

    {
        std::string body;
        for (std::size_t i = 0; i < records.size(); ++i) {
            ordered_json line;
            line["id"] = records[i].id;
            line["vector"] = embeddings[i];
            body += line.dump();
            body += "\n";
        }
        write_text_file_atomic((dir / "embeddings.jsonl").string(), body);
    }

    ordered_json model_files, train_score_files, test_score_files;
    for (const ClassModels& cm : models) {
        const std::string label = std::to_string(cm.label);
        const std::string model_file = "model_class_" + label + ".json";
        const std::string train_file = "scores_class_" + label + ".jsonl";
        const std::string test_file = "test_scores_class_" + label + ".jsonl";
        save_model(cm.model, (dir / model_file).string());
        write_score_set((dir / train_file).string(), cm.train_scores);
        write_score_set((dir / test_file).string(), test_scores.at(cm.label));
        model_files[label] = model_file;
        train_score_files[label] = train_file;
        test_score_files[label] = test_file;
    }

    std::vector<LabeledScores> train_labeled;
    for (const ClassModels& cm : models) train_labeled.push_back({cm.label, cm.train_scores});
    std::vector<std::string> report_files;
    for (double tau : thresholds) {
        const FilterReport report = filter_by_threshold(train_labeled, tau, o.seed);
        write_report(report, o.out);
        report_files.push_back(report_filename(tau));
        std::cout << coverage_text(report);
    }

    ordered_json manifest;
    manifest["format_version"] = 1;
    manifest["created_at"] = iso_utc_now();
    manifest["data"] = o.data;
    manifest["format"] = o.format;
    manifest["seed"] = o.seed;
    manifest["test_fraction"] = o.test_fraction;
    manifest["dim"] = dim;
    manifest["encoder_dims"] = dims;
    ordered_json record_rows = ordered_json::array();
    for (const DatasetRecord& r : records)
        record_rows.push_back(ordered_json{{"id", r.id}, {"label", r.label}});
    manifest["records"] = std::move(record_rows);
    manifest["train_ids"] = split.train;
    manifest["test_ids"] = split.test;
    ordered_json class_rows = ordered_json::array();
    for (const ClassModels& cm : models) {
        const auto test_it = test_by_label.find(cm.label);
        class_rows.push_back(
            ordered_json{{"label", cm.label},
                         {"train", cm.train_scores.ids.size()},
                         {"test", test_it == test_by_label.end() ? 0 : test_it->second.size()}});
    }
    manifest["classes"] = std::move(class_rows);
    ordered_json files;
    files["embeddings"] = "embeddings.jsonl";
    files["models"] = std::move(model_files);
    files["train_scores"] = std::move(train_score_files);
    files["test_scores"] = std::move(test_score_files);
    files["reports"] = report_files;
    manifest["files"] = std::move(files);
    write_text_file_atomic((dir / "manifest.json").string(), manifest.dump(2) + "\n");

    std::cout << "run directory: " << o.out << "\n";
    return 0;
}

// --- eval -------------------------------------------------------------------

struct ClassifierParams {
    std::size_t knn_k = 5;
    std::size_t logreg_epochs = 300;
    double logreg_lr = 0.1;
    std::size_t tree_depth = 8;
    std::size_t tree_min_leaf = 1;
};

TrainedClassifier fit_named(const std::string& name, const std::vector<Vec>& vectors,
                            const std::vector<int>& labels, const ClassifierParams& params,
                            std::uint64_t seed) {
    if (name == "knn") return fit_knn(vectors, labels, params.knn_k);
    if (name == "logistic_regression") {
        SeededRng rng(seed);
        return fit_logistic_regression(vectors, labels, params.logreg_epochs, params.logreg_lr,
                                       rng);
    }
    if (name == "lda") return fit_lda(vectors, labels);
    if (name == "decision_tree")
        return fit_decision_tree(vectors, labels, params.tree_depth, params.tree_min_leaf);
    throw ConfigError("unknown classifier \"" + name + "\"");
}

int cmd_eval(const std::string& run, const std::vector<std::string>& classifier_override) {
    const fs::path dir(run);
    const ordered_json manifest = parse_json_file((dir / "manifest.json").string());
    const ordered_json config = parse_json_file((dir / "config.json").string());

    std::string dataset_name;
    std::uint64_t seed = 0;
    ClassifierParams params;
    std::vector<std::string> selected;
    std::vector<std::string> train_ids, test_ids, report_files;
    std::map<std::string, int> label_of;
    std::string embeddings_file;
    std::map<std::string, std::string> test_score_files;
    try {
        dataset_name = manifest.at("data").get<std::string>();
        seed = config.at("seed").get<std::uint64_t>();
        const ordered_json& cc = config.at("classifiers");
        params.knn_k = cc.at("knn_k").get<std::size_t>();
        params.logreg_epochs = cc.at("logreg_epochs").get<std::size_t>();
        params.logreg_lr = cc.at("logreg_lr").get<double>();
        params.tree_depth = cc.at("tree_depth").get<std::size_t>();
        params.tree_min_leaf = cc.at("tree_min_leaf").get<std::size_t>();
        selected = cc.at("selected").get<std::vector<std::string>>();
        train_ids = manifest.at("train_ids").get<std::vector<std::string>>();
        test_ids = manifest.at("test_ids").get<std::vector<std::string>>();
        for (const auto& r : manifest.at("records"))
            label_of[r.at("id").get<std::string>()] = r.at("label").get<int>();
        const ordered_json& files = manifest.at("files");
        embeddings_file = files.at("embeddings").get<std::string>();
        for (const auto& [label, file] : files.at("test_scores").items())
            test_score_files[label] = file.get<std::string>();
        report_files = files.at("reports").get<std::vector<std::string>>();
    } catch (const ordered_json::exception& e) {
        throw DataError(run + ": run artifacts are missing fields: " + e.what());
    }
    if (!classifier_override.empty()) selected = classifier_override;
    validate_classifiers(selected);
    if (report_files.empty()) throw DataError(run + ": no filter reports recorded");
    if (test_ids.empty()) throw DataError(run + ": empty test split");

    // Embeddings for every record.
    std::map<std::string, Vec> vector_of;
    {
        const std::string path = (dir / embeddings_file).string();
        const std::string text = read_text_file(path);
        std::size_t line_no = 0;
        for (const std::string& line : split_on(text, '\n')) {
            ++line_no;
            if (line.empty()) continue;
            try {
                const ordered_json rowj = ordered_json::parse(line);
                vector_of[rowj.at("id").get<std::string>()] = rowj.at("vector").get<Vec>();
            } catch (const std::exception& e) {
                throw DataError(path + " line " + std::to_string(line_no) + ": " + e.what());
            }
        }
    }

    // Pooled normalized test scores.
    std::map<std::string, double> score_of;
    for (const auto& [label, file] : test_score_files) {
        const ScoreSet scores = read_score_set((dir / file).string());
        for (std::size_t i = 0; i < scores.ids.size(); ++i)
            score_of[scores.ids[i]] = scores.normalized[i];
    }

    std::vector<Vec> test_vectors;
    std::vector<int> test_labels;
    Vec test_scores;
    for (const std::string& id : test_ids) {
        const auto vec_it = vector_of.find(id);
        if (vec_it == vector_of.end())
            throw DataError(run + ": no embedding stored for test record " + id);
        const auto score_it = score_of.find(id);
        if (score_it == score_of.end())
            throw DataError(run + ": no test score stored for record " + id);
        const auto label_it = label_of.find(id);
        if (label_it == label_of.end())
            throw DataError(run + ": test record " + id + " is missing from the manifest");
        test_vectors.push_back(vec_it->second);
        test_labels.push_back(label_it->second);
        test_scores.push_back(score_it->second);
    }

    std::vector<FilterReport> reports;
    for (const std::string& file : report_files)
        reports.push_back(read_report((dir / file).string()));
    std::sort(reports.begin(), reports.end(),
              [](const FilterReport& a, const FilterReport& b) {
                  return a.threshold < b.threshold;
              });

    struct Row {
        double threshold;
        double coverage;
        std::size_t n_train;
        std::string classifier;
        EvalResult result;
    };
    std::vector<Row> rows;
    for (const FilterReport& report : reports) {
        std::set<std::string> kept;
        for (const ClassFilter& cf : report.classes)
            kept.insert(cf.kept_ids.begin(), cf.kept_ids.end());

        std::vector<Vec> train_vectors;
        std::vector<int> train_labels;
        for (const std::string& id : train_ids) {
            if (!kept.count(id)) continue;
            const auto vec_it = vector_of.find(id);
            if (vec_it == vector_of.end())
                throw DataError(run + ": no embedding stored for training record " + id);
            train_vectors.push_back(vec_it->second);
            train_labels.push_back(label_of.at(id));
        }
        if (train_vectors.empty())
            throw DataError(run + ": threshold " + format_fixed3(report.threshold) +
                            " keeps no training records");

        for (const std::string& name : selected) {
            const TrainedClassifier model =
                fit_named(name, train_vectors, train_labels, params, seed);
            Row rowv{report.threshold, report.data_coverage_percent, train_vectors.size(), name,
                     evaluate_split(model, test_vectors, test_labels, test_scores,
                                    report.threshold)};
            rows.push_back(std::move(rowv));
        }
    }

    // Long table: one row per (threshold, classifier), fractions.
    std::string long_csv =
        "dataset,threshold,classifier,n_train,n_inlier,n_outlier,"
        "accuracy,accuracy_inlier,accuracy_outlier,weighted_accuracy\n";
    for (const Row& r : rows) {
        long_csv += csv_field(dataset_name) + "," + format_fixed3(r.threshold) + "," +
                    r.classifier + "," + std::to_string(r.n_train) + "," +
                    std::to_string(r.result.n_inlier) + "," +
                    std::to_string(r.result.n_outlier) + "," + fmt6(r.result.accuracy) + "," +
                    fmt6(r.result.accuracy_inlier) + "," + fmt6(r.result.accuracy_outlier) +
                    "," + fmt6(r.result.weighted) + "\n";
    }
    write_text_file_atomic((dir / "eval_results.csv").string(), long_csv);

    // Wide table: overall accuracy (percent) per classifier column.
    std::string wide_csv = "dataset,threshold";
    for (const std::string& name : selected) wide_csv += "," + name;
    wide_csv += "\n";
    for (const FilterReport& report : reports) {
        wide_csv += csv_field(dataset_name) + "," + format_fixed3(report.threshold);
        for (const std::string& name : selected) {
            const auto it = std::find_if(rows.begin(), rows.end(), [&](const Row& r) {
                return r.threshold == report.threshold && r.classifier == name;
            });
            wide_csv += "," + fmt3(100.0 * it->result.accuracy);
        }
        wide_csv += "\n";
    }
    write_text_file_atomic((dir / "eval_table1.csv").string(), wide_csv);

    ordered_json doc;
    doc["format_version"] = 1;
    doc["dataset"] = dataset_name;
    doc["seed"] = seed;
    doc["classifiers"] = ordered_json{{"selected", selected},
                                      {"knn_k", params.knn_k},
                                      {"logreg_epochs", params.logreg_epochs},
                                      {"logreg_lr", params.logreg_lr},
                                      {"tree_depth", params.tree_depth},
                                      {"tree_min_leaf", params.tree_min_leaf}};
    ordered_json threshold_rows = ordered_json::array();
    for (const FilterReport& report : reports) {
        ordered_json entry;
        entry["threshold"] = report.threshold;
        entry["data_coverage_percent"] = report.data_coverage_percent;
        ordered_json results = ordered_json::array();
        for (const Row& r : rows) {
            if (r.threshold != report.threshold) continue;
            entry["n_train"] = r.n_train;
            results.push_back(ordered_json{{"classifier", r.classifier},
                                           {"accuracy", r.result.accuracy},
                                           {"accuracy_inlier", r.result.accuracy_inlier},
                                           {"accuracy_outlier", r.result.accuracy_outlier},
                                           {"n_inlier", r.result.n_inlier},
                                           {"n_outlier", r.result.n_outlier},
                                           {"weighted_accuracy", r.result.weighted}});
        }
        entry["results"] = std::move(results);
        threshold_rows.push_back(std::move(entry));
    }
    doc["thresholds"] = std::move(threshold_rows);
    write_text_file_atomic((dir / "eval_results.json").string(), doc.dump(2) + "\n");

    std::cout << wide_csv;
    std::cout << "evaluation written to " << (dir / "eval_results.csv").string() << "\n";
    return 0;
}

// --- refilter ---------------------------------------------------------------

int cmd_refilter(const std::string& run, bool single_given, double single, bool list_given,
                 std::vector<double> list) {
    const std::vector<double> thresholds =
        resolve_thresholds(single_given, single, list_given, std::move(list), false);
    const fs::path dir(run);
    ordered_json manifest = parse_json_file((dir / "manifest.json").string());
    const ordered_json config = parse_json_file((dir / "config.json").string());

    std::uint64_t seed = 0;
    std::map<std::string, std::string> train_score_files;
    std::vector<std::string> report_files;
    try {
        seed = config.at("seed").get<std::uint64_t>();
        for (const auto& [label, file] : manifest.at("files").at("train_scores").items())
            train_score_files[label] = file.get<std::string>();
        report_files =
            manifest.at("files").at("reports").get<std::vector<std::string>>();
    } catch (const ordered_json::exception& e) {
        throw DataError(run + ": run artifacts are missing fields: " + e.what());
    }

    std::vector<LabeledScores> labeled;
    for (const auto& [label, file] : train_score_files) {
        LabeledScores entry;
        entry.label = std::stoi(label);
        entry.scores = read_score_set((dir / file).string());
        labeled.push_back(std::move(entry));
    }

    std::set<std::string> names(report_files.begin(), report_files.end());
    for (double tau : thresholds) {
        const FilterReport report = filter_by_threshold(labeled, tau, seed);
        write_report(report, run);
        names.insert(report_filename(tau));
        std::cout << coverage_text(report);
    }
    manifest["files"]["reports"] = std::vector<std::string>(names.begin(), names.end());
    write_text_file_atomic((dir / "manifest.json").string(), manifest.dump(2) + "\n");
    return 0;
}

// --- synth ------------------------------------------------------------------

struct SynthOptions {
    std::size_t classes = 2;
    std::size_t per_class = 600;
    std::size_t dim = 32;
    double cluster_std = 1.0;
    double rho = 0.05;
    std::string mode = "label_flip";
    std::uint64_t seed = 0;
    std::string out_data;
    std::string out_vectors;
    std::string out_truth;
};

int cmd_synth(const SynthOptions& o) {
    SynthSpec spec;
    spec.n_classes = o.classes;
    spec.n_per_class = o.per_class;
    spec.dim = o.dim;
    spec.cluster_std = o.cluster_std;
    spec.outlier_fraction = o.rho;
    spec.mode = parse_synth_mode(o.mode);
    spec.seed = o.seed;
    const SynthDataset data = generate(spec);
    write_synth(data, o.out_data, o.out_vectors, o.out_truth);

    std::size_t injected = 0;
    for (bool flag : data.is_injected) injected += flag ? 1 : 0;
    std::cout << "wrote " << data.records.size() << " records (" << injected
              << " injected) to " << o.out_data << "\n";
    if (!o.out_vectors.empty()) std::cout << "vectors: " << o.out_vectors << "\n";
    if (!o.out_truth.empty()) std::cout << "truth: " << o.out_truth << "\n";
    return 0;
}

// --- oracle -----------------------------------------------------------------

struct OracleOptions {
    std::string points_file;
    double nu = 0.0;  // 0 skips the soft solve
    double tolerance = 1e-10;
    std::size_t iterations = 100000;
    std::size_t rounds = 400;
    std::uint64_t seed = 0;
};

int cmd_oracle(const OracleOptions& o) {
    if (o.nu < 0.0 || o.nu > 1.0)
        throw ConfigError("--nu must lie in (0, 1] (omit it for the hard ball only)");
    const std::string text = read_text_file(o.points_file);
    std::vector<Vec> points;
    std::vector<std::string> ids;
    std::size_t line_no = 0;
    for (const std::string& line : split_on(text, '\n')) {
        ++line_no;
        if (line.empty()) continue;
        ordered_json rowj;
        try {
            rowj = ordered_json::parse(line);
        } catch (const std::exception& e) {
            throw DataError(o.points_file + " line " + std::to_string(line_no) +
                            ": invalid JSON: " + e.what());
        }
        try {
            Vec point;
            std::string id = std::to_string(points.size());
            if (rowj.is_array()) {
                point = rowj.get<Vec>();
            } else {
                point = rowj.at("vector").get<Vec>();
                if (rowj.contains("id"))
                    id = rowj["id"].is_string() ? rowj["id"].get<std::string>()
                                                : rowj["id"].dump();
            }
            if (!points.empty() && point.size() != points.front().size())
                throw DataError(o.points_file + " line " + std::to_string(line_no) +
                                ": point has dimension " + std::to_string(point.size()) +
                                ", previous points have " +
                                std::to_string(points.front().size()));
            points.push_back(std::move(point));
            ids.push_back(std::move(id));
        } catch (const ordered_json::exception& e) {
            throw DataError(o.points_file + " line " + std::to_string(line_no) + ": " +
                            e.what());
        }
    }
    if (points.empty()) throw DataError(o.points_file + " contains no points");

    const Ball ball = min_enclosing_ball(points, o.tolerance, o.iterations);
    std::cout << "points " << points.size() << " dim " << points.front().size() << "\n";
    std::cout << "center (" << join_fmt6(ball.center) << ")\n";
    std::cout << "radius " << fmt6(ball.radius) << "\n";

    if (o.nu > 0.0) {
        SeededRng rng(o.seed);
        const SoftSvddSolution soft = soft_svdd(points, o.nu, o.rounds, rng);
        std::cout << "nu " << fmt6(o.nu) << "\n";
        std::cout << "soft center (" << join_fmt6(soft.ball.center) << ")\n";
        std::cout << "soft radius " << fmt6(soft.ball.radius) << "\n";
        std::cout << "soft objective " << fmt6(soft.objective) << "\n";

        // Sorted by slack, then by distance so that the farthest point leads
        // even when every slack is zero.
        std::vector<std::size_t> order(points.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        Vec dist2(points.size(), 0.0);
        for (std::size_t i = 0; i < points.size(); ++i) {
            for (std::size_t j = 0; j < points[i].size(); ++j) {
                const double d = points[i][j] - soft.ball.center[j];
                dist2[i] += d * d;
            }
        }
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (soft.slacks[a] != soft.slacks[b]) return soft.slacks[a] > soft.slacks[b];
            if (dist2[a] != dist2[b]) return dist2[a] > dist2[b];
            return a < b;
        });
        for (std::size_t i : order)
            std::cout << "slack " << ids[i] << " " << fmt6(soft.slacks[i]) << "\n";
    }
    return 0;
}

}  // namespace

int run_cli(int argc, char** argv) {
    CLI::App app{"one-class outlier detection and dataset cleaning"};
    app.require_subcommand(1);
    app.fallthrough(true);
    app.set_config("--config", "",
                   "key=value config file with a [clean] section; flags override it");
    app.allow_config_extras(CLI::config_extras_mode::error);

    CleanOptions cln;
    CLI::App* clean = app.add_subcommand(
        "clean", "embed the dataset, train per-class models, score, and filter");
    clean->add_option("--data", cln.data, "dataset file (jsonl or csv)")->required();
    clean->add_option("--format", cln.format, "dataset format: auto|jsonl|csv");
    clean->add_option("--embedder", cln.embedder,
                      "embedding provider: hashing|precomputed|remote");
    clean->add_option("--dim", cln.dim, "embedding dimension");
    clean->add_option("--vectors", cln.vectors_file,
                      "precomputed vectors jsonl ({\"id\",\"vector\"} rows)");
    clean->add_option("--embed-url", cln.embed_url,
                      "remote embedding base url (SVDD_CLEAN_EMBED_URL overrides)");
    clean->add_option("--embed-batch", cln.batch_size, "remote embedding batch size");
    clean->add_option("--embed-retries", cln.retries, "remote embedding retry count");
    clean->add_option("--embed-timeout", cln.timeout_seconds,
                      "remote embedding timeout in seconds");
    clean->add_option("--hash-seed", cln.hash_seed, "feature-hashing seed");
    CLI::Option* thr = clean->add_option("--threshold", cln.threshold, "filter threshold");
    CLI::Option* thrs = clean->add_option("--thresholds", cln.thresholds,
                                          "comma-separated threshold sweep")
                            ->delimiter(',');
    thr->excludes(thrs);
    clean->add_option("--seed", cln.seed, "master rng seed");
    clean->add_option("--out", cln.out, "run directory");
    clean->add_flag("--allow-small-classes", cln.allow_small_classes,
                    "train classes below the minimum size anyway");
    clean->add_option("--min-class-size", cln.min_class_size,
                      "per-class training size floor");
    clean->add_option("--classifiers", cln.classifiers,
                      "comma-separated: knn,logistic_regression,lda,decision_tree")
        ->delimiter(',');
    clean->add_option("--epochs-ae", cln.epochs_ae, "autoencoder pretraining epochs");
    clean->add_option("--epochs-svdd", cln.epochs_svdd, "one-class training epochs");
    clean->add_option("--batch-ae", cln.batch_ae, "autoencoder batch size");
    clean->add_option("--batch-svdd", cln.batch_svdd, "one-class batch size");
    clean->add_option("--lambda", cln.lambda, "weight decay strength");
    clean->add_option("--nu", cln.nu, "radius quantile parameter in (0, 1]");
    clean->add_option("--test-fraction", cln.test_fraction, "held-out fraction in (0, 1)");
    clean->add_option("--encoder-dims", cln.encoder_dims,
                      "encoder layer widths, comma-separated")
        ->delimiter(',');
    clean->add_option("--knn-k", cln.knn_k, "neighbors for knn evaluation");
    clean->add_option("--logreg-epochs", cln.logreg_epochs, "logistic regression epochs");
    clean->add_option("--logreg-lr", cln.logreg_lr, "logistic regression learning rate");
    clean->add_option("--tree-depth", cln.tree_depth, "decision tree maximum depth");
    clean->add_option("--tree-min-leaf", cln.tree_min_leaf, "decision tree leaf floor");

    std::string eval_run;
    std::vector<std::string> eval_classifiers;
    CLI::App* eval = app.add_subcommand(
        "eval", "train classifiers on filtered splits and score the unfiltered test set");
    eval->add_option("--run", eval_run, "run directory produced by clean")->required();
    eval->add_option("--classifiers", eval_classifiers,
                     "override the classifier selection recorded in the run")
        ->delimiter(',');

    std::string refilter_run;
    double refilter_threshold = 0.6;
    std::vector<double> refilter_thresholds;
    CLI::App* refilter = app.add_subcommand(
        "refilter", "apply new thresholds to a run's persisted scores (no retraining)");
    refilter->add_option("--run", refilter_run, "run directory produced by clean")
        ->required();
    CLI::Option* rthr =
        refilter->add_option("--threshold", refilter_threshold, "filter threshold");
    CLI::Option* rthrs = refilter->add_option("--thresholds", refilter_thresholds,
                                              "comma-separated threshold sweep")
                             ->delimiter(',');
    rthr->excludes(rthrs);

    SynthOptions syn;
    CLI::App* synth =
        app.add_subcommand("synth", "generate a synthetic labeled dataset with injected noise");
    synth->add_option("--classes", syn.classes, "number of classes");
    synth->add_option("--per-class", syn.per_class, "records per class");
    synth->add_option("--dim", syn.dim, "embedding dimension");
    synth->add_option("--std", syn.cluster_std, "cluster standard deviation");
    synth->add_option("--rho", syn.rho, "injected outlier fraction in [0, 0.5)");
    synth->add_option("--mode", syn.mode, "label_flip | far_point");
    synth->add_option("--seed", syn.seed, "generator seed");
    synth->add_option("--out-data", syn.out_data, "dataset jsonl path")->required();
    synth->add_option("--out-vectors", syn.out_vectors, "precomputed vectors jsonl path");
    synth->add_option("--out-truth", syn.out_truth, "injection truth sidecar path");

    OracleOptions orc;
    CLI::App* oracle = app.add_subcommand(
        "oracle", "exact enclosing-ball reference solver for a points file");
    oracle->add_option("--points", orc.points_file,
                       "jsonl points: [x, y, ...] or {\"id\", \"vector\"} per line")
        ->required();
    oracle->add_option("--nu", orc.nu, "soft-boundary parameter; 0 solves the hard ball only");
    oracle->add_option("--tolerance", orc.tolerance, "relative duality-gap stop");
    oracle->add_option("--iterations", orc.iterations, "hard-ball iteration cap");
    oracle->add_option("--rounds", orc.rounds, "soft-boundary search rounds");
    oracle->add_option("--seed", orc.seed, "soft-boundary search seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (app.got_subcommand(clean)) {
            cln.threshold_given = thr->count() > 0;
            cln.thresholds_given = thrs->count() > 0;
            // The environment override wins over both flags and config file,
            // so deployments can redirect embedding traffic wholesale.
            if (const char* url = std::getenv("SVDD_CLEAN_EMBED_URL"); url && *url)
                cln.embed_url = url;
            return cmd_clean(cln);
        }
        if (app.got_subcommand(eval)) return cmd_eval(eval_run, eval_classifiers);
        if (app.got_subcommand(refilter))
            return cmd_refilter(refilter_run, rthr->count() > 0, refilter_threshold,
                                rthrs->count() > 0, refilter_thresholds);
        if (app.got_subcommand(synth)) return cmd_synth(syn);
        if (app.got_subcommand(oracle)) return cmd_oracle(orc);
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const TransportError& e) {
        std::cerr << "transport error: " << e.what() << "\n";
        return 3;
    } catch (const ProtocolError& e) {
        std::cerr << "protocol error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
}

}  // namespace svdd
