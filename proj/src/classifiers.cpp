#include "svdd/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "svdd/errors.hpp"

namespace svdd {

namespace {

void check_training_set(const std::vector<Vec>& vectors, const std::vector<int>& labels) {
    if (vectors.empty()) throw ContractError("training set is empty");
    if (vectors.size() != labels.size())
        throw ContractError("got " + std::to_string(vectors.size()) + " vectors but " +
                            std::to_string(labels.size()) + " labels");
    const std::size_t d = vectors.front().size();
    for (std::size_t i = 1; i < vectors.size(); ++i) {
        if (vectors[i].size() != d)
            throw ShapeError("training vector " + std::to_string(i) + " has dimension " +
                             std::to_string(vectors[i].size()) + ", vector 0 has " +
                             std::to_string(d));
    }
}

std::vector<int> sorted_class_ids(const std::vector<int>& labels) {
    std::set<int> ids(labels.begin(), labels.end());
    return std::vector<int>(ids.begin(), ids.end());
}

double sq_dist(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) s += (a[j] - b[j]) * (a[j] - b[j]);
    return s;
}

int majority_label(const std::map<int, std::size_t>& votes) {
    int best = 0;
    std::size_t best_count = 0;
    bool first = true;
    for (const auto& [label, count] : votes) {  // ascending labels: ties keep the smallest
        if (first || count > best_count) {
            best = label;
            best_count = count;
            first = false;
        }
    }
    return best;
}

int predict_knn(const KnnModel& model, const Vec& x) {
    std::vector<std::size_t> order(model.vectors.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> d2(model.vectors.size());
    for (std::size_t i = 0; i < model.vectors.size(); ++i) d2[i] = sq_dist(model.vectors[i], x);
    std::partial_sort(order.begin(), order.begin() + model.k, order.end(),
                      [&](std::size_t a, std::size_t b) {
                          if (d2[a] != d2[b]) return d2[a] < d2[b];
                          return a < b;  // distance ties: lower training index
                      });
    std::map<int, std::size_t> votes;
    for (std::size_t i = 0; i < model.k; ++i) ++votes[model.labels[order[i]]];
    return majority_label(votes);
}

int predict_linear(const std::vector<int>& class_ids, const std::vector<Vec>& linear,
                   const Vec& offset, const Vec& x) {
    std::size_t best = 0;
    double best_score = 0.0;
    for (std::size_t c = 0; c < class_ids.size(); ++c) {
        double s = offset[c];
        for (std::size_t j = 0; j < x.size(); ++j) s += linear[c][j] * x[j];
        if (c == 0 || s > best_score) {  // strict >: argmax ties keep the smallest label
            best = c;
            best_score = s;
        }
    }
    return class_ids[best];
}

int predict_logreg(const LogRegModel& model, const Vec& x) {
    std::size_t best = 0;
    double best_score = 0.0;
    for (std::size_t c = 0; c < model.class_ids.size(); ++c) {
        double s = model.bias[c];
        for (std::size_t j = 0; j < x.size(); ++j) s += model.weight(c, j) * x[j];
        if (c == 0 || s > best_score) {
            best = c;
            best_score = s;
        }
    }
    return model.class_ids[best];
}

int predict_tree(const TreeModel& model, const Vec& x) {
    std::size_t at = 0;
    while (!model.nodes[at].is_leaf) {
        const TreeNode& node = model.nodes[at];
        at = x[node.feature] < node.threshold ? node.left : node.right;
    }
    return model.nodes[at].label;
}

}  // namespace

TrainedClassifier fit_knn(const std::vector<Vec>& vectors, const std::vector<int>& labels,
                          std::size_t k) {
    check_training_set(vectors, labels);
    if (k < 1 || k > vectors.size())
        throw ContractError("k must lie in [1, " + std::to_string(vectors.size()) + "], got " +
                            std::to_string(k));
    return KnnModel{k, vectors, labels};
}

TrainedClassifier fit_logistic_regression(const std::vector<Vec>& vectors,
                                          const std::vector<int>& labels, std::size_t epochs,
                                          double lr, SeededRng&, std::vector<double>* loss_trace) {
    check_training_set(vectors, labels);
    LogRegModel model;
    model.class_ids = sorted_class_ids(labels);
    const std::size_t n_classes = model.class_ids.size();
    if (n_classes < 2) throw ContractError("logistic regression needs at least two classes");
    const std::size_t n = vectors.size();
    const std::size_t dim = vectors.front().size();

    std::vector<std::size_t> class_index(n);
    for (std::size_t i = 0; i < n; ++i) {
        class_index[i] = static_cast<std::size_t>(
            std::lower_bound(model.class_ids.begin(), model.class_ids.end(), labels[i]) -
            model.class_ids.begin());
    }

    model.weight = Matrix(n_classes, dim, 0.0);
    model.bias = Vec(n_classes, 0.0);
    if (loss_trace) loss_trace->clear();

    Matrix grad_w(n_classes, dim, 0.0);
    Vec grad_b(n_classes, 0.0);
    Vec logits(n_classes);
    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        std::fill(grad_w.data.begin(), grad_w.data.end(), 0.0);
        std::fill(grad_b.begin(), grad_b.end(), 0.0);
        double loss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const Vec& x = vectors[i];
            for (std::size_t c = 0; c < n_classes; ++c) {
                double s = model.bias[c];
                for (std::size_t j = 0; j < dim; ++j) s += model.weight(c, j) * x[j];
                logits[c] = s;
            }
            const double top = *std::max_element(logits.begin(), logits.end());
            double denom = 0.0;
            for (double& s : logits) {
                s = std::exp(s - top);
                denom += s;
            }
            loss -= std::log(logits[class_index[i]] / denom);
            for (std::size_t c = 0; c < n_classes; ++c) {
                const double p = logits[c] / denom;
                const double delta = (p - (c == class_index[i] ? 1.0 : 0.0)) /
                                     static_cast<double>(n);
                grad_b[c] += delta;
                for (std::size_t j = 0; j < dim; ++j) grad_w(c, j) += delta * x[j];
            }
        }
        for (std::size_t idx = 0; idx < grad_w.data.size(); ++idx)
            model.weight.data[idx] -= lr * grad_w.data[idx];
        for (std::size_t c = 0; c < n_classes; ++c) model.bias[c] -= lr * grad_b[c];
        if (loss_trace) loss_trace->push_back(loss / static_cast<double>(n));
        if (!std::isfinite(loss))
            throw TrainingError("logistic regression diverged at epoch " + std::to_string(epoch));
    }
    return model;
}

TrainedClassifier fit_lda(const std::vector<Vec>& vectors, const std::vector<int>& labels,
                          double ridge) {
    check_training_set(vectors, labels);
    std::vector<int> class_ids = sorted_class_ids(labels);
    const std::size_t n_classes = class_ids.size();
    if (n_classes < 2) throw ContractError("lda needs at least two classes");
    const std::size_t n = vectors.size();
    const std::size_t dim = vectors.front().size();

    std::vector<std::size_t> class_index(n);
    std::vector<std::size_t> counts(n_classes, 0);
    for (std::size_t i = 0; i < n; ++i) {
        class_index[i] = static_cast<std::size_t>(
            std::lower_bound(class_ids.begin(), class_ids.end(), labels[i]) - class_ids.begin());
        ++counts[class_index[i]];
    }

    std::vector<Vec> means(n_classes, Vec(dim, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < dim; ++j) means[class_index[i]][j] += vectors[i][j];
    }
    for (std::size_t c = 0; c < n_classes; ++c) {
        for (double& m : means[c]) m /= static_cast<double>(counts[c]);
    }

    // Pooled within-class covariance with the unbiased n - K divisor.
    Matrix cov(dim, dim, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const Vec& mu = means[class_index[i]];
        for (std::size_t a = 0; a < dim; ++a) {
            const double da = vectors[i][a] - mu[a];
            for (std::size_t b = a; b < dim; ++b) {
                cov(a, b) += da * (vectors[i][b] - mu[b]);
            }
        }
    }
    const double denom = n > n_classes ? static_cast<double>(n - n_classes) : 1.0;
    double trace = 0.0;
    for (std::size_t a = 0; a < dim; ++a) {
        for (std::size_t b = a; b < dim; ++b) {
            cov(a, b) /= denom;
            if (a != b) cov(b, a) = cov(a, b);
        }
        trace += cov(a, a);
    }
    if (ridge < 0.0) ridge = std::max(1e-12, 1e-6 * trace / static_cast<double>(dim));
    for (std::size_t a = 0; a < dim; ++a) cov(a, a) += ridge;

    // In-place Cholesky cov = L L'.
    Matrix chol = cov;
    for (std::size_t a = 0; a < dim; ++a) {
        for (std::size_t b = 0; b <= a; ++b) {
            double s = chol(a, b);
            for (std::size_t t = 0; t < b; ++t) s -= chol(a, t) * chol(b, t);
            if (a == b) {
                if (s <= 0.0)
                    throw NumericError("pooled covariance is singular (pivot " +
                                       std::to_string(a) + " after ridge " +
                                       std::to_string(ridge) + ")");
                chol(a, a) = std::sqrt(s);
            } else {
                chol(a, b) = s / chol(b, b);
            }
        }
        for (std::size_t b = a + 1; b < dim; ++b) chol(a, b) = 0.0;
    }

    auto solve = [&](const Vec& rhs) {
        Vec y(dim);
        for (std::size_t a = 0; a < dim; ++a) {
            double s = rhs[a];
            for (std::size_t t = 0; t < a; ++t) s -= chol(a, t) * y[t];
            y[a] = s / chol(a, a);
        }
        Vec x(dim);
        for (std::size_t a = dim; a-- > 0;) {
            double s = y[a];
            for (std::size_t t = a + 1; t < dim; ++t) s -= chol(t, a) * x[t];
            x[a] = s / chol(a, a);
        }
        return x;
    };

    LdaModel model;
    model.class_ids = std::move(class_ids);
    model.offset.resize(n_classes);
    for (std::size_t c = 0; c < n_classes; ++c) {
        Vec a = solve(means[c]);
        double quad = 0.0;
        for (std::size_t j = 0; j < dim; ++j) quad += means[c][j] * a[j];
        model.offset[c] = -0.5 * quad +
                          std::log(static_cast<double>(counts[c]) / static_cast<double>(n));
        model.linear.push_back(std::move(a));
    }
    return model;
}

namespace {

double gini(const std::map<int, std::size_t>& counts, std::size_t total) {
    double sum_sq = 0.0;
    for (const auto& [label, count] : counts) {
        const double p = static_cast<double>(count) / static_cast<double>(total);
        sum_sq += p * p;
    }
    return 1.0 - sum_sq;
}

struct TreeBuilder {
    const std::vector<Vec>& vectors;
    const std::vector<int>& labels;
    std::size_t max_depth;
    std::size_t min_leaf;
    std::vector<TreeNode> nodes;

    std::size_t build(std::vector<std::size_t> indices, std::size_t depth) {
        std::map<int, std::size_t> counts;
        for (std::size_t i : indices) ++counts[labels[i]];
        const std::size_t node_id = nodes.size();
        nodes.emplace_back();
        nodes[node_id].label = majority_label(counts);
        if (counts.size() == 1 || depth >= max_depth || indices.size() < 2 * min_leaf) {
            return node_id;
        }

        const double parent_gini = gini(counts, indices.size());
        const std::size_t dim = vectors.front().size();
        double best_gain = 0.0;
        std::size_t best_feature = 0;
        double best_threshold = 0.0;
        bool found = false;

        std::vector<std::pair<double, int>> column(indices.size());
        for (std::size_t feature = 0; feature < dim; ++feature) {
            for (std::size_t i = 0; i < indices.size(); ++i)
                column[i] = {vectors[indices[i]][feature], labels[indices[i]]};
            std::sort(column.begin(), column.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });

            std::map<int, std::size_t> left_counts;
            std::map<int, std::size_t> right_counts = counts;
            for (std::size_t i = 0; i + 1 < column.size(); ++i) {
                ++left_counts[column[i].second];
                if (--right_counts[column[i].second] == 0)
                    right_counts.erase(column[i].second);
                if (column[i].first == column[i + 1].first) continue;  // not a value boundary
                const std::size_t n_left = i + 1;
                const std::size_t n_right = column.size() - n_left;
                if (n_left < min_leaf || n_right < min_leaf) continue;
                const double gain =
                    parent_gini - (static_cast<double>(n_left) * gini(left_counts, n_left) +
                                   static_cast<double>(n_right) * gini(right_counts, n_right)) /
                                      static_cast<double>(column.size());
                // Strict improvement required; ties keep the first candidate
                // (lower feature index, then lower threshold).
                if (gain > best_gain + 1e-15) {
                    best_gain = gain;
                    best_feature = feature;
                    best_threshold = 0.5 * (column[i].first + column[i + 1].first);
                    found = true;
                }
            }
        }
        if (!found || best_gain <= 0.0) return node_id;

        std::vector<std::size_t> left_idx;
        std::vector<std::size_t> right_idx;
        for (std::size_t i : indices) {
            (vectors[i][best_feature] < best_threshold ? left_idx : right_idx).push_back(i);
        }
        nodes[node_id].is_leaf = false;
        nodes[node_id].feature = best_feature;
        nodes[node_id].threshold = best_threshold;
        const std::size_t left = build(std::move(left_idx), depth + 1);
        const std::size_t right = build(std::move(right_idx), depth + 1);
        nodes[node_id].left = left;
        nodes[node_id].right = right;
        return node_id;
    }
};

}  // namespace

TrainedClassifier fit_decision_tree(const std::vector<Vec>& vectors,
                                    const std::vector<int>& labels, std::size_t max_depth,
                                    std::size_t min_leaf) {
    check_training_set(vectors, labels);
    if (max_depth < 1) throw ContractError("max_depth must be at least 1");
    if (min_leaf < 1) throw ContractError("min_leaf must be at least 1");
    TreeBuilder builder{vectors, labels, max_depth, min_leaf, {}};
    std::vector<std::size_t> all(vectors.size());
    std::iota(all.begin(), all.end(), 0);
    builder.build(std::move(all), 0);
    return TreeModel{std::move(builder.nodes)};
}

int predict(const TrainedClassifier& model, const Vec& x) {
    return std::visit(
        [&](const auto& m) -> int {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, KnnModel>) return predict_knn(m, x);
            if constexpr (std::is_same_v<T, LogRegModel>) return predict_logreg(m, x);
            if constexpr (std::is_same_v<T, LdaModel>)
                return predict_linear(m.class_ids, m.linear, m.offset, x);
            if constexpr (std::is_same_v<T, TreeModel>) return predict_tree(m, x);
        },
        model);
}

std::vector<int> predict(const TrainedClassifier& model, const std::vector<Vec>& xs) {
    std::vector<int> out;
    out.reserve(xs.size());
    for (const Vec& x : xs) out.push_back(predict(model, x));
    return out;
}

double weighted_accuracy(double acc_inlier, double acc_outlier, std::size_t n_inlier,
                         std::size_t n_outlier) {
    if (n_inlier + n_outlier == 0) throw ContractError("weighted_accuracy needs a nonzero count");
    if (acc_inlier < 0.0 || acc_inlier > 1.0 || acc_outlier < 0.0 || acc_outlier > 1.0)
        throw ContractError("accuracies must lie in [0, 1]");
    return (static_cast<double>(n_inlier) * acc_inlier +
            static_cast<double>(n_outlier) * acc_outlier) /
           static_cast<double>(n_inlier + n_outlier);
}

EvalResult evaluate_split(const TrainedClassifier& model, const std::vector<Vec>& vectors,
                          const std::vector<int>& labels, const Vec& normalized_scores,
                          double tau) {
    if (vectors.empty()) throw ContractError("test set is empty");
    if (vectors.size() != labels.size() || vectors.size() != normalized_scores.size())
        throw ContractError("test vectors, labels, and scores must align");

    EvalResult result;
    std::size_t correct_in = 0;
    std::size_t correct_out = 0;
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        const bool correct = predict(model, vectors[i]) == labels[i];
        if (normalized_scores[i] <= tau) {
            ++result.n_inlier;
            correct_in += correct ? 1 : 0;
        } else {
            ++result.n_outlier;
            correct_out += correct ? 1 : 0;
        }
    }
    result.accuracy = static_cast<double>(correct_in + correct_out) /
                      static_cast<double>(vectors.size());
    result.accuracy_inlier =
        result.n_inlier == 0
            ? 0.0
            : static_cast<double>(correct_in) / static_cast<double>(result.n_inlier);
    result.accuracy_outlier =
        result.n_outlier == 0
            ? 0.0
            : static_cast<double>(correct_out) / static_cast<double>(result.n_outlier);
    result.weighted = weighted_accuracy(result.accuracy_inlier, result.accuracy_outlier,
                                        result.n_inlier, result.n_outlier);
    return result;
}

}  // namespace svdd
