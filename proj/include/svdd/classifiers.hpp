#pragma once

#include <cstddef>
#include <variant>
#include <vector>

#include "svdd/dense_net.hpp"
#include "svdd/rng.hpp"

namespace svdd {

// All classifiers operate on embedding vectors and integer labels.  Predict
// is pure and deterministic; every tie-break is pinned: argmax ties resolve
// to the smallest label id, k-nearest distance ties to the lower training
// index.

struct KnnModel {
    std::size_t k = 1;
    std::vector<Vec> vectors;
    std::vector<int> labels;
};

struct LogRegModel {
    std::vector<int> class_ids;  // ascending
    Matrix weight;               // n_classes x dim
    Vec bias;                    // n_classes
};

struct LdaModel {
    std::vector<int> class_ids;        // ascending
    std::vector<Vec> linear;           // per class: Sigma^-1 mu
    Vec offset;                        // per class: -mu' Sigma^-1 mu / 2 + log prior
};

struct TreeNode {
    bool is_leaf = true;
    int label = 0;
    std::size_t feature = 0;
    double threshold = 0.0;  // left subtree: x[feature] < threshold
    std::size_t left = 0;
    std::size_t right = 0;
};

struct TreeModel {
    std::vector<TreeNode> nodes;  // nodes[0] is the root
};

using TrainedClassifier = std::variant<KnnModel, LogRegModel, LdaModel, TreeModel>;

// Euclidean k-nearest-neighbor majority vote.  Requires 1 <= k <= n.
TrainedClassifier fit_knn(const std::vector<Vec>& vectors, const std::vector<int>& labels,
                          std::size_t k);

// Multinomial softmax regression with cross-entropy loss, full-batch gradient
// descent from zero initialization (which makes the fit deterministic; the
// rng parameter is part of the uniform fit signature and is never consumed).
// Requires at least two distinct labels.  `loss_trace`, when given, receives
// the mean cross-entropy after each epoch.
TrainedClassifier fit_logistic_regression(const std::vector<Vec>& vectors,
                                          const std::vector<int>& labels, std::size_t epochs,
                                          double lr, SeededRng& rng,
                                          std::vector<double>* loss_trace = nullptr);

// Gaussian linear discriminant analysis with a pooled covariance estimate
// (divisor n - K) and a ridge on the diagonal.  ridge < 0 selects the default
// 1e-6 * trace / dim (floored at 1e-12).  A covariance that is still not
// positive definite raises NumericError.
TrainedClassifier fit_lda(const std::vector<Vec>& vectors, const std::vector<int>& labels,
                          double ridge = -1.0);

// CART with Gini impurity.  Split thresholds are midpoints between
// consecutive sorted unique feature values; gain ties resolve to the lower
// feature index, then the lower threshold; splits must strictly reduce
// impurity and respect min_leaf on both sides.
TrainedClassifier fit_decision_tree(const std::vector<Vec>& vectors,
                                    const std::vector<int>& labels, std::size_t max_depth,
                                    std::size_t min_leaf = 1);

int predict(const TrainedClassifier& model, const Vec& x);
std::vector<int> predict(const TrainedClassifier& model, const std::vector<Vec>& xs);

// Count-weighted mean of the two side accuracies.  Requires accuracies in
// [0, 1] and at least one nonzero count.
double weighted_accuracy(double acc_inlier, double acc_outlier, std::size_t n_inlier,
                         std::size_t n_outlier);

struct EvalResult {
    double accuracy = 0.0;          // over every test record
    double accuracy_inlier = 0.0;   // records with normalized score <= tau
    double accuracy_outlier = 0.0;  // the rest; 0 by convention when empty
    std::size_t n_inlier = 0;
    std::size_t n_outlier = 0;
    double weighted = 0.0;  // weighted_accuracy over the two sides
};

// Splits the test set at tau on the normalized scores (inclusive keep) and
// scores the classifier on each side and overall.  The empty-side accuracy
// convention is 0 with a zero count, which leaves `weighted` equal to the
// other side.  Empty test sets raise ContractError.
EvalResult evaluate_split(const TrainedClassifier& model, const std::vector<Vec>& vectors,
                          const std::vector<int>& labels, const Vec& normalized_scores,
                          double tau);

}  // namespace svdd
