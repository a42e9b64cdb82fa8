#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "inflacast/vectorizer.hpp"

namespace inflacast::baselines {

using vectorizer::SparseVector;

struct Dataset {
    std::vector<SparseVector> rows;
    std::vector<int> labels;  // 0 or 1
    std::size_t n_features = 0;

    std::size_t size() const noexcept { return rows.size(); }
    Dataset subset(const std::vector<std::size_t>& indices) const;
    /// Throws unless non-empty, labels in {0,1}, and every index < n_features.
    void validate() const;
    bool has_both_classes() const;
};

// ---------------------------------------------------------------------------
// Logistic regression
// ---------------------------------------------------------------------------

struct LogRegParams {
    double C = 1.0;
    int max_iter = 1000;
    double tol = 1e-4;
};

struct LogRegModel {
    std::vector<double> weights;
    double bias = 0.0;
    double C = 1.0;
    int max_iter = 1000;
    // training diagnostics
    int iterations = 0;
    double final_loss = 0.0;
    double final_grad_inf = 0.0;
};

/// Summed log-loss plus ||w||^2 / (2C); the bias is not penalized.
double logreg_objective(const Dataset& data, const std::vector<double>& weights, double bias, double C);

/// Full-batch gradient descent with Armijo backtracking (Barzilai-Borwein trial steps).
/// Stops once the gradient infinity-norm is <= tol or after max_iter iterations.
LogRegModel train_logreg(const Dataset& data, const LogRegParams& params = {});

// ---------------------------------------------------------------------------
// CART trees
// ---------------------------------------------------------------------------

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;   // x[feature] <= threshold
    int right = -1;  // x[feature] >  threshold
    double value = 0.0;  // leaf: P(class 1) for classifiers, additive score for boosting stages
    std::uint32_t samples = 0;
};

struct TreeModel {
    std::vector<TreeNode> nodes;  // nodes[0] is the root
    int max_depth = 10;
    int min_leaf = 1;
    std::size_t n_features = 0;

    /// Leaf value reached by x.
    double evaluate(const SparseVector& x) const;
    /// Number of split levels on the longest root-to-leaf path.
    int depth() const;
};

struct TreeParams {
    int max_depth = 10;
    int min_leaf = 1;
};

/// Greedy CART on weighted Gini. Candidate thresholds are midpoints between consecutive
/// distinct values of a feature within the node, implicit sparse zeros included.
/// Ties go to the lowest feature index, then the lowest threshold.
TreeModel train_tree(const Dataset& data, const TreeParams& params = {});

/// Weighted Gini impurity of a split, for oracles and diagnostics: (n_l G_l + n_r G_r) / n.
double weighted_gini(std::uint64_t left_pos, std::uint64_t left_n, std::uint64_t right_pos, std::uint64_t right_n);

// ---------------------------------------------------------------------------
// Random forest
// ---------------------------------------------------------------------------

struct ForestParams {
    int n_trees = 100;
    int max_depth = 10;
    int min_leaf = 1;
    std::size_t max_features = 0;  // 0: round(sqrt(n_features))
    bool bootstrap = true;
    std::uint64_t seed = 0;
};

struct ForestModel {
    std::vector<TreeModel> trees;
    std::vector<std::uint64_t> tree_seeds;
    std::size_t max_features = 0;
    bool bootstrap = true;
    std::size_t n_features = 0;
};

ForestModel train_forest(const Dataset& data, const ForestParams& params = {});

/// The n draws with replacement a forest tree trains on.
std::vector<std::size_t> bootstrap_sample(std::uint64_t tree_seed, std::size_t n);

/// Out-of-bag accuracy; rows never left out of every bag are skipped. NaN if none qualify.
double oob_accuracy(const ForestModel& model, const Dataset& data);

// ---------------------------------------------------------------------------
// Gradient boosting
// ---------------------------------------------------------------------------

struct GbmParams {
    int n_estimators = 200;
    double learning_rate = 0.05;
    int max_depth = 3;
    int min_leaf = 1;
};

struct GbmModel {
    double init_log_odds = 0.0;
    std::vector<TreeModel> trees;
    double learning_rate = 0.05;
    int n_estimators = 0;
    std::size_t n_features = 0;
    /// Mean training log-loss after 0, 1, ..., n_estimators stages.
    std::vector<double> staged_train_loss;

    double raw_score(const SparseVector& x) const;
};

/// Log-loss boosting: start from the base-rate log-odds, fit a regression tree to the
/// residuals at each stage, and set leaf values with one Newton step.
GbmModel train_gbm(const Dataset& data, const GbmParams& params = {});

// ---------------------------------------------------------------------------
// Uniform prediction surface
// ---------------------------------------------------------------------------

using AnyModel = std::variant<LogRegModel, TreeModel, ForestModel, GbmModel>;

std::string model_kind(const AnyModel& model);
std::size_t model_dimension(const AnyModel& model);

/// P(class 1). Throws when x references a feature the model was not trained on.
double predict_proba(const AnyModel& model, const SparseVector& x);
/// Class-1 log-odds (probabilities are clamped away from 0 and 1 for tree ensembles).
double predict_logit(const AnyModel& model, const SparseVector& x);
inline int predict_class(const AnyModel& model, const SparseVector& x) { return predict_proba(model, x) >= 0.5 ? 1 : 0; }

std::string serialize(const AnyModel& model);
AnyModel deserialize(std::string_view content);

// ---------------------------------------------------------------------------
// Grid search
// ---------------------------------------------------------------------------

using ParamMap = std::map<std::string, double>;
using Trainer = std::function<AnyModel(const ParamMap&, const Dataset&)>;

/// Cartesian product in listed order; the last axis varies fastest.
std::vector<ParamMap> expand_grid(const std::vector<std::pair<std::string, std::vector<double>>>& axes);

/// Fold id per example, stratified by label and seeded.
std::vector<int> stratified_folds(const std::vector<int>& labels, int k_folds, std::uint64_t seed);

struct GridResult {
    ParamMap best;
    std::size_t best_index = 0;
    std::vector<std::vector<double>> fold_scores;  // [cell][fold] macro-F1
    std::vector<double> mean_scores;
};

/// Stratified k-fold macro-F1 for every cell; the best mean wins, earlier cells win ties.
GridResult grid_search(const Trainer& trainer, const std::vector<ParamMap>& grid, const Dataset& data, int k_folds = 5,
                       std::uint64_t seed = 0);

/// Trainer for "logreg", "tree", "forest" or "gbm" reading its hyperparameters from a ParamMap.
Trainer trainer_for(const std::string& kind);

}  // namespace inflacast::baselines
