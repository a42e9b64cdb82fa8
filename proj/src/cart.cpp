#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <unordered_set>

#include "inflacast/baselines.hpp"
#include "inflacast/common.hpp"
#include "inflacast/parallel.hpp"
#include "inflacast/random.hpp"

namespace inflacast::baselines {

namespace {

using LeafValue = std::function<double(const std::vector<std::uint32_t>& samples)>;

struct BuildOptions {
    int max_depth = 10;
    int min_leaf = 1;
    std::size_t max_features = 0;  // 0 or >= n_features: every feature
};

struct SplitChoice {
    int feature = -1;
    double threshold = 0.0;
    double score = 0.0;
};

bool improves(double candidate, double incumbent) {
    return candidate > incumbent + 1e-12 * std::max(1.0, std::abs(incumbent));
}

/// Grows one tree on `samples` (row ids, repeats allowed) minimizing the summed squared
/// error of `targets`. On 0/1 targets this ranks splits exactly like weighted Gini,
/// since n * Gini = 2 * (c1 - c1^2 / n) = 2 * SSE.
class CartBuilder {
public:
    CartBuilder(const Dataset& data, const std::vector<double>& targets, const BuildOptions& opt, LeafValue leaf,
                Rng* rng)
        : data_(data), targets_(targets), opt_(opt), leaf_(std::move(leaf)), rng_(rng),
          feature_mark_(data.n_features, 0) {}

    TreeModel build(std::vector<std::uint32_t> samples) {
        TreeModel tree;
        tree.max_depth = opt_.max_depth;
        tree.min_leaf = opt_.min_leaf;
        tree.n_features = data_.n_features;
        grow(tree, std::move(samples), 0);
        return tree;
    }

private:
    int grow(TreeModel& tree, std::vector<std::uint32_t> samples, int depth) {
        const int id = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes[static_cast<std::size_t>(id)].samples = static_cast<std::uint32_t>(samples.size());

        SplitChoice choice;
        if (depth < opt_.max_depth && samples.size() >= 2 * static_cast<std::size_t>(opt_.min_leaf)) {
            choice = best_split(samples);
        }
        if (choice.feature < 0) {
            tree.nodes[static_cast<std::size_t>(id)].value = leaf_(samples);
            return id;
        }

        std::vector<std::uint32_t> left;
        std::vector<std::uint32_t> right;
        for (auto s : samples) {
            const double v = data_.rows[s].at(static_cast<std::uint32_t>(choice.feature));
            (v <= choice.threshold ? left : right).push_back(s);
        }
        samples.clear();
        samples.shrink_to_fit();
        const int l = grow(tree, std::move(left), depth + 1);
        const int r = grow(tree, std::move(right), depth + 1);
        auto& node = tree.nodes[static_cast<std::size_t>(id)];
        node.feature = choice.feature;
        node.threshold = choice.threshold;
        node.left = l;
        node.right = r;
        return id;
    }

    std::vector<std::uint32_t> candidate_features() {
        const std::size_t n = data_.n_features;
        std::vector<std::uint32_t> out;
        if (opt_.max_features == 0 || opt_.max_features >= n || rng_ == nullptr) {
            return out;  // empty means "all"
        }
        // Floyd's sampling of max_features distinct indices.
        std::unordered_set<std::uint32_t> chosen;
        for (std::size_t j = n - opt_.max_features; j < n; ++j) {
            const auto t = static_cast<std::uint32_t>(rng_->below(j + 1));
            if (!chosen.insert(t).second) {
                chosen.insert(static_cast<std::uint32_t>(j));
            }
        }
        out.assign(chosen.begin(), chosen.end());
        std::sort(out.begin(), out.end());
        return out;
    }

    SplitChoice best_split(const std::vector<std::uint32_t>& samples) {
        const auto n = static_cast<double>(samples.size());
        double total = 0.0;
        for (auto s : samples) {
            total += targets_[s];
        }
        const double parent = total * total / n;

        const auto features = candidate_features();
        const bool all_features = features.empty();
        for (auto f : features) {
            feature_mark_[f] = 1;
        }

        struct Item {
            std::uint32_t feature;
            double value;
            double target;
        };
        std::vector<Item> items;
        for (auto s : samples) {
            for (const auto& e : data_.rows[s].entries) {
                if (all_features || feature_mark_[e.index]) {
                    items.push_back({e.index, e.weight, targets_[s]});
                }
            }
        }
        for (auto f : features) {
            feature_mark_[f] = 0;
        }
        std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
            if (a.feature != b.feature) {
                return a.feature < b.feature;
            }
            return a.value < b.value;
        });

        SplitChoice best;
        best.score = parent;
        const auto min_leaf = static_cast<double>(opt_.min_leaf);

        std::size_t i = 0;
        while (i < items.size()) {
            const std::uint32_t f = items[i].feature;
            std::size_t end = i;
            double nz_sum = 0.0;
            while (end < items.size() && items[end].feature == f) {
                nz_sum += items[end].target;
                ++end;
            }
            const double zero_count = n - static_cast<double>(end - i);
            const double zero_sum = total - nz_sum;

            // Walk distinct values in ascending order with the implicit zeros slotted in.
            double left_n = 0.0;
            double left_sum = 0.0;
            bool zeros_done = zero_count <= 0.0;
            bool have_prev = false;
            double prev_value = 0.0;
            std::size_t k = i;
            auto consider = [&](double next_value) {
                if (!have_prev) {
                    return;
                }
                const double right_n = n - left_n;
                if (left_n < min_leaf || right_n < min_leaf) {
                    return;
                }
                const double right_sum = total - left_sum;
                const double score = left_sum * left_sum / left_n + right_sum * right_sum / right_n;
                if (improves(score, best.score)) {
                    best.score = score;
                    best.feature = static_cast<int>(f);
                    best.threshold = 0.5 * (prev_value + next_value);
                    // midpoint of adjacent doubles can round onto the upper value
                    if (!(best.threshold < next_value)) {
                        best.threshold = prev_value;
                    }
                }
            };
            while (k < end || !zeros_done) {
                double value;
                double group_n = 0.0;
                double group_sum = 0.0;
                if (!zeros_done && (k >= end || items[k].value >= 0.0)) {
                    value = 0.0;
                    group_n = zero_count;
                    group_sum = zero_sum;
                    zeros_done = true;
                    // explicit zeros, if any, join the implicit group
                    while (k < end && items[k].value == 0.0) {
                        group_n += 1.0;
                        group_sum += items[k].target;
                        ++k;
                    }
                } else {
                    value = items[k].value;
                    while (k < end && items[k].value == value) {
                        group_n += 1.0;
                        group_sum += items[k].target;
                        ++k;
                    }
                }
                consider(value);
                left_n += group_n;
                left_sum += group_sum;
                prev_value = value;
                have_prev = true;
            }
            i = end;
        }
        if (best.feature >= 0 && !improves(best.score, parent)) {
            best.feature = -1;
        }
        return best;
    }

    const Dataset& data_;
    const std::vector<double>& targets_;
    BuildOptions opt_;
    LeafValue leaf_;
    Rng* rng_;
    std::vector<char> feature_mark_;
};

std::vector<double> label_targets(const Dataset& data) {
    return std::vector<double>(data.labels.begin(), data.labels.end());
}

LeafValue class_probability(const Dataset& data) {
    return [&data](const std::vector<std::uint32_t>& samples) {
        if (samples.empty()) {
            return 0.5;
        }
        double pos = 0.0;
        for (auto s : samples) {
            pos += data.labels[s];
        }
        return pos / static_cast<double>(samples.size());
    };
}

std::vector<std::uint32_t> all_rows(std::size_t n) {
    std::vector<std::uint32_t> rows(n);
    std::iota(rows.begin(), rows.end(), 0u);
    return rows;
}

double sigmoid(double z) {
    if (z >= 0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double mean_log_loss(const std::vector<double>& scores, const std::vector<int>& labels) {
    double sum = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const double z = scores[i];
        const double softplus = z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
        sum += softplus - labels[i] * z;
    }
    return sum / static_cast<double>(scores.size());
}

}  // namespace

double weighted_gini(std::uint64_t left_pos, std::uint64_t left_n, std::uint64_t right_pos, std::uint64_t right_n) {
    auto gini = [](double pos, double n) {
        if (n == 0.0) {
            return 0.0;
        }
        const double p = pos / n;
        return 1.0 - p * p - (1.0 - p) * (1.0 - p);
    };
    const double ln = static_cast<double>(left_n);
    const double rn = static_cast<double>(right_n);
    return (ln * gini(static_cast<double>(left_pos), ln) + rn * gini(static_cast<double>(right_pos), rn)) / (ln + rn);
}

double TreeModel::evaluate(const SparseVector& x) const {
    int id = 0;
    for (;;) {
        const auto& node = nodes[static_cast<std::size_t>(id)];
        if (node.feature < 0) {
            return node.value;
        }
        id = x.at(static_cast<std::uint32_t>(node.feature)) <= node.threshold ? node.left : node.right;
    }
}

int TreeModel::depth() const {
    if (nodes.empty()) {
        return 0;
    }
    std::function<int(int)> walk = [&](int id) -> int {
        const auto& node = nodes[static_cast<std::size_t>(id)];
        if (node.feature < 0) {
            return 0;
        }
        return 1 + std::max(walk(node.left), walk(node.right));
    };
    return walk(0);
}

TreeModel train_tree(const Dataset& data, const TreeParams& params) {
    data.validate();
    if (params.max_depth < 0 || params.min_leaf < 1) {
        throw UsageError("tree needs max_depth >= 0 and min_leaf >= 1");
    }
    const auto targets = label_targets(data);
    CartBuilder builder(data, targets, {params.max_depth, params.min_leaf, 0}, class_probability(data), nullptr);
    return builder.build(all_rows(data.size()));
}

std::vector<std::size_t> bootstrap_sample(std::uint64_t tree_seed, std::size_t n) {
    Rng rng = Rng::derive(tree_seed, 0xB007);
    std::vector<std::size_t> rows(n);
    for (auto& r : rows) {
        r = rng.below(n);
    }
    return rows;
}

ForestModel train_forest(const Dataset& data, const ForestParams& params) {
    data.validate();
    if (params.n_trees < 1) {
        throw UsageError("forest needs at least one tree");
    }
    if (params.max_depth < 0 || params.min_leaf < 1) {
        throw UsageError("forest needs max_depth >= 0 and min_leaf >= 1");
    }
    ForestModel forest;
    forest.bootstrap = params.bootstrap;
    forest.n_features = data.n_features;
    forest.max_features = params.max_features != 0
                              ? params.max_features
                              : std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(
                                                             std::sqrt(static_cast<double>(data.n_features)))));
    const auto targets = label_targets(data);
    const auto n_trees = static_cast<std::size_t>(params.n_trees);
    forest.tree_seeds.resize(n_trees);
    for (std::size_t t = 0; t < n_trees; ++t) {
        forest.tree_seeds[t] = Rng::derive(params.seed, 0xF0, t).next();
    }
    forest.trees.resize(n_trees);
    parallel_for(n_trees, [&](std::size_t t) {
        std::vector<std::uint32_t> rows;
        if (forest.bootstrap) {
            for (auto r : bootstrap_sample(forest.tree_seeds[t], data.size())) {
                rows.push_back(static_cast<std::uint32_t>(r));
            }
        } else {
            rows = all_rows(data.size());
        }
        Rng rng = Rng::derive(forest.tree_seeds[t], 0xFEA7);
        CartBuilder builder(data, targets, {params.max_depth, params.min_leaf, forest.max_features},
                            class_probability(data), &rng);
        forest.trees[t] = builder.build(std::move(rows));
    });
    return forest;
}

double oob_accuracy(const ForestModel& model, const Dataset& data) {
    if (!model.bootstrap) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    std::vector<double> prob_sum(data.size(), 0.0);
    std::vector<int> votes(data.size(), 0);
    for (std::size_t t = 0; t < model.trees.size(); ++t) {
        std::vector<char> in_bag(data.size(), 0);
        for (auto r : bootstrap_sample(model.tree_seeds[t], data.size())) {
            in_bag[r] = 1;
        }
        for (std::size_t i = 0; i < data.size(); ++i) {
            if (!in_bag[i]) {
                prob_sum[i] += model.trees[t].evaluate(data.rows[i]);
                ++votes[i];
            }
        }
    }
    std::size_t counted = 0;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (votes[i] == 0) {
            continue;
        }
        ++counted;
        const int pred = prob_sum[i] / votes[i] >= 0.5 ? 1 : 0;
        correct += pred == data.labels[i] ? 1 : 0;
    }
    return counted == 0 ? std::numeric_limits<double>::quiet_NaN()
                        : static_cast<double>(correct) / static_cast<double>(counted);
}

double GbmModel::raw_score(const SparseVector& x) const {
    double z = init_log_odds;
    for (const auto& t : trees) {
        z += learning_rate * t.evaluate(x);
    }
    return z;
}

GbmModel train_gbm(const Dataset& data, const GbmParams& params) {
    data.validate();
    if (!data.has_both_classes()) {
        throw Error("gradient boosting needs both classes in the training data");
    }
    if (params.n_estimators < 0 || !(params.learning_rate >= 0.0) || params.max_depth < 0 || params.min_leaf < 1) {
        throw UsageError("invalid gradient boosting parameters");
    }
    GbmModel m;
    m.learning_rate = params.learning_rate;
    m.n_estimators = params.n_estimators;
    m.n_features = data.n_features;
    const double pos = std::accumulate(data.labels.begin(), data.labels.end(), 0.0);
    const double rate = pos / static_cast<double>(data.size());
    m.init_log_odds = std::log(rate / (1.0 - rate));

    std::vector<double> scores(data.size(), m.init_log_odds);
    std::vector<double> residuals(data.size());
    std::vector<double> probs(data.size());
    m.staged_train_loss.push_back(mean_log_loss(scores, data.labels));

    // Newton step for a leaf: sum(y - p) / sum(p (1 - p)).
    LeafValue newton = [&](const std::vector<std::uint32_t>& samples) {
        double num = 0.0;
        double den = 0.0;
        for (auto s : samples) {
            num += residuals[s];
            den += probs[s] * (1.0 - probs[s]);
        }
        return den < 1e-12 ? 0.0 : num / den;
    };

    for (int stage = 0; stage < params.n_estimators; ++stage) {
        for (std::size_t i = 0; i < data.size(); ++i) {
            probs[i] = sigmoid(scores[i]);
            residuals[i] = data.labels[i] - probs[i];
        }
        CartBuilder builder(data, residuals, {params.max_depth, params.min_leaf, 0}, newton, nullptr);
        TreeModel tree = builder.build(all_rows(data.size()));
        for (std::size_t i = 0; i < data.size(); ++i) {
            scores[i] += m.learning_rate * tree.evaluate(data.rows[i]);
        }
        m.trees.push_back(std::move(tree));
        m.staged_train_loss.push_back(mean_log_loss(scores, data.labels));
    }
    return m;
}

}  // namespace inflacast::baselines
