#include "inflacast/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "inflacast/common.hpp"
#include "inflacast/evalkit.hpp"
#include "inflacast/parallel.hpp"
#include "inflacast/random.hpp"

namespace inflacast::baselines {

namespace {

constexpr std::string_view kMagic = "inflacast-model v1";

double sigmoid(double z) {
    if (z >= 0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double clamped_logit(double p) {
    p = std::clamp(p, 1e-12, 1.0 - 1e-12);
    return std::log(p / (1.0 - p));
}

void check_dimension(const SparseVector& x, std::size_t dim) {
    if (!x.entries.empty() && x.entries.back().index >= dim) {
        throw Error("feature index " + std::to_string(x.entries.back().index) + " is outside the model's " +
                    std::to_string(dim) + "-dimensional input");
    }
}

double forest_mean(const ForestModel& m, const SparseVector& x) {
    double sum = 0.0;
    for (const auto& t : m.trees) {
        sum += t.evaluate(x);
    }
    return m.trees.empty() ? 0.5 : sum / static_cast<double>(m.trees.size());
}

// --- text persistence ----------------------------------------------------

void put_tree(std::ostringstream& out, const TreeModel& t) {
    out << "tree " << t.max_depth << ' ' << t.min_leaf << ' ' << t.n_features << ' ' << t.nodes.size() << '\n';
    for (const auto& n : t.nodes) {
        out << n.feature << ' ' << format_double(n.threshold) << ' ' << n.left << ' ' << n.right << ' '
            << format_double(n.value) << ' ' << n.samples << '\n';
    }
}

class Reader {
public:
    explicit Reader(std::string_view text) : text_(text) {}

    std::string word() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
            ++pos_;
        }
        const std::size_t start = pos_;
        while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_]))) {
            ++pos_;
        }
        if (start == pos_) {
            throw ParseError("model file ends early");
        }
        return std::string(text_.substr(start, pos_ - start));
    }
    void expect(std::string_view w) {
        const auto got = word();
        if (got != w) {
            throw ParseError("model file: expected '" + std::string(w) + "' but found '" + got + "'");
        }
    }
    double real() { return parse_double(word()); }
    long long integer() { return parse_int(word()); }
    std::size_t count() {
        const auto v = integer();
        if (v < 0) {
            throw ParseError("model file: negative count");
        }
        return static_cast<std::size_t>(v);
    }
    bool at_end() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
            ++pos_;
        }
        return pos_ == text_.size();
    }

private:
    std::string_view text_;
    std::size_t pos_ = 0;
};

TreeModel get_tree(Reader& in) {
    in.expect("tree");
    TreeModel t;
    t.max_depth = static_cast<int>(in.integer());
    t.min_leaf = static_cast<int>(in.integer());
    t.n_features = in.count();
    const std::size_t n = in.count();
    t.nodes.resize(n);
    for (auto& node : t.nodes) {
        node.feature = static_cast<int>(in.integer());
        node.threshold = in.real();
        node.left = static_cast<int>(in.integer());
        node.right = static_cast<int>(in.integer());
        node.value = in.real();
        node.samples = static_cast<std::uint32_t>(in.count());
    }
    for (std::size_t i = 0; i < n; ++i) {
        const auto& node = t.nodes[i];
        if (node.feature >= 0) {
            const auto bad = [&](int c) { return c <= static_cast<int>(i) || c >= static_cast<int>(n); };
            if (bad(node.left) || bad(node.right) || static_cast<std::size_t>(node.feature) >= t.n_features) {
                throw ParseError("model file: malformed tree node " + std::to_string(i));
            }
        }
    }
    if (n == 0) {
        throw ParseError("model file: empty tree");
    }
    return t;
}

}  // namespace

// --- Dataset ---------------------------------------------------------------

Dataset Dataset::subset(const std::vector<std::size_t>& indices) const {
    Dataset d;
    d.n_features = n_features;
    d.rows.reserve(indices.size());
    d.labels.reserve(indices.size());
    for (auto i : indices) {
        d.rows.push_back(rows.at(i));
        d.labels.push_back(labels.at(i));
    }
    return d;
}

void Dataset::validate() const {
    if (rows.empty()) {
        throw Error("training data is empty");
    }
    if (rows.size() != labels.size()) {
        throw Error("dataset has " + std::to_string(rows.size()) + " rows but " + std::to_string(labels.size()) +
                    " labels");
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (labels[i] != 0 && labels[i] != 1) {
            throw Error("label of row " + std::to_string(i) + " is not 0 or 1");
        }
        check_dimension(rows[i], n_features);
    }
}

bool Dataset::has_both_classes() const {
    bool seen[2] = {false, false};
    for (int y : labels) {
        seen[y == 1] = true;
    }
    return seen[0] && seen[1];
}

// --- prediction surface ------------------------------------------------------

std::string model_kind(const AnyModel& model) {
    static constexpr const char* names[] = {"logreg", "tree", "forest", "gbm"};
    return names[model.index()];
}

std::size_t model_dimension(const AnyModel& model) {
    return std::visit(
        [](const auto& m) -> std::size_t {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, LogRegModel>) {
                return m.weights.size();
            } else {
                return m.n_features;
            }
        },
        model);
}

double predict_proba(const AnyModel& model, const SparseVector& x) {
    check_dimension(x, model_dimension(model));
    return std::visit(
        [&](const auto& m) -> double {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, LogRegModel>) {
                return sigmoid(x.dot(m.weights) + m.bias);
            } else if constexpr (std::is_same_v<T, TreeModel>) {
                return m.evaluate(x);
            } else if constexpr (std::is_same_v<T, ForestModel>) {
                return forest_mean(m, x);
            } else {
                return sigmoid(m.raw_score(x));
            }
        },
        model);
}

double predict_logit(const AnyModel& model, const SparseVector& x) {
    check_dimension(x, model_dimension(model));
    if (const auto* lr = std::get_if<LogRegModel>(&model)) {
        return x.dot(lr->weights) + lr->bias;
    }
    if (const auto* gbm = std::get_if<GbmModel>(&model)) {
        return gbm->raw_score(x);
    }
    return clamped_logit(predict_proba(model, x));
}

std::string serialize(const AnyModel& model) {
    std::ostringstream out;
    out << kMagic << '\n' << "kind " << model_kind(model) << '\n';
    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, LogRegModel>) {
                out << "C " << format_double(m.C) << '\n'
                    << "max_iter " << m.max_iter << '\n'
                    << "iterations " << m.iterations << '\n'
                    << "bias " << format_double(m.bias) << '\n'
                    << "weights " << m.weights.size() << '\n';
                for (double w : m.weights) {
                    out << format_double(w) << '\n';
                }
            } else if constexpr (std::is_same_v<T, TreeModel>) {
                put_tree(out, m);
            } else if constexpr (std::is_same_v<T, ForestModel>) {
                out << "n_features " << m.n_features << '\n'
                    << "max_features " << m.max_features << '\n'
                    << "bootstrap " << (m.bootstrap ? 1 : 0) << '\n'
                    << "trees " << m.trees.size() << '\n';
                for (std::size_t t = 0; t < m.trees.size(); ++t) {
                    out << "seed " << m.tree_seeds[t] << '\n';
                    put_tree(out, m.trees[t]);
                }
            } else {
                out << "n_features " << m.n_features << '\n'
                    << "init " << format_double(m.init_log_odds) << '\n'
                    << "learning_rate " << format_double(m.learning_rate) << '\n'
                    << "n_estimators " << m.n_estimators << '\n'
                    << "staged_loss " << m.staged_train_loss.size() << '\n';
                for (double l : m.staged_train_loss) {
                    out << format_double(l) << '\n';
                }
                out << "trees " << m.trees.size() << '\n';
                for (const auto& t : m.trees) {
                    put_tree(out, t);
                }
            }
        },
        model);
    out << "end\n";
    return out.str();
}

AnyModel deserialize(std::string_view content) {
    const auto nl = content.find('\n');
    if (trim(content.substr(0, nl)) != kMagic) {
        throw ParseError("not an inflacast model file (bad header)");
    }
    Reader in(content.substr(nl == std::string_view::npos ? content.size() : nl + 1));
    in.expect("kind");
    const auto kind = in.word();
    AnyModel result;
    if (kind == "logreg") {
        LogRegModel m;
        in.expect("C");
        m.C = in.real();
        in.expect("max_iter");
        m.max_iter = static_cast<int>(in.integer());
        in.expect("iterations");
        m.iterations = static_cast<int>(in.integer());
        in.expect("bias");
        m.bias = in.real();
        in.expect("weights");
        m.weights.resize(in.count());
        for (auto& w : m.weights) {
            w = in.real();
        }
        result = std::move(m);
    } else if (kind == "tree") {
        result = get_tree(in);
    } else if (kind == "forest") {
        ForestModel m;
        in.expect("n_features");
        m.n_features = in.count();
        in.expect("max_features");
        m.max_features = in.count();
        in.expect("bootstrap");
        m.bootstrap = in.integer() != 0;
        in.expect("trees");
        const auto n = in.count();
        for (std::size_t t = 0; t < n; ++t) {
            in.expect("seed");
            m.tree_seeds.push_back(static_cast<std::uint64_t>(std::stoull(in.word())));
            m.trees.push_back(get_tree(in));
        }
        result = std::move(m);
    } else if (kind == "gbm") {
        GbmModel m;
        in.expect("n_features");
        m.n_features = in.count();
        in.expect("init");
        m.init_log_odds = in.real();
        in.expect("learning_rate");
        m.learning_rate = in.real();
        in.expect("n_estimators");
        m.n_estimators = static_cast<int>(in.integer());
        in.expect("staged_loss");
        m.staged_train_loss.resize(in.count());
        for (auto& l : m.staged_train_loss) {
            l = in.real();
        }
        in.expect("trees");
        const auto n = in.count();
        for (std::size_t t = 0; t < n; ++t) {
            m.trees.push_back(get_tree(in));
        }
        result = std::move(m);
    } else {
        throw ParseError("unknown model kind '" + kind + "'");
    }
    in.expect("end");
    return result;
}

// --- grid search -------------------------------------------------------------

std::vector<ParamMap> expand_grid(const std::vector<std::pair<std::string, std::vector<double>>>& axes) {
    std::vector<ParamMap> cells(1);
    for (const auto& [name, values] : axes) {
        if (values.empty()) {
            throw UsageError("grid axis '" + name + "' has no values");
        }
        std::vector<ParamMap> next;
        for (const auto& cell : cells) {
            for (double v : values) {
                auto c = cell;
                c[name] = v;
                next.push_back(std::move(c));
            }
        }
        cells = std::move(next);
    }
    return cells;
}

std::vector<int> stratified_folds(const std::vector<int>& labels, int k_folds, std::uint64_t seed) {
    if (k_folds < 2) {
        throw UsageError("k_folds must be at least 2");
    }
    std::vector<int> fold(labels.size(), 0);
    for (int cls = 0; cls <= 1; ++cls) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i] == cls) {
                members.push_back(i);
            }
        }
        auto rng = Rng::derive(seed, 0xF01D, static_cast<std::uint64_t>(cls));
        rng.shuffle(members);
        for (std::size_t j = 0; j < members.size(); ++j) {
            fold[members[j]] = static_cast<int>(j % static_cast<std::size_t>(k_folds));
        }
    }
    return fold;
}

GridResult grid_search(const Trainer& trainer, const std::vector<ParamMap>& grid, const Dataset& data, int k_folds,
                       std::uint64_t seed) {
    if (grid.empty()) {
        throw UsageError("grid search needs at least one parameter combination");
    }
    data.validate();
    const auto fold = stratified_folds(data.labels, k_folds, seed);
    std::vector<Dataset> train_parts;
    std::vector<Dataset> test_parts;
    for (int f = 0; f < k_folds; ++f) {
        std::vector<std::size_t> tr;
        std::vector<std::size_t> te;
        for (std::size_t i = 0; i < data.size(); ++i) {
            (fold[i] == f ? te : tr).push_back(i);
        }
        train_parts.push_back(data.subset(tr));
        test_parts.push_back(data.subset(te));
        if (!train_parts.back().has_both_classes() || !test_parts.back().has_both_classes()) {
            throw Error("fold " + std::to_string(f) +
                        " contains a single class; use fewer folds or more examples per class");
        }
    }

    GridResult result;
    const auto n_cells = grid.size();
    const auto n_folds = static_cast<std::size_t>(k_folds);
    result.fold_scores.assign(n_cells, std::vector<double>(n_folds, 0.0));
    parallel_for(n_cells * n_folds, [&](std::size_t job) {
        const auto cell = job / n_folds;
        const auto f = job % n_folds;
        const auto model = trainer(grid[cell], train_parts[f]);
        const auto& test = test_parts[f];
        std::vector<int> pred(test.size());
        for (std::size_t i = 0; i < test.size(); ++i) {
            pred[i] = predict_class(model, test.rows[i]);
        }
        result.fold_scores[cell][f] = evalkit::macro_f1(test.labels, pred);
    });
    for (std::size_t c = 0; c < n_cells; ++c) {
        double sum = 0.0;
        for (double s : result.fold_scores[c]) {
            sum += s;
        }
        result.mean_scores.push_back(sum / static_cast<double>(n_folds));
        if (c == 0 || result.mean_scores[c] > result.mean_scores[result.best_index]) {
            result.best_index = c;
        }
    }
    result.best = grid[result.best_index];
    return result;
}

namespace {

double param(const ParamMap& p, const std::string& key, double fallback) {
    const auto it = p.find(key);
    return it == p.end() ? fallback : it->second;
}

void reject_unknown(const ParamMap& p, std::initializer_list<std::string_view> known, const std::string& kind) {
    for (const auto& [key, value] : p) {
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw UsageError("unknown " + kind + " hyperparameter '" + key + "'");
        }
    }
}

}  // namespace

Trainer trainer_for(const std::string& kind) {
    if (kind == "logreg") {
        return [](const ParamMap& p, const Dataset& d) -> AnyModel {
            reject_unknown(p, {"C", "max_iter", "tol"}, "logreg");
            LogRegParams lp;
            lp.C = param(p, "C", lp.C);
            lp.max_iter = static_cast<int>(param(p, "max_iter", lp.max_iter));
            lp.tol = param(p, "tol", lp.tol);
            return train_logreg(d, lp);
        };
    }
    if (kind == "tree") {
        return [](const ParamMap& p, const Dataset& d) -> AnyModel {
            reject_unknown(p, {"max_depth", "min_leaf"}, "tree");
            TreeParams tp;
            tp.max_depth = static_cast<int>(param(p, "max_depth", tp.max_depth));
            tp.min_leaf = static_cast<int>(param(p, "min_leaf", tp.min_leaf));
            return train_tree(d, tp);
        };
    }
    if (kind == "forest") {
        return [](const ParamMap& p, const Dataset& d) -> AnyModel {
            reject_unknown(p, {"n_trees", "max_depth", "min_leaf", "max_features", "seed"}, "forest");
            ForestParams fp;
            fp.n_trees = static_cast<int>(param(p, "n_trees", fp.n_trees));
            fp.max_depth = static_cast<int>(param(p, "max_depth", fp.max_depth));
            fp.min_leaf = static_cast<int>(param(p, "min_leaf", fp.min_leaf));
            fp.max_features = static_cast<std::size_t>(param(p, "max_features", 0.0));
            fp.seed = static_cast<std::uint64_t>(param(p, "seed", 0.0));
            return train_forest(d, fp);
        };
    }
    if (kind == "gbm") {
        return [](const ParamMap& p, const Dataset& d) -> AnyModel {
            reject_unknown(p, {"n_estimators", "learning_rate", "max_depth", "min_leaf"}, "gbm");
            GbmParams gp;
            gp.n_estimators = static_cast<int>(param(p, "n_estimators", gp.n_estimators));
            gp.learning_rate = param(p, "learning_rate", gp.learning_rate);
            gp.max_depth = static_cast<int>(param(p, "max_depth", gp.max_depth));
            gp.min_leaf = static_cast<int>(param(p, "min_leaf", gp.min_leaf));
            return train_gbm(d, gp);
        };
    }
    throw UsageError("unknown baseline model '" + kind + "'");
}

}  // namespace inflacast::baselines
