#pragma once

// Independent reference implementations used by unit tests and the acceptance binary.
// They share no code with the library beyond the public data types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "inflacast/attribution.hpp"
#include "inflacast/baselines.hpp"
#include "inflacast/random.hpp"

namespace oracles {

using inflacast::Rng;
using inflacast::baselines::Dataset;
using inflacast::vectorizer::SparseEntry;
using inflacast::vectorizer::SparseVector;

/// Dense rows of non-negative values; zeros stay implicit in the sparse form.
struct DenseData {
    std::vector<std::vector<double>> x;
    std::vector<int> y;

    Dataset sparse() const {
        Dataset d;
        d.n_features = x.empty() ? 0 : x[0].size();
        for (std::size_t i = 0; i < x.size(); ++i) {
            SparseVector v;
            for (std::size_t j = 0; j < x[i].size(); ++j) {
                if (x[i][j] != 0.0) {
                    v.entries.push_back({static_cast<std::uint32_t>(j), x[i][j]});
                }
            }
            d.rows.push_back(std::move(v));
            d.labels.push_back(y[i]);
        }
        return d;
    }
};

/// Points with small integer-valued features (many ties and zeros) and a noisy threshold rule.
/// Both classes are always present.
inline DenseData random_dense(std::uint64_t seed, std::size_t n, std::size_t features, int levels = 5,
                              double noise = 0.15) {
    Rng rng(seed);
    DenseData d;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> row;
        for (std::size_t j = 0; j < features; ++j) {
            row.push_back(static_cast<double>(rng.below(static_cast<std::uint64_t>(levels))) * 0.5);
        }
        double s = 0.0;
        for (std::size_t j = 0; j < features; ++j) {
            s += (j % 2 ? -1.0 : 1.0) * row[j];
        }
        int label = s > 0.0 ? 1 : 0;
        if (rng.bernoulli(noise)) {
            label = 1 - label;
        }
        d.x.push_back(std::move(row));
        d.y.push_back(label);
    }
    d.y[0] = 0;
    d.y[1] = 1;
    return d;
}

// ---------------------------------------------------------------------------
// Logistic regression: plain gradient descent with a fixed 1/L step from several starts.
// ---------------------------------------------------------------------------

inline double logreg_objective_dense(const DenseData& d, const std::vector<double>& w, double b, double C) {
    double loss = 0.0;
    for (std::size_t i = 0; i < d.x.size(); ++i) {
        double z = b;
        for (std::size_t j = 0; j < w.size(); ++j) {
            z += w[j] * d.x[i][j];
        }
        loss += (z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z))) - d.y[i] * z;
    }
    double sq = 0.0;
    for (double v : w) {
        sq += v * v;
    }
    return loss + sq / (2.0 * C);
}

/// Lowest objective reached by fixed-step descent run until the gradient inf-norm is below tol.
inline double logreg_descent_oracle(const DenseData& d, double C, int restarts, std::uint64_t seed,
                                    double tol = 1e-8, int max_iter = 2000000) {
    const std::size_t p = d.x.empty() ? 0 : d.x[0].size();
    double lip = 1.0 / C;
    for (const auto& row : d.x) {
        double sq = 1.0;
        for (double v : row) {
            sq += v * v;
        }
        lip += 0.25 * sq;
    }
    const double step = 1.0 / lip;
    Rng rng(seed);
    double best = INFINITY;
    for (int r = 0; r < restarts; ++r) {
        std::vector<double> w(p);
        for (auto& v : w) {
            v = rng.uniform(-2.0, 2.0);
        }
        double b = rng.uniform(-2.0, 2.0);
        for (int it = 0; it < max_iter; ++it) {
            std::vector<double> gw(p, 0.0);
            double gb = 0.0;
            for (std::size_t i = 0; i < d.x.size(); ++i) {
                double z = b;
                for (std::size_t j = 0; j < p; ++j) {
                    z += w[j] * d.x[i][j];
                }
                const double res = 1.0 / (1.0 + std::exp(-z)) - d.y[i];
                for (std::size_t j = 0; j < p; ++j) {
                    gw[j] += res * d.x[i][j];
                }
                gb += res;
            }
            double inf = std::abs(gb);
            for (std::size_t j = 0; j < p; ++j) {
                gw[j] += w[j] / C;
                inf = std::max(inf, std::abs(gw[j]));
            }
            if (inf <= tol) {
                break;
            }
            for (std::size_t j = 0; j < p; ++j) {
                w[j] -= step * gw[j];
            }
            b -= step * gb;
        }
        best = std::min(best, logreg_objective_dense(d, w, b, C));
    }
    return best;
}

// ---------------------------------------------------------------------------
// CART: exhaustive split enumeration with exact rational Gini comparisons.
// ---------------------------------------------------------------------------

struct OracleNode {
    int feature = -1;
    double threshold = 0.0;
    double value = 0.0;
    std::vector<OracleNode> children;  // empty for leaves, else {left, right}
};

/// Gini purity term sum over sides of pos^2 / n, kept as a fraction num / den.
struct Fraction {
    __int128 num = 0;
    __int128 den = 1;
    bool operator>(const Fraction& o) const { return num * o.den > o.num * den; }
};

inline Fraction purity(std::int64_t pl, std::int64_t nl, std::int64_t pr, std::int64_t nr) {
    // pl^2/nl + pr^2/nr = (pl^2 nr + pr^2 nl) / (nl nr)
    return {static_cast<__int128>(pl) * pl * nr + static_cast<__int128>(pr) * pr * nl, static_cast<__int128>(nl) * nr};
}

inline OracleNode brute_tree(const DenseData& d, const std::vector<std::size_t>& idx, int depth_left, int min_leaf) {
    OracleNode node;
    std::int64_t pos = 0;
    for (auto i : idx) {
        pos += d.y[i];
    }
    const auto n = static_cast<std::int64_t>(idx.size());
    node.value = static_cast<double>(pos) / static_cast<double>(n);
    if (depth_left == 0 || pos == 0 || pos == n || n < 2 * min_leaf) {
        return node;
    }
    const Fraction parent{static_cast<__int128>(pos) * pos, n};
    Fraction best = parent;
    int best_f = -1;
    double best_t = 0.0;
    const std::size_t features = d.x[0].size();
    for (std::size_t f = 0; f < features; ++f) {
        std::vector<double> values;
        for (auto i : idx) {
            values.push_back(d.x[i][f]);
        }
        values.push_back(0.0);  // zero is always a candidate
        std::sort(values.begin(), values.end());
        values.erase(std::unique(values.begin(), values.end()), values.end());
        for (std::size_t k = 0; k + 1 < values.size(); ++k) {
            const double t = 0.5 * (values[k] + values[k + 1]);
            std::int64_t pl = 0, nl = 0;
            for (auto i : idx) {
                if (d.x[i][f] <= t) {
                    ++nl;
                    pl += d.y[i];
                }
            }
            const std::int64_t nr = n - nl;
            if (nl < min_leaf || nr < min_leaf) {
                continue;
            }
            const auto score = purity(pl, nl, pos - pl, nr);
            if (score > best) {
                best = score;
                best_f = static_cast<int>(f);
                best_t = t;
            }
        }
    }
    if (best_f < 0) {
        return node;
    }
    node.feature = best_f;
    node.threshold = best_t;
    std::vector<std::size_t> left, right;
    for (auto i : idx) {
        (d.x[i][static_cast<std::size_t>(best_f)] <= best_t ? left : right).push_back(i);
    }
    node.children.push_back(brute_tree(d, left, depth_left - 1, min_leaf));
    node.children.push_back(brute_tree(d, right, depth_left - 1, min_leaf));
    return node;
}

/// Structural comparison of a library tree (rooted at `at`) against the oracle.
inline bool same_tree(const inflacast::baselines::TreeModel& t, int at, const OracleNode& o, double tol = 1e-12) {
    const auto& n = t.nodes[static_cast<std::size_t>(at)];
    if (o.feature < 0) {
        return n.feature < 0 && std::abs(n.value - o.value) <= tol;
    }
    return n.feature == o.feature && std::abs(n.threshold - o.threshold) <= tol && same_tree(t, n.left, o.children[0], tol) &&
           same_tree(t, n.right, o.children[1], tol);
}

// ---------------------------------------------------------------------------
// GBM: replay the stage recurrence from the stored trees.
// ---------------------------------------------------------------------------

struct GbmReplay {
    std::vector<double> staged_loss;  // after 0..n stages
    bool leaves_are_newton_steps = true;
};

inline double mean_log_loss(const std::vector<double>& f, const std::vector<int>& y) {
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double z = f[i];
        s += (z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z))) - y[i] * z;
    }
    return s / static_cast<double>(f.size());
}

inline GbmReplay replay_gbm(const inflacast::baselines::GbmModel& m, const Dataset& data, double tol = 1e-9) {
    GbmReplay r;
    std::vector<double> f(data.size());
    double pos = 0;
    for (int y : data.labels) {
        pos += y;
    }
    const double p0 = pos / static_cast<double>(data.size());
    const double init = std::log(p0 / (1.0 - p0));
    std::fill(f.begin(), f.end(), init);
    r.leaves_are_newton_steps = std::abs(init - m.init_log_odds) <= tol;
    r.staged_loss.push_back(mean_log_loss(f, data.labels));
    for (const auto& tree : m.trees) {
        // route every sample, accumulate Newton sums per leaf
        std::vector<double> num(tree.nodes.size(), 0.0), den(tree.nodes.size(), 0.0);
        std::vector<int> leaf_of(data.size());
        for (std::size_t i = 0; i < data.size(); ++i) {
            int at = 0;
            while (tree.nodes[static_cast<std::size_t>(at)].feature >= 0) {
                const auto& nd = tree.nodes[static_cast<std::size_t>(at)];
                at = data.rows[i].at(static_cast<std::uint32_t>(nd.feature)) <= nd.threshold ? nd.left : nd.right;
            }
            leaf_of[i] = at;
            const double p = 1.0 / (1.0 + std::exp(-f[i]));
            num[static_cast<std::size_t>(at)] += data.labels[i] - p;
            den[static_cast<std::size_t>(at)] += p * (1.0 - p);
        }
        for (std::size_t k = 0; k < tree.nodes.size(); ++k) {
            if (tree.nodes[k].feature >= 0 || tree.nodes[k].samples == 0) {
                continue;
            }
            const double expect = den[k] < 1e-12 ? 0.0 : num[k] / den[k];
            if (std::abs(expect - tree.nodes[k].value) > tol * std::max(1.0, std::abs(expect))) {
                r.leaves_are_newton_steps = false;
            }
        }
        for (std::size_t i = 0; i < data.size(); ++i) {
            f[i] += m.learning_rate * tree.nodes[static_cast<std::size_t>(leaf_of[i])].value;
        }
        r.staged_loss.push_back(mean_log_loss(f, data.labels));
    }
    return r;
}

// ---------------------------------------------------------------------------
// Shapley values by explicit subset enumeration with integer factorial weights.
// ---------------------------------------------------------------------------

inline std::vector<double> brute_shapley(const inflacast::attribution::Game& g) {
    const std::size_t n = g.size();
    std::vector<double> fact(n + 1, 1.0);
    for (std::size_t k = 1; k <= n; ++k) {
        fact[k] = fact[k - 1] * static_cast<double>(k);
    }
    std::vector<double> phi(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::uint64_t s = 0; s < (std::uint64_t{1} << n); ++s) {
            if (s >> i & 1u) {
                continue;
            }
            std::vector<char> without(n, 0);
            std::size_t size = 0;
            for (std::size_t k = 0; k < n; ++k) {
                without[k] = static_cast<char>(s >> k & 1u);
                size += static_cast<std::size_t>(without[k]);
            }
            auto with = without;
            with[i] = 1;
            phi[i] += fact[size] * fact[n - size - 1] / fact[n] * (g.value(with) - g.value(without));
        }
    }
    return phi;
}

}  // namespace oracles
