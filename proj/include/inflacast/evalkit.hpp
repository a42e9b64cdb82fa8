#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace inflacast::evalkit {

/// Index sets for a 60/20/20 stratified split. All lists are sorted ascending.
struct DatasetSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
    std::vector<std::size_t> test;
    std::uint64_t seed = 0;
};

/// Seeded stratified split. Per class, test and validation each take round(0.2 * n_class)
/// examples and the remainder goes to train. Every class needs at least 5 examples.
DatasetSplit split(const std::vector<int>& labels, std::uint64_t seed);

/// Counts with class 1 as the positive class.
struct ConfusionMatrix {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    std::uint64_t tn = 0;

    std::uint64_t total() const noexcept { return tp + fp + fn + tn; }
    /// The same counts seen with class 0 as positive.
    ConfusionMatrix swapped() const noexcept { return {tn, fn, fp, tp}; }

    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

ConfusionMatrix confusion(const std::vector<int>& y_true, const std::vector<int>& y_pred);

struct ClassScores {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    bool degenerate = false;  // some denominator was zero and the affected score was set to 0
};

struct MetricsReport {
    ClassScores positive;  // class 1
    ClassScores negative;  // class 0
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
    bool degenerate = false;
};

/// precision = TP/(TP+FP), recall = TP/(TP+FN), f1 = 2TP/(2TP+FP+FN); 0 for empty denominators.
ClassScores class_scores(const ConfusionMatrix& cm);

MetricsReport metrics(const ConfusionMatrix& cm);

/// Convenience: macro-F1 of a prediction vector.
double macro_f1(const std::vector<int>& y_true, const std::vector<int>& y_pred);

struct MetricsRow {
    std::string model;
    MetricsReport report;
};

/// `model,recall,precision,f1` rows with macro scores, sorted by F1 descending (name ascending on ties).
std::string metrics_table_csv(std::vector<MetricsRow> rows);

}  // namespace inflacast::evalkit
