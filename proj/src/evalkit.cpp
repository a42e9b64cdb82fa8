#include "inflacast/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "inflacast/common.hpp"
#include "inflacast/random.hpp"

namespace inflacast::evalkit {

DatasetSplit split(const std::vector<int>& labels, std::uint64_t seed) {
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        by_class[labels[i]].push_back(i);
    }
    DatasetSplit s;
    s.seed = seed;
    for (auto& [label, members] : by_class) {
        if (members.size() < 5) {
            throw Error("class " + std::to_string(label) + " has " + std::to_string(members.size()) +
                        " examples; at least 5 are needed to split");
        }
        auto rng = Rng::derive(seed, static_cast<std::uint64_t>(label) + 1);
        rng.shuffle(members);
        const auto share = static_cast<std::size_t>(std::llround(0.2 * static_cast<double>(members.size())));
        s.test.insert(s.test.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(share));
        s.validation.insert(s.validation.end(), members.begin() + static_cast<std::ptrdiff_t>(share),
                            members.begin() + static_cast<std::ptrdiff_t>(2 * share));
        s.train.insert(s.train.end(), members.begin() + static_cast<std::ptrdiff_t>(2 * share), members.end());
    }
    std::sort(s.train.begin(), s.train.end());
    std::sort(s.validation.begin(), s.validation.end());
    std::sort(s.test.begin(), s.test.end());
    return s;
}

ConfusionMatrix confusion(const std::vector<int>& y_true, const std::vector<int>& y_pred) {
    if (y_true.size() != y_pred.size()) {
        throw Error("confusion: y_true has " + std::to_string(y_true.size()) + " labels but y_pred has " +
                    std::to_string(y_pred.size()));
    }
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        const int t = y_true[i];
        const int p = y_pred[i];
        if ((t != 0 && t != 1) || (p != 0 && p != 1)) {
            throw Error("confusion: labels must be 0 or 1");
        }
        if (t == 1) {
            ++(p == 1 ? cm.tp : cm.fn);
        } else {
            ++(p == 1 ? cm.fp : cm.tn);
        }
    }
    return cm;
}

ClassScores class_scores(const ConfusionMatrix& cm) {
    ClassScores s;
    const auto tp = static_cast<double>(cm.tp);
    const auto fp = static_cast<double>(cm.fp);
    const auto fn = static_cast<double>(cm.fn);
    if (cm.tp + cm.fp > 0) {
        s.precision = tp / (tp + fp);
    } else {
        s.degenerate = true;
    }
    if (cm.tp + cm.fn > 0) {
        s.recall = tp / (tp + fn);
    } else {
        s.degenerate = true;
    }
    if (2 * cm.tp + cm.fp + cm.fn > 0) {
        s.f1 = 2.0 * tp / (2.0 * tp + fp + fn);
    } else {
        s.degenerate = true;
    }
    return s;
}

MetricsReport metrics(const ConfusionMatrix& cm) {
    MetricsReport r;
    r.positive = class_scores(cm);
    r.negative = class_scores(cm.swapped());
    r.macro_precision = 0.5 * (r.positive.precision + r.negative.precision);
    r.macro_recall = 0.5 * (r.positive.recall + r.negative.recall);
    r.macro_f1 = 0.5 * (r.positive.f1 + r.negative.f1);
    r.degenerate = r.positive.degenerate || r.negative.degenerate;
    return r;
}

double macro_f1(const std::vector<int>& y_true, const std::vector<int>& y_pred) {
    return metrics(confusion(y_true, y_pred)).macro_f1;
}

std::string metrics_table_csv(std::vector<MetricsRow> rows) {
    std::stable_sort(rows.begin(), rows.end(), [](const MetricsRow& a, const MetricsRow& b) {
        if (a.report.macro_f1 != b.report.macro_f1) {
            return a.report.macro_f1 > b.report.macro_f1;
        }
        return a.model < b.model;
    });
    std::string out = "model,recall,precision,f1\n";
    for (const auto& r : rows) {
        out += csv::escape(r.model) + "," + format_fixed(r.report.macro_recall, 4) + "," +
               format_fixed(r.report.macro_precision, 4) + "," + format_fixed(r.report.macro_f1, 4) + "\n";
    }
    return out;
}

}  // namespace inflacast::evalkit
