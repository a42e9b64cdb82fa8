#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "inflacast/common.hpp"
#include "inflacast/evalkit.hpp"
#include "inflacast/random.hpp"

using namespace inflacast;
using namespace inflacast::evalkit;

namespace {

std::vector<int> labels_with(std::size_t ones, std::size_t zeros, std::uint64_t seed) {
    std::vector<int> y(ones, 1);
    y.insert(y.end(), zeros, 0);
    Rng rng(seed);
    rng.shuffle(y);
    return y;
}

std::size_t count_class(const std::vector<std::size_t>& idx, const std::vector<int>& y, int cls) {
    return static_cast<std::size_t>(std::count_if(idx.begin(), idx.end(), [&](std::size_t i) { return y[i] == cls; }));
}

}  // namespace

TEST_CASE("split sizes") {
    const auto s100 = split(labels_with(50, 50, 1), 7);
    CHECK(s100.train.size() == 60);
    CHECK(s100.validation.size() == 20);
    CHECK(s100.test.size() == 20);
    const auto s10 = split(labels_with(5, 5, 2), 7);
    CHECK(s10.train.size() == 6);
    CHECK(s10.validation.size() == 2);
    CHECK(s10.test.size() == 2);
    CHECK_THROWS(split(labels_with(4, 10, 3), 1));
}

TEST_CASE("split is a stratified seeded partition") {
    Rng rng(99);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t ones = 5 + rng.below(500);
        const std::size_t zeros = 5 + rng.below(500);
        const auto y = labels_with(ones, zeros, trial);
        const auto seed = rng.next();
        const auto s = split(y, seed);

        std::vector<std::size_t> all;
        for (const auto* part : {&s.train, &s.validation, &s.test}) {
            CHECK(std::is_sorted(part->begin(), part->end()));
            all.insert(all.end(), part->begin(), part->end());
        }
        std::sort(all.begin(), all.end());
        CHECK(std::adjacent_find(all.begin(), all.end()) == all.end());
        CHECK(all.size() == y.size());
        CHECK(all.back() == y.size() - 1);

        for (int cls : {0, 1}) {
            const double n = static_cast<double>(cls ? ones : zeros);
            const auto expect = static_cast<std::size_t>(std::llround(0.2 * n));
            CHECK(count_class(s.test, y, cls) == expect);
            CHECK(count_class(s.validation, y, cls) == expect);
            CHECK(count_class(s.train, y, cls) == (cls ? ones : zeros) - 2 * expect);
        }
        const auto again = split(y, seed);
        CHECK(again.train == s.train);
        CHECK(again.test == s.test);
    }
}

TEST_CASE("different seeds give different splits") {
    const auto y = labels_with(200, 200, 5);
    CHECK(split(y, 1).test != split(y, 2).test);
}

TEST_CASE("confusion counts") {
    CHECK(confusion({1, 1, 0}, {1, 0, 0}) == ConfusionMatrix{1, 0, 1, 1});
    CHECK(confusion({1, 0, 1, 0}, {1, 0, 1, 0}) == ConfusionMatrix{2, 0, 0, 2});
    CHECK_THROWS(confusion({1, 0}, {1}));
    CHECK_THROWS(confusion({2}, {1}));

    Rng rng(3);
    std::vector<int> t, p;
    for (int i = 0; i < 1000; ++i) {
        t.push_back(static_cast<int>(rng.below(2)));
        p.push_back(static_cast<int>(rng.below(2)));
    }
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] == 1 && p[i] == 1) ++cm.tp;
        if (t[i] == 0 && p[i] == 1) ++cm.fp;
        if (t[i] == 1 && p[i] == 0) ++cm.fn;
        if (t[i] == 0 && p[i] == 0) ++cm.tn;
    }
    CHECK(confusion(t, p) == cm);
}

TEST_CASE("metric hand evaluations") {
    const auto perfect = class_scores({5, 0, 0, 0});
    CHECK(perfect.precision == 1.0);
    CHECK(perfect.recall == 1.0);
    CHECK(perfect.f1 == 1.0);

    const auto sym = class_scores({1, 1, 1, 0});
    CHECK(sym.precision == 0.5);
    CHECK(sym.recall == 0.5);
    CHECK(sym.f1 == 0.5);

    const auto hand = class_scores({2, 1, 3, 0});
    CHECK(hand.precision == doctest::Approx(2.0 / 3.0));
    CHECK(hand.recall == doctest::Approx(0.4));
    CHECK(hand.f1 == doctest::Approx(0.5));

    const auto empty = class_scores({0, 0, 0, 7});
    CHECK(empty.degenerate);
    CHECK(empty.precision == 0.0);
    CHECK(empty.f1 == 0.0);
}

TEST_CASE("f1 identities on random confusion matrices") {
    Rng rng(12);
    for (int i = 0; i < 10000; ++i) {
        const ConfusionMatrix cm{1 + rng.below(1000), rng.below(1000), rng.below(1000), rng.below(1000)};
        const auto s = class_scores(cm);
        const double harmonic = 2.0 * s.precision * s.recall / (s.precision + s.recall);
        const double counts = 2.0 * cm.tp / (2.0 * cm.tp + cm.fp + cm.fn);
        CHECK(std::abs(harmonic - counts) < 1e-12);
        CHECK(std::abs(s.f1 - counts) < 1e-12);
        CHECK(s.f1 >= std::min(s.precision, s.recall) - 1e-15);
        CHECK(s.f1 <= std::max(s.precision, s.recall) + 1e-15);
    }
}

TEST_CASE("macro scores are the per-class mean and invariant under class swap") {
    Rng rng(4);
    for (int i = 0; i < 2000; ++i) {
        const ConfusionMatrix cm{rng.below(50), rng.below(50), rng.below(50), rng.below(50)};
        const auto r = metrics(cm);
        CHECK(r.macro_f1 == doctest::Approx((r.positive.f1 + r.negative.f1) / 2.0));
        CHECK(r.macro_precision == doctest::Approx((r.positive.precision + r.negative.precision) / 2.0));
        CHECK(r.macro_recall == doctest::Approx((r.positive.recall + r.negative.recall) / 2.0));
        const auto swapped = metrics(cm.swapped());
        CHECK(swapped.macro_f1 == doctest::Approx(r.macro_f1));
        CHECK(swapped.positive.f1 == doctest::Approx(r.negative.f1));
        for (double v : {r.macro_f1, r.macro_precision, r.macro_recall}) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
}

TEST_CASE("metrics table is sorted by f1 descending") {
    std::vector<MetricsRow> rows;
    Rng rng(8);
    for (int i = 0; i < 12; ++i) {
        rows.push_back({"m" + std::to_string(i), metrics({rng.below(30), rng.below(30), rng.below(30), rng.below(30)})});
    }
    rows.push_back({"tie_b", metrics({5, 5, 5, 5})});
    rows.push_back({"tie_a", metrics({5, 5, 5, 5})});
    const auto csv = metrics_table_csv(rows);
    CHECK(csv.rfind("model,recall,precision,f1\n", 0) == 0);

    // parse back and check the order against an independent sort of the inputs
    std::vector<std::string> names;
    std::size_t pos = csv.find('\n') + 1;
    while (pos < csv.size()) {
        const auto end = csv.find('\n', pos);
        const auto line = csv.substr(pos, end - pos);
        names.push_back(line.substr(0, line.find(',')));
        pos = end + 1;
    }
    std::stable_sort(rows.begin(), rows.end(), [](const MetricsRow& a, const MetricsRow& b) {
        return a.report.macro_f1 != b.report.macro_f1 ? a.report.macro_f1 > b.report.macro_f1 : a.model < b.model;
    });
    REQUIRE(names.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(names[i] == rows[i].model);
    }
    const auto a = std::find(names.begin(), names.end(), "tie_a");
    const auto b = std::find(names.begin(), names.end(), "tie_b");
    CHECK(a < b);
}
