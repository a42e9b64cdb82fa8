#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "helpers.hpp"
#include "inflacast/common.hpp"
#include "inflacast/corpus.hpp"
#include "inflacast/fixtures.hpp"
#include "inflacast/random.hpp"

using namespace inflacast;
using namespace inflacast::corpus;

namespace {

std::vector<GroupRecord> random_groups(std::uint64_t seed, std::size_t n) {
    Rng rng(seed);
    std::vector<GroupRecord> out;
    for (std::size_t i = 0; i < n; ++i) {
        GroupRecord g;
        g.group_id = "g" + std::to_string(rng.below(n * 2));  // duplicate ids exercise the tie rule
        g.available = !rng.bernoulli(0.1);
        g.total_members = rng.below(6000);
        g.regional_members = g.total_members ? rng.below(g.total_members + 1) : 0;
        if (rng.bernoulli(0.05)) {
            g.regional_members = g.total_members / 5;  // lands exactly on 20% when divisible
        }
        out.push_back(g);
    }
    return out;
}

/// Reference filter: scan, keep, then order with the documented comparator.
std::vector<std::string> oracle_filter(const std::vector<GroupRecord>& groups, std::uint64_t min_members,
                                       double min_share) {
    std::vector<std::pair<double, std::string>> keep;
    for (const auto& g : groups) {
        if (!g.available || g.total_members == 0) {
            continue;
        }
        const double share = 100.0 * static_cast<double>(g.regional_members) / static_cast<double>(g.total_members);
        if (g.total_members >= min_members && share >= min_share) {
            keep.emplace_back(-share, g.group_id);
        }
    }
    std::sort(keep.begin(), keep.end());
    std::vector<std::string> ids;
    for (auto& [s, id] : keep) {
        ids.push_back(id);
    }
    return ids;
}

std::vector<std::string> ids_of(const std::vector<GroupRecord>& gs) {
    std::vector<std::string> ids;
    for (const auto& g : gs) {
        ids.push_back(g.group_id);
    }
    return ids;
}

std::multiset<std::string> as_multiset(const std::vector<GroupRecord>& gs) {
    auto ids = ids_of(gs);
    return {ids.begin(), ids.end()};
}

}  // namespace

TEST_CASE("relative representation arithmetic and errors") {
    CHECK(relative_representation({"a", 40, 10, true}) == doctest::Approx(25.0));
    CHECK(relative_representation({"a", 2000, 0, true}) == 0.0);
    CHECK(relative_representation({"a", 8800, 5000, true}) == doctest::Approx(56.8181818));
    CHECK_THROWS_AS(relative_representation({"a", 0, 0, true}), NotComputable);
    CHECK_THROWS_AS(relative_representation({"a", 100, 10, false}), NotComputable);
}

TEST_CASE("filter thresholds are inclusive") {
    const std::vector<GroupRecord> gs{{"full_1999", 1999, 1999, true},
                                      {"exact_2000_20", 2000, 400, true},
                                      {"just_below_share", 2000, 399, true},
                                      {"gone", 0, 0, false}};
    const auto kept = filter_groups(gs, {});
    REQUIRE(kept.size() == 1);
    CHECK(kept[0].group_id == "exact_2000_20");
    CHECK(filter_groups({}, {}).empty());
}

TEST_CASE("filter config validation") {
    CHECK_THROWS_AS(filter_groups({}, {0, 20.0}), UsageError);
    CHECK_THROWS_AS(filter_groups({}, {10, 100.5}), UsageError);
    CHECK_THROWS_AS(filter_groups({}, {10, -1.0}), UsageError);
}

TEST_CASE("filter matches a reference scan on random populations") {
    for (std::uint64_t seed = 1; seed <= 40; ++seed) {
        const auto gs = random_groups(seed, 300);
        Rng rng(seed * 77);
        const std::uint64_t m = 1 + rng.below(5000);
        const double s = rng.uniform(0.0, 100.0);
        CHECK(ids_of(filter_groups(gs, {m, s})) == oracle_filter(gs, m, s));
    }
}

TEST_CASE("filter is idempotent and monotone in both thresholds") {
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
        const auto gs = random_groups(seed, 400);
        Rng rng(seed + 1000);
        const FilterConfig lo{1 + rng.below(3000), rng.uniform(0.0, 60.0)};
        const auto base = filter_groups(gs, lo);
        CHECK(ids_of(filter_groups(base, lo)) == ids_of(base));

        const FilterConfig more_members{lo.min_members + rng.below(2000), lo.min_share_pct};
        const FilterConfig more_share{lo.min_members, std::min(100.0, lo.min_share_pct + rng.uniform(0.0, 30.0))};
        for (const auto& hi : {more_members, more_share}) {
            const auto a = as_multiset(base);
            const auto b = as_multiset(filter_groups(gs, hi));
            CHECK(std::includes(a.begin(), a.end(), b.begin(), b.end()));
        }
    }
}

TEST_CASE("filter output order is share descending then id ascending") {
    const auto kept = filter_groups(random_groups(5, 2000), {1, 0.0});
    for (std::size_t i = 1; i < kept.size(); ++i) {
        const double a = relative_representation(kept[i - 1]);
        const double b = relative_representation(kept[i]);
        CHECK((a > b || (a == b && kept[i - 1].group_id <= kept[i].group_id)));
    }
}

TEST_CASE("histogram small cases") {
    const auto h = share_histogram({{"a", 100, 10, true}, {"b", 100, 70, true}}, 2);
    CHECK(h.counts == std::vector<std::uint64_t>{1, 1});
    CHECK(h.edges == std::vector<double>{0.0, 50.0, 100.0});
    // equal-width bins put 10% and 30% together in [0, 50)
    CHECK(share_histogram({{"a", 100, 10, true}, {"b", 100, 30, true}}, 2).counts == std::vector<std::uint64_t>{2, 0});

    const auto empty = share_histogram({}, 4, true);
    CHECK(empty.counts == std::vector<std::uint64_t>(4, 0));
    CHECK(empty.log_counts == std::vector<double>(4, 0.0));

    const auto full = share_histogram({{"f", 10, 10, true}}, 10);
    CHECK(full.counts.back() == 1);  // share 100 lands in the last bin
    CHECK_THROWS_AS(share_histogram({}, 0), UsageError);
}

TEST_CASE("histogram totals equal the computable groups") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto gs = random_groups(seed, 500);
        const auto computable = std::count_if(gs.begin(), gs.end(), share_computable);
        const auto h = share_histogram(gs, 37, true);
        CHECK(h.total() == static_cast<std::uint64_t>(computable));
        for (std::size_t i = 0; i < h.counts.size(); ++i) {
            CHECK(h.log_counts[i] == doctest::Approx(std::log10(h.counts[i] + 1.0)));
        }
    }
}

TEST_CASE("fixture population is concentrated in low shares") {
    const auto set = fixtures::generate(42, fixtures::Scale::standard);
    CHECK(set.groups.size() == 10000);
    const auto h = share_histogram(set.groups, 100);
    std::uint64_t below = 0;
    for (std::size_t i = 0; i < 20; ++i) {
        below += h.counts[i];
    }
    CHECK(static_cast<double>(below) > 0.8 * static_cast<double>(h.total()));
}

TEST_CASE("robustness sweep small cases") {
    std::vector<GroupRecord> flat;
    for (int i = 0; i < 10; ++i) {
        flat.push_back({"g" + std::to_string(i), 5000, 2500, true});
    }
    const auto r = robustness_sweep(flat, 1500, 2500, 11);
    CHECK(r.rows.size() == 11);
    CHECK(r.max_relative_change == 0.0);
    for (const auto& row : r.rows) {
        CHECK(row.surviving == 10);
    }
    const auto single = robustness_sweep(flat, 2000, 2000, 5);
    CHECK(single.rows.size() == 1);
    CHECK(single.rows[0].threshold == 2000);
    CHECK_THROWS_AS(robustness_sweep(flat, 3000, 2000, 5), UsageError);
}

TEST_CASE("robustness sweep matches a per-threshold recount") {
    const auto set = fixtures::generate(3, fixtures::Scale::standard);
    const auto r = robustness_sweep(set.groups, 1500, 2500, 11);
    std::size_t lo = SIZE_MAX, hi = 0;
    for (const auto& row : r.rows) {
        std::size_t n = 0;
        for (const auto& g : set.groups) {
            if (share_computable(g) && g.total_members >= row.threshold &&
                100.0 * static_cast<double>(g.regional_members) / static_cast<double>(g.total_members) >= 20.0) {
                ++n;
            }
        }
        CHECK(row.surviving == n);
        lo = std::min(lo, n);
        hi = std::max(hi, n);
    }
    CHECK(r.rows.front().threshold == 1500);
    CHECK(r.rows[5].threshold == 2000);
    CHECK(r.max_relative_change == doctest::Approx(static_cast<double>(hi - lo) / static_cast<double>(hi)));
}

TEST_CASE("ingest keeps first duplicates and honours the window") {
    testing::TempDir dir("ingest");
    {
        std::ofstream f(dir / "posts.jsonl");
        f << R"({"post_id":"1","group_id":"g","text":"a","month":"2015-01"})" << '\n'
          << R"({"post_id":"2","group_id":"g","text":"b","month":"2015-02"})" << '\n'
          << R"({"post_id":"1","group_id":"g","text":"dup","month":"2015-03"})" << '\n'
          << R"({"post_id":"3","group_id":"g","text":"c","month":"2015-04"})" << '\n'
          << R"({"post_id":"4","group_id":"g","text":"old","month":"2009-12"})" << '\n'
          << R"({"post_id":"5","group_id":"g","text":"","month":"2015-05"})" << '\n';
    }
    const auto r = ingest_posts(dir / "posts.jsonl");
    REQUIRE(r.posts.size() == 3);
    CHECK(r.posts[0].text == "a");
    CHECK(r.posts[2].post_id == "3");
    CHECK(r.duplicates == 1);
    CHECK(r.out_of_window == 1);
    CHECK(r.empty_dropped == 1);
    CHECK(ingest_posts(dir / "posts.jsonl", {}, true).posts.size() == 4);
}

TEST_CASE("strict and lenient ingestion agree with a line validator") {
    testing::TempDir dir("lenient");
    Rng rng(11);
    std::vector<bool> good;
    {
        std::ofstream f(dir / "posts.jsonl");
        for (int i = 0; i < 1000; ++i) {
            const bool bad = i % 20 == 7;  // exactly 5% malformed
            good.push_back(!bad);
            if (bad) {
                switch (rng.below(3)) {
                    case 0: f << R"({"post_id":"x","text":"no group","month":"2015-01"})" << '\n'; break;
                    case 1: f << R"({"post_id":"x","group_id":"g","text":"t","month":"2015-13"})" << '\n'; break;
                    default: f << R"({"post_id":"x", broken)" << '\n';
                }
            } else {
                f << corpus::post_to_json_line({"p" + std::to_string(i), "g", "text " + std::to_string(i),
                                                Month{2010 + i % 12, 1 + i % 12}})
                  << '\n';
            }
        }
    }
    try {
        ingest_posts(dir / "posts.jsonl");
        FAIL("strict mode should reject the file");
    } catch (const ParseError& e) {
        CHECK(e.line() == 8);
    }
    const auto r = ingest_posts(dir / "posts.jsonl", {}, false, IngestMode::lenient);
    CHECK(r.posts.size() == 950);
    std::vector<std::size_t> expected;
    for (std::size_t i = 0; i < good.size(); ++i) {
        if (!good[i]) {
            expected.push_back(i + 1);
        }
    }
    CHECK(r.malformed_lines == expected);
}

TEST_CASE("post json round trip preserves unicode") {
    const PostRecord p{"id\"1", "g", "цены выросли \\ \n ok", Month{2020, 3}};
    const auto back = parse_post_line(post_to_json_line(p));
    CHECK(back.post_id == p.post_id);
    CHECK(back.text == p.text);
    CHECK(back.month == p.month);
    CHECK_THROWS_AS(parse_post_line(R"({"post_id":"1","group_id":"g","text":"t","month":"2020/03"})"), ParseError);
}

TEST_CASE("groups csv round trip") {
    testing::TempDir dir("groups");
    const auto gs = random_groups(9, 200);
    write_file_atomic(dir / "g.csv", groups_to_csv(gs));
    const auto back = read_groups_csv(dir / "g.csv");
    REQUIRE(back.size() == gs.size());
    for (std::size_t i = 0; i < gs.size(); ++i) {
        CHECK(back[i].group_id == gs[i].group_id);
        CHECK(back[i].available == gs[i].available);
        CHECK(back[i].total_members == gs[i].total_members);
        CHECK(back[i].regional_members == gs[i].regional_members);
    }
    write_file_atomic(dir / "s.csv", groups_to_csv(gs, true));
    CHECK(read_groups_csv(dir / "s.csv").size() == gs.size());
    write_file_atomic(dir / "bad.csv", "group_id,total_members,regional_members,available\ng,10,11,true\n");
    CHECK_THROWS_AS(read_groups_csv(dir / "bad.csv"), ParseError);
}
