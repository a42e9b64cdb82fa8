#include "inflacast/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "inflacast/common.hpp"
#include "inflacast/random.hpp"

namespace inflacast::fixtures {

namespace {

using corpus::GroupRecord;
using corpus::PostRecord;
using labeler::Breakpoint;
using labeler::ExtremumKind;

const std::vector<std::string> kNeutral = {
    "омск",    "сегодня", "магазин", "в",       "на",      "и",      "у",       "нас",     "город",
    "рынок",   "люди",    "говорят", "снова",   "опять",   "новости", "район",   "неделя",  "цены",
    "продукты", "зарплата", "пенсия", "хлеб",   "молоко",  "бензин", "проезд",  "аренда",  "квартира",
    "кто",     "знает",   "подскажите", "вчера", "утром",  "соседи", "сосед",   "двор",    "остановка",
};
const std::vector<std::string> kRising = {"подорожание", "выросли", "подорожали", "дорожает", "рост",
                                          "повышение",   "дороже",  "взлетели",   "наценка",  "инфляция"};
const std::vector<std::string> kFalling = {"подешевели", "снижение", "скидки",     "дешевле",  "упали",
                                           "акция",      "распродажа", "снизились", "падение", "стабильные"};

const std::vector<std::string> kSubjects = {"цены", "цены на продукты", "тарифы", "цены на бензин", "продукты"};
const std::vector<std::string> kRiseVerbs = {"выросли", "подорожали", "повысились"};
const std::vector<std::string> kFallVerbs = {"снизились", "подешевели", "упали"};
const std::vector<std::string> kTails = {"", "в омске", "за месяц", "на этой неделе"};

const MonthRange kWindow{};

std::string pad_id(const char* prefix, std::size_t i, int width) {
    std::string digits = std::to_string(i);
    if (static_cast<int>(digits.size()) < width) {
        digits.insert(0, static_cast<std::size_t>(width) - digits.size(), '0');
    }
    return prefix + digits;
}

double round3(double v) { return std::round(v * 1000.0) / 1000.0; }

std::vector<GroupRecord> make_groups(std::uint64_t seed, std::size_t n) {
    Rng rng = Rng::derive(seed, 0x6209);
    std::vector<GroupRecord> groups;
    const std::size_t random_count = n > 3 ? n - 3 : 0;  // the three edge groups complete the count
    groups.reserve(random_count + 3);
    for (std::size_t i = 0; i < random_count; ++i) {
        GroupRecord g;
        g.group_id = pad_id("g", i + 1, 6);
        g.available = !rng.bernoulli(0.03);
        double u = rng.uniform();
        while (u <= 0.0) {
            u = rng.uniform();
        }
        // Pareto membership, x_min 100, tail index 0.7
        g.total_members = static_cast<std::uint64_t>(std::min(3.0e6, std::floor(100.0 / std::pow(u, 1.0 / 0.7))));
        double share;
        if (rng.bernoulli(0.08)) {
            share = rng.uniform(20.0, 70.0);
        } else {
            double v = rng.uniform();
            while (v <= 0.0) {
                v = rng.uniform();
            }
            share = std::min(100.0, -6.0 * std::log(v));
        }
        g.regional_members = static_cast<std::uint64_t>(std::llround(static_cast<double>(g.total_members) * share / 100.0));
        g.regional_members = std::min(g.regional_members, g.total_members);
        if (!g.available) {
            g.total_members = 0;
            g.regional_members = 0;
        }
        groups.push_back(std::move(g));
    }
    // exact threshold cases
    groups.push_back({"g_edge_2000_20pct", 2000, 400, true});
    groups.push_back({"g_edge_1999_full", 1999, 1999, true});
    groups.push_back({"g_edge_5000_19pct", 5000, 999, true});
    return groups;
}

struct PlantedSeries {
    labeler::InflationSeries series;
    std::vector<Breakpoint> breakpoints;
};

PlantedSeries make_series(std::uint64_t seed) {
    Rng rng = Rng::derive(seed, 0x5E41);
    const std::size_t n = static_cast<std::size_t>(kWindow.last.index() - kWindow.first.index() + 1);

    PlantedSeries out;
    out.series.start_month = kWindow.first;
    std::vector<std::size_t> idx;
    std::size_t pos = 3 + rng.below(5);
    while (pos < n - 6) {
        idx.push_back(pos);
        pos += 6 + rng.below(11);
    }
    ExtremumKind kind = rng.bernoulli(0.5) ? ExtremumKind::maximum : ExtremumKind::minimum;
    std::vector<double> level;
    for (auto i : idx) {
        out.breakpoints.push_back({i, out.series.start_month.plus(static_cast<int>(i)), kind});
        level.push_back(kind == ExtremumKind::maximum ? rng.uniform(0.8, 1.5) : rng.uniform(-0.2, 0.3));
        kind = kind == ExtremumKind::maximum ? ExtremumKind::minimum : ExtremumKind::maximum;
    }

    // Knots: the two series ends plus the planted extrema. End levels sit between the
    // neighbouring extremum and its opposite so the end segments stay monotone.
    std::vector<std::size_t> kx{0};
    std::vector<double> ky;
    const bool first_is_max = out.breakpoints.front().kind == ExtremumKind::maximum;
    ky.push_back(level.front() + (first_is_max ? -0.5 : 0.5));
    for (std::size_t k = 0; k < idx.size(); ++k) {
        kx.push_back(idx[k]);
        ky.push_back(level[k]);
    }
    const bool last_is_max = out.breakpoints.back().kind == ExtremumKind::maximum;
    kx.push_back(n - 1);
    ky.push_back(level.back() + (last_is_max ? -0.5 : 0.5));

    out.series.values.assign(n, 0.0);
    for (std::size_t s = 0; s + 1 < kx.size(); ++s) {
        const std::size_t a = kx[s];
        const std::size_t b = kx[s + 1];
        const double step = (ky[s + 1] - ky[s]) / static_cast<double>(b - a);
        for (std::size_t i = a; i <= b; ++i) {
            double v = ky[s] + step * static_cast<double>(i - a);
            if (i != a && i != b) {
                v += 0.3 * std::abs(step) * rng.uniform(-1.0, 1.0);  // keeps the segment strictly monotone
            }
            out.series.values[i] = round3(v);
        }
    }
    return out;
}

std::string main_post_text(Rng& rng, int label) {
    const auto len = 6 + rng.below(9);
    const auto cues = 1 + rng.below(3);
    std::vector<std::string> words;
    for (std::size_t c = 0; c < cues; ++c) {
        const bool own = rng.bernoulli(0.8);
        const auto& pool = (label == 1) == own ? kRising : kFalling;
        words.push_back(pool[rng.below(pool.size())]);
    }
    while (words.size() < len) {
        words.push_back(kNeutral[rng.below(kNeutral.size())]);
    }
    rng.shuffle(words);
    std::string text;
    for (std::size_t i = 0; i < words.size(); ++i) {
        text += (i ? " " : "") + words[i];
    }
    if (rng.bernoulli(0.3)) {
        text = (rng.bernoulli(0.5) ? "Вот " : "Ну ") + text;
    }
    if (rng.bernoulli(0.4)) {
        text += rng.bernoulli(0.5) ? "!" : "...";
    }
    return text;
}

std::string negation_text(Rng& rng, NegationKind kind, int label) {
    const auto& rise = kRiseVerbs[rng.below(kRiseVerbs.size())];
    const auto& fall = kFallVerbs[rng.below(kFallVerbs.size())];
    const auto& stated = label == 1 ? rise : fall;
    const auto& denied = label == 1 ? fall : rise;
    std::string text = kSubjects[rng.below(kSubjects.size())];
    switch (kind) {
        case NegationKind::plain: text += " " + stated; break;
        case NegationKind::negated: text += " не " + denied; break;
        case NegationKind::contrast: text += " не " + denied + " а " + stated; break;
    }
    const auto& tail = kTails[rng.below(kTails.size())];
    if (!tail.empty()) {
        text += " " + tail;
    }
    return text;
}

std::vector<std::vector<int>> months_by_label(const std::vector<int>& month_labels) {
    std::vector<std::vector<int>> by(2);
    for (std::size_t i = 0; i < month_labels.size(); ++i) {
        by[static_cast<std::size_t>(month_labels[i])].push_back(static_cast<int>(i));
    }
    return by;
}

std::string pipeline_toml(const FixtureSet& set, const std::string& posts_file) {
    std::string t;
    t += "# generated by make-fixtures (seed " + std::to_string(set.seed) + ", scale " + to_string(set.scale) + ")\n";
    t += "[run]\nseed = " + std::to_string(set.seed) + "\n\n";
    t += "[paths]\ngroups = \"groups.csv\"\nseries = \"series.csv\"\nposts = \"" + posts_file + "\"\n";
    return t;
}

}  // namespace

Scale parse_scale(std::string_view name) {
    if (name == "small") {
        return Scale::small;
    }
    if (name == "standard") {
        return Scale::standard;
    }
    throw UsageError("unknown fixture scale '" + std::string(name) + "' (expected small or standard)");
}

const char* to_string(Scale scale) noexcept { return scale == Scale::small ? "small" : "standard"; }

Sizes sizes_for(Scale scale) noexcept {
    return scale == Scale::small ? Sizes{2000, 600, 600} : Sizes{10000, 2000, 1500};
}

const char* to_string(NegationKind kind) noexcept {
    switch (kind) {
        case NegationKind::plain: return "plain";
        case NegationKind::negated: return "negated";
        case NegationKind::contrast: return "contrast";
    }
    return "?";
}

double bow_macro_f1_ceiling(double contrast_fraction) noexcept { return 1.0 - contrast_fraction / 2.0; }

FixtureSet generate(std::uint64_t seed, Scale scale) {
    const Sizes sz = sizes_for(scale);
    FixtureSet set;
    set.seed = seed;
    set.scale = scale;
    set.groups = make_groups(seed, sz.groups);

    auto planted = make_series(seed);
    set.series = std::move(planted.series);
    set.planted = std::move(planted.breakpoints);
    set.month_labels = labeler::assign_labels(set.series, set.planted).labels;

    std::vector<std::string> host_groups;
    for (const auto& g : corpus::filter_groups(set.groups, {})) {
        host_groups.push_back(g.group_id);
    }
    std::sort(host_groups.begin(), host_groups.end());
    if (host_groups.empty()) {
        host_groups.push_back("g_edge_2000_20pct");
    }

    Rng post_rng = Rng::derive(seed, 0x9057);
    const auto n_months = set.series.size();
    for (std::size_t i = 0; i < sz.posts; ++i) {
        PostRecord p;
        p.post_id = pad_id("p", i + 1, 6);
        p.group_id = host_groups[post_rng.below(host_groups.size())];
        const auto m = post_rng.below(n_months);
        p.month = set.series.month_at(m);
        const int label = set.month_labels[m];
        p.text = main_post_text(post_rng, label);
        set.posts.push_back(std::move(p));
        set.post_labels.push_back(label);
    }

    // Negation suite: exact per-kind counts, half of each kind per label, then shuffled.
    const auto by_label = months_by_label(set.month_labels);
    const std::size_t n = sz.negation_posts;
    const auto n_plain = static_cast<std::size_t>(std::llround(set.negation.plain_fraction * static_cast<double>(n)));
    const auto n_negated =
        static_cast<std::size_t>(std::llround(set.negation.negated_fraction * static_cast<double>(n)));
    const std::size_t n_contrast = n - n_plain - n_negated;
    set.negation.contrast_fraction = static_cast<double>(n_contrast) / static_cast<double>(n);
    set.negation.plain_fraction = static_cast<double>(n_plain) / static_cast<double>(n);
    set.negation.negated_fraction = static_cast<double>(n_negated) / static_cast<double>(n);
    set.negation.bow_macro_f1_ceiling = bow_macro_f1_ceiling(set.negation.contrast_fraction);

    std::vector<std::pair<NegationKind, int>> plan;
    for (auto [kind, count] : {std::pair{NegationKind::plain, n_plain}, std::pair{NegationKind::negated, n_negated},
                               std::pair{NegationKind::contrast, n_contrast}}) {
        for (std::size_t k = 0; k < count; ++k) {
            plan.emplace_back(kind, static_cast<int>(k % 2));
        }
    }
    Rng neg_rng = Rng::derive(seed, 0x4E67);
    neg_rng.shuffle(plan);
    for (std::size_t i = 0; i < plan.size(); ++i) {
        const auto [kind, label] = plan[i];
        PostRecord p;
        p.post_id = pad_id("n", i + 1, 6);
        p.group_id = host_groups[neg_rng.below(host_groups.size())];
        const auto& months = by_label[static_cast<std::size_t>(label)];
        p.month = set.series.month_at(static_cast<std::size_t>(months[neg_rng.below(months.size())]));
        p.text = negation_text(neg_rng, kind, label);
        set.negation_posts.push_back(std::move(p));
        set.negation_labels.push_back(label);
        set.negation_kinds.push_back(kind);
    }
    return set;
}

void write(const FixtureSet& set, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_file_atomic(dir / "groups.csv", corpus::groups_to_csv(set.groups));
    write_file_atomic(dir / "series.csv", labeler::series_to_csv(set.series));
    write_file_atomic(dir / "planted_breakpoints.csv", labeler::breakpoints_to_csv(set.planted, set.series));

    std::string posts;
    for (const auto& p : set.posts) {
        posts += corpus::post_to_json_line(p) + "\n";
    }
    write_file_atomic(dir / "posts.jsonl", posts);

    std::string neg;
    std::string kinds = "post_id,kind,label\n";
    for (std::size_t i = 0; i < set.negation_posts.size(); ++i) {
        neg += corpus::post_to_json_line(set.negation_posts[i]) + "\n";
        kinds += set.negation_posts[i].post_id + "," + to_string(set.negation_kinds[i]) + "," +
                 std::to_string(set.negation_labels[i]) + "\n";
    }
    write_file_atomic(dir / "negation.jsonl", neg);
    write_file_atomic(dir / "negation_kinds.csv", kinds);

    nlohmann::ordered_json truth;
    truth["seed"] = set.seed;
    truth["scale"] = to_string(set.scale);
    truth["groups"] = set.groups.size();
    auto bps = nlohmann::ordered_json::array();
    for (const auto& b : set.planted) {
        bps.push_back({{"index", b.index}, {"month", b.month.str()}, {"kind", labeler::to_string(b.kind)}});
    }
    truth["planted_breakpoints"] = std::move(bps);
    truth["posts"] = set.posts.size();
    std::size_t rising = 0;
    for (int y : set.post_labels) {
        rising += static_cast<std::size_t>(y);
    }
    truth["posts_class1_share"] = static_cast<double>(rising) / static_cast<double>(std::max<std::size_t>(1, set.posts.size()));
    nlohmann::ordered_json neg_truth;
    neg_truth["docs"] = set.negation_posts.size();
    neg_truth["plain_fraction"] = set.negation.plain_fraction;
    neg_truth["negated_fraction"] = set.negation.negated_fraction;
    neg_truth["contrast_fraction"] = set.negation.contrast_fraction;
    neg_truth["bow_macro_f1_ceiling"] = set.negation.bow_macro_f1_ceiling;
    truth["negation"] = std::move(neg_truth);
    write_file_atomic(dir / "fixture_truth.json", truth.dump(2) + "\n");

    write_file_atomic(dir / "pipeline.toml", pipeline_toml(set, "posts.jsonl"));
    write_file_atomic(dir / "negation.toml", pipeline_toml(set, "negation.jsonl"));
}

}  // namespace inflacast::fixtures
