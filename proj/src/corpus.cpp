#include "inflacast/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_set>

#include "json.hpp"

namespace inflacast::corpus {

void FilterConfig::validate() const {
    if (min_members < 1) {
        throw UsageError("min_members must be >= 1");
    }
    if (!(min_share_pct >= 0.0 && min_share_pct <= 100.0)) {
        throw UsageError("min_share_pct must be within [0, 100]");
    }
}

bool share_computable(const GroupRecord& g) noexcept { return g.available && g.total_members > 0; }

double relative_representation(const GroupRecord& g) {
    if (!g.available) {
        throw NotComputable("group " + g.group_id + " is unavailable");
    }
    if (g.total_members == 0) {
        throw NotComputable("group " + g.group_id + " has no members");
    }
    return 100.0 * static_cast<double>(g.regional_members) / static_cast<double>(g.total_members);
}

std::vector<GroupRecord> filter_groups(const std::vector<GroupRecord>& groups, const FilterConfig& cfg) {
    cfg.validate();
    std::vector<std::pair<double, const GroupRecord*>> kept;
    for (const auto& g : groups) {
        if (!share_computable(g) || g.total_members < cfg.min_members) {
            continue;
        }
        const double share = relative_representation(g);
        if (share >= cfg.min_share_pct) {
            kept.emplace_back(share, &g);
        }
    }
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) {
            return a.first > b.first;
        }
        return a.second->group_id < b.second->group_id;
    });
    std::vector<GroupRecord> out;
    out.reserve(kept.size());
    for (const auto& [share, g] : kept) {
        out.push_back(*g);
    }
    return out;
}

std::uint64_t Histogram::total() const {
    std::uint64_t sum = 0;
    for (auto c : counts) {
        sum += c;
    }
    return sum;
}

std::string Histogram::to_csv() const {
    std::string out = log_scale ? "bin_lo,bin_hi,count,log10_count_plus_1\n" : "bin_lo,bin_hi,count\n";
    for (std::size_t i = 0; i < counts.size(); ++i) {
        out += format_double(edges[i]) + "," + format_double(edges[i + 1]) + "," + std::to_string(counts[i]);
        if (log_scale) {
            out += "," + format_fixed(log_counts[i], 6);
        }
        out += "\n";
    }
    return out;
}

Histogram share_histogram(const std::vector<GroupRecord>& groups, int bins, bool log_scale) {
    if (bins < 1) {
        throw UsageError("histogram needs at least one bin");
    }
    Histogram h;
    h.log_scale = log_scale;
    h.edges.resize(static_cast<std::size_t>(bins) + 1);
    for (int i = 0; i <= bins; ++i) {
        h.edges[static_cast<std::size_t>(i)] = 100.0 * i / bins;
    }
    h.counts.assign(static_cast<std::size_t>(bins), 0);
    for (const auto& g : groups) {
        if (!share_computable(g)) {
            continue;
        }
        const double share = relative_representation(g);
        auto bin = static_cast<long>(std::floor(share * bins / 100.0));
        bin = std::clamp<long>(bin, 0, bins - 1);
        ++h.counts[static_cast<std::size_t>(bin)];
    }
    if (log_scale) {
        h.log_counts.reserve(h.counts.size());
        for (auto c : h.counts) {
            h.log_counts.push_back(std::log10(static_cast<double>(c) + 1.0));
        }
    }
    return h;
}

std::string SweepResult::to_csv() const {
    std::string out = "threshold,surviving_count\n";
    for (const auto& r : rows) {
        out += std::to_string(r.threshold) + "," + std::to_string(r.surviving) + "\n";
    }
    out += "# max_relative_change," + format_fixed(max_relative_change, 6) + "\n";
    return out;
}

SweepResult robustness_sweep(const std::vector<GroupRecord>& groups, std::uint64_t lo, std::uint64_t hi, int steps,
                             double min_share_pct) {
    if (lo > hi) {
        throw UsageError("robustness sweep needs lo <= hi");
    }
    if (steps < 2 && lo != hi) {
        throw UsageError("robustness sweep needs at least two steps");
    }
    std::vector<std::uint64_t> thresholds;
    if (lo == hi) {
        thresholds.push_back(lo);
    } else {
        for (int k = 0; k < steps; ++k) {
            const double t = static_cast<double>(lo) + static_cast<double>(hi - lo) * k / (steps - 1);
            const auto rounded = static_cast<std::uint64_t>(std::llround(t));
            if (thresholds.empty() || thresholds.back() != rounded) {
                thresholds.push_back(rounded);
            }
        }
    }

    SweepResult result;
    for (auto threshold : thresholds) {
        FilterConfig cfg{std::max<std::uint64_t>(threshold, 1), min_share_pct};
        result.rows.push_back({threshold, filter_groups(groups, cfg).size()});
    }
    std::size_t max_count = 0;
    std::size_t min_count = result.rows.front().surviving;
    for (const auto& r : result.rows) {
        max_count = std::max(max_count, r.surviving);
        min_count = std::min(min_count, r.surviving);
    }
    result.max_relative_change =
        max_count == 0 ? 0.0 : static_cast<double>(max_count - min_count) / static_cast<double>(max_count);
    return result;
}

PostRecord parse_post_line(std::string_view line, std::size_t line_no) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("malformed record: ") + e.what(), line_no);
    }
    if (!j.is_object()) {
        throw ParseError("record is not an object", line_no);
    }
    auto field = [&](const char* key) -> std::string {
        auto it = j.find(key);
        if (it == j.end() || !it->is_string()) {
            throw ParseError(std::string("missing or non-string field '") + key + "'", line_no);
        }
        return it->get<std::string>();
    };
    PostRecord p;
    p.post_id = field("post_id");
    p.group_id = field("group_id");
    p.text = field("text");
    try {
        p.month = Month::parse(field("month"));
    } catch (const ParseError& e) {
        throw ParseError(e.what(), line_no);
    }
    return p;
}

std::string post_to_json_line(const PostRecord& p) {
    // Fixed key order keeps output byte-stable.
    nlohmann::ordered_json j;
    j["post_id"] = p.post_id;
    j["group_id"] = p.group_id;
    j["text"] = p.text;
    j["month"] = p.month.str();
    return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

IngestReport ingest_posts(const std::filesystem::path& path, const MonthRange& window, bool keep_empty,
                          IngestMode mode) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open posts file '" + path.string() + "'");
    }
    IngestReport report;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        PostRecord p;
        try {
            p = parse_post_line(line, line_no);
        } catch (const ParseError&) {
            if (mode == IngestMode::strict) {
                throw;
            }
            report.malformed_lines.push_back(line_no);
            continue;
        }
        if (!window.contains(p.month)) {
            ++report.out_of_window;
            continue;
        }
        if (p.text.empty() && !keep_empty) {
            ++report.empty_dropped;
            continue;
        }
        if (!seen.insert(p.post_id).second) {
            ++report.duplicates;
            continue;
        }
        report.posts.push_back(std::move(p));
    }
    return report;
}

std::vector<GroupRecord> read_groups_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open groups file '" + path.string() + "'");
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw ParseError("groups file is empty", 1);
    }
    const auto header = csv::split_line(line);
    const std::vector<std::string> expected{"group_id", "total_members", "regional_members", "available"};
    if (header.size() < expected.size() || !std::equal(expected.begin(), expected.end(), header.begin())) {
        throw ParseError("groups header must be group_id,total_members,regional_members,available", 1);
    }
    std::vector<GroupRecord> groups;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        std::vector<std::string> f;
        try {
            f = csv::split_line(line);
        } catch (const ParseError& e) {
            throw ParseError(e.what(), line_no);
        }
        if (f.size() < 4) {
            throw ParseError("expected 4 fields", line_no);
        }
        GroupRecord g;
        g.group_id = f[0];
        const auto avail = std::string(trim(f[3]));
        if (avail == "true" || avail == "1") {
            g.available = true;
        } else if (avail == "false" || avail == "0") {
            g.available = false;
        } else {
            throw ParseError("available must be true/false", line_no);
        }
        try {
            // Unavailable groups may carry empty counts.
            const auto total = trim(f[1]);
            const auto regional = trim(f[2]);
            const long long t = total.empty() ? 0 : parse_int(total);
            const long long r = regional.empty() ? 0 : parse_int(regional);
            if (t < 0 || r < 0) {
                throw ParseError("member counts must be non-negative");
            }
            g.total_members = static_cast<std::uint64_t>(t);
            g.regional_members = static_cast<std::uint64_t>(r);
        } catch (const ParseError& e) {
            throw ParseError(e.what(), line_no);
        }
        if (g.available && g.regional_members > g.total_members) {
            throw ParseError("regional_members exceeds total_members", line_no);
        }
        groups.push_back(std::move(g));
    }
    return groups;
}

std::string groups_to_csv(const std::vector<GroupRecord>& groups, bool with_share) {
    std::string out = with_share ? "group_id,total_members,regional_members,available,share_pct\n"
                                 : "group_id,total_members,regional_members,available\n";
    for (const auto& g : groups) {
        out += csv::escape(g.group_id) + "," + std::to_string(g.total_members) + "," +
               std::to_string(g.regional_members) + "," + (g.available ? "true" : "false");
        if (with_share) {
            out += "," + (share_computable(g) ? format_fixed(relative_representation(g), 4) : std::string());
        }
        out += "\n";
    }
    return out;
}

}  // namespace inflacast::corpus
