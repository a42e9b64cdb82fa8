#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "inflacast/common.hpp"

namespace inflacast::corpus {

struct GroupRecord {
    std::string group_id;
    std::uint64_t total_members = 0;
    std::uint64_t regional_members = 0;
    bool available = true;  // false: deleted or closed group with unknown size
};

struct PostRecord {
    std::string post_id;
    std::string group_id;
    std::string text;
    Month month;
};

struct FilterConfig {
    std::uint64_t min_members = 2000;
    double min_share_pct = 20.0;

    void validate() const;
};

/// Percentage of a group's members registered in the region: 100 * regional / total.
/// Throws NotComputable for unavailable or empty groups.
double relative_representation(const GroupRecord& g);

/// True when the share can be computed (available with at least one member).
bool share_computable(const GroupRecord& g) noexcept;

/// Available groups passing both inclusive thresholds, sorted by share descending
/// and then group_id ascending.
std::vector<GroupRecord> filter_groups(const std::vector<GroupRecord>& groups, const FilterConfig& cfg);

struct Histogram {
    std::vector<double> edges;        // bins + 1 edges over [0, 100]
    std::vector<std::uint64_t> counts;
    std::vector<double> log_counts;   // log10(count + 1); filled only for the log view
    bool log_scale = false;

    std::uint64_t total() const;
    std::string to_csv() const;
};

/// Histogram of relative representation over [0, 100]. Shares of exactly 100
/// land in the last bin. Groups without a computable share are skipped.
Histogram share_histogram(const std::vector<GroupRecord>& groups, int bins = 100, bool log_scale = false);

struct SweepRow {
    std::uint64_t threshold = 0;
    std::size_t surviving = 0;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    /// (max surviving - min surviving) / max surviving over the sweep; 0 when nothing survives.
    double max_relative_change = 0.0;

    std::string to_csv() const;
};

/// Re-run filter_groups at `steps` evenly spaced member thresholds in [lo, hi]
/// (rounded to the nearest integer) keeping the share threshold fixed.
SweepResult robustness_sweep(const std::vector<GroupRecord>& groups, std::uint64_t lo, std::uint64_t hi, int steps,
                             double min_share_pct = FilterConfig{}.min_share_pct);

enum class IngestMode {
    strict,   // first malformed line aborts with its line number
    lenient,  // malformed lines are skipped and reported
};

struct IngestReport {
    std::vector<PostRecord> posts;
    std::vector<std::size_t> malformed_lines;  // 1-based
    std::size_t out_of_window = 0;
    std::size_t empty_dropped = 0;
    std::size_t duplicates = 0;
};

/// Parse one line-delimited JSON post. Throws ParseError on malformed input.
PostRecord parse_post_line(std::string_view line, std::size_t line_no = 0);

std::string post_to_json_line(const PostRecord& p);

IngestReport ingest_posts(const std::filesystem::path& path, const MonthRange& window = {}, bool keep_empty = false,
                          IngestMode mode = IngestMode::strict);

std::vector<GroupRecord> read_groups_csv(const std::filesystem::path& path);
std::string groups_to_csv(const std::vector<GroupRecord>& groups, bool with_share = false);

}  // namespace inflacast::corpus
