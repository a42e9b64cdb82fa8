#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "inflacast/common.hpp"
#include "inflacast/corpus.hpp"

namespace inflacast::labeler {

/// Monthly inflation readings; values[i] belongs to start_month + i.
struct InflationSeries {
    Month start_month;
    std::vector<double> values;

    std::size_t size() const noexcept { return values.size(); }
    Month month_at(std::size_t index) const { return start_month.plus(static_cast<int>(index)); }
    double mean() const;
};

enum class ExtremumKind { minimum, maximum };

const char* to_string(ExtremumKind kind) noexcept;

struct Breakpoint {
    std::size_t index = 0;
    Month month;
    ExtremumKind kind = ExtremumKind::maximum;

    friend bool operator==(const Breakpoint&, const Breakpoint&) = default;
};

struct ExtremaConfig {
    int order = 1;                // half-width of the comparison window
    int merge_window_months = 3;  // consecutive breakpoints must be at least this far apart

    void validate() const;
};

struct TrendLabeling {
    std::vector<int> labels;  // per series index, 1 = rising, 0 = falling
    std::vector<Breakpoint> breakpoints;
    Month start_month;

    /// Segment k covers (breakpoints[k-1], breakpoints[k]]; the tail after the last breakpoint is segment n.
    std::vector<int> segment_ids() const;
    int label_for(const Month& m) const;
    bool covers(const Month& m) const;
    std::string to_csv() const;
};

/// Strict relative extrema: index i is a maximum iff values[i] exceeds every other
/// value in [i - order, i + order] clipped to the series; endpoints never qualify.
std::vector<Breakpoint> find_raw_extrema(const InflationSeries& s, int order);

/// Drop the less pronounced member (smaller |value - mean|, earlier kept on ties) of the
/// first pair closer than merge_window_months until none remains, then reduce each
/// same-kind run to its most extreme member so kinds alternate.
std::vector<Breakpoint> smooth_extrema(const std::vector<Breakpoint>& raw, const InflationSeries& s,
                                       const ExtremaConfig& cfg);

/// find_raw_extrema followed by smooth_extrema.
std::vector<Breakpoint> detect_breakpoints(const InflationSeries& s, const ExtremaConfig& cfg = {});

/// Label every month by the direction of the segment it belongs to. A breakpoint month belongs
/// to the segment it terminates; months after the last breakpoint take the reversed direction.
TrendLabeling assign_labels(const InflationSeries& s, const std::vector<Breakpoint>& bps);

struct LabeledPost {
    corpus::PostRecord post;
    int label = 0;
};

std::vector<LabeledPost> label_posts(const std::vector<corpus::PostRecord>& posts, const TrendLabeling& tl);

/// Reads `month,value_pct`. Months must be consecutive.
InflationSeries read_series_csv(const std::filesystem::path& path);
InflationSeries parse_series_csv(std::string_view content);
std::string series_to_csv(const InflationSeries& s);

std::string breakpoints_to_csv(const std::vector<Breakpoint>& bps, const InflationSeries& s);

}  // namespace inflacast::labeler
