#include "inflacast/labeler.hpp"

#include <cmath>
#include <numeric>
#include <optional>
#include <sstream>
#include <unordered_map>

namespace inflacast::labeler {

double InflationSeries::mean() const {
    if (values.empty()) {
        throw Error("mean of an empty series");
    }
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

const char* to_string(ExtremumKind kind) noexcept { return kind == ExtremumKind::maximum ? "maximum" : "minimum"; }

void ExtremaConfig::validate() const {
    if (order < 1) {
        throw UsageError("extrema order must be >= 1");
    }
    if (merge_window_months < 0) {
        throw UsageError("merge_window_months must be >= 0");
    }
}

std::vector<Breakpoint> find_raw_extrema(const InflationSeries& s, int order) {
    if (order < 1) {
        throw UsageError("extrema order must be >= 1");
    }
    const auto n = s.size();
    const auto w = static_cast<std::size_t>(order);
    if (n <= 2 * w) {
        throw Error("series of length " + std::to_string(n) + " is too short for order " + std::to_string(order));
    }
    std::vector<Breakpoint> out;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const std::size_t lo = i >= w ? i - w : 0;
        const std::size_t hi = std::min(n - 1, i + w);
        bool is_max = true;
        bool is_min = true;
        for (std::size_t j = lo; j <= hi && (is_max || is_min); ++j) {
            if (j == i) {
                continue;
            }
            is_max = is_max && s.values[i] > s.values[j];
            is_min = is_min && s.values[i] < s.values[j];
        }
        if (is_max || is_min) {
            out.push_back({i, s.month_at(i), is_max ? ExtremumKind::maximum : ExtremumKind::minimum});
        }
    }
    return out;
}

std::vector<Breakpoint> smooth_extrema(const std::vector<Breakpoint>& raw, const InflationSeries& s,
                                       const ExtremaConfig& cfg) {
    cfg.validate();
    for (std::size_t k = 0; k < raw.size(); ++k) {
        if (raw[k].index >= s.size()) {
            throw Error("breakpoint index outside the series");
        }
        if (k > 0 && raw[k].index <= raw[k - 1].index) {
            throw Error("breakpoints must be strictly increasing by index");
        }
    }
    std::vector<Breakpoint> bps = raw;
    if (bps.empty()) {
        return bps;
    }
    const double mean = s.mean();
    auto deviation = [&](const Breakpoint& b) { return std::abs(s.values[b.index] - mean); };

    const auto window = static_cast<std::size_t>(cfg.merge_window_months);
    for (;;) {
        std::size_t k = 1;
        while (k < bps.size() && bps[k].index - bps[k - 1].index >= window) {
            ++k;
        }
        if (k >= bps.size()) {
            break;
        }
        // Keep the more pronounced of the pair; the earlier one wins ties.
        if (deviation(bps[k]) > deviation(bps[k - 1])) {
            bps.erase(bps.begin() + static_cast<std::ptrdiff_t>(k - 1));
        } else {
            bps.erase(bps.begin() + static_cast<std::ptrdiff_t>(k));
        }
    }

    std::vector<Breakpoint> alternating;
    for (const auto& b : bps) {
        if (!alternating.empty() && alternating.back().kind == b.kind) {
            const double current = s.values[alternating.back().index];
            const double candidate = s.values[b.index];
            const bool more_extreme = b.kind == ExtremumKind::maximum ? candidate > current : candidate < current;
            if (more_extreme) {
                alternating.back() = b;
            }
            continue;
        }
        alternating.push_back(b);
    }
    return alternating;
}

std::vector<Breakpoint> detect_breakpoints(const InflationSeries& s, const ExtremaConfig& cfg) {
    cfg.validate();
    return smooth_extrema(find_raw_extrema(s, cfg.order), s, cfg);
}

namespace {

int direction_into(ExtremumKind kind) { return kind == ExtremumKind::maximum ? 1 : 0; }

}  // namespace

TrendLabeling assign_labels(const InflationSeries& s, const std::vector<Breakpoint>& bps) {
    if (bps.empty()) {
        throw Error("no breakpoints: trend direction is undefined");
    }
    for (std::size_t k = 0; k < bps.size(); ++k) {
        if (bps[k].index >= s.size()) {
            throw Error("breakpoint index outside the series");
        }
        if (k > 0 && (bps[k].index <= bps[k - 1].index || bps[k].kind == bps[k - 1].kind)) {
            throw Error("breakpoints must be sorted and alternate in kind");
        }
    }
    TrendLabeling tl;
    tl.start_month = s.start_month;
    tl.breakpoints = bps;
    tl.labels.assign(s.size(), 0);
    std::size_t begin = 0;
    for (const auto& b : bps) {
        for (std::size_t i = begin; i <= b.index; ++i) {
            tl.labels[i] = direction_into(b.kind);
        }
        begin = b.index + 1;
    }
    const int tail = 1 - direction_into(bps.back().kind);
    for (std::size_t i = begin; i < s.size(); ++i) {
        tl.labels[i] = tail;
    }
    return tl;
}

std::vector<int> TrendLabeling::segment_ids() const {
    std::vector<int> ids(labels.size(), 0);
    int segment = 0;
    std::size_t next = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        ids[i] = segment;
        if (next < breakpoints.size() && breakpoints[next].index == i) {
            ++segment;
            ++next;
        }
    }
    return ids;
}

bool TrendLabeling::covers(const Month& m) const {
    const int offset = m.index() - start_month.index();
    return offset >= 0 && static_cast<std::size_t>(offset) < labels.size();
}

int TrendLabeling::label_for(const Month& m) const {
    if (!covers(m)) {
        throw Error("month " + m.str() + " is outside the labeled range");
    }
    return labels[static_cast<std::size_t>(m.index() - start_month.index())];
}

std::string TrendLabeling::to_csv() const {
    std::string out = "month,label,segment_id,breakpoint_kind_if_any\n";
    const auto ids = segment_ids();
    std::size_t next = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        std::string kind;
        if (next < breakpoints.size() && breakpoints[next].index == i) {
            kind = to_string(breakpoints[next].kind);
            ++next;
        }
        out += start_month.plus(static_cast<int>(i)).str() + "," + std::to_string(labels[i]) + "," +
               std::to_string(ids[i]) + "," + kind + "\n";
    }
    return out;
}

std::vector<LabeledPost> label_posts(const std::vector<corpus::PostRecord>& posts, const TrendLabeling& tl) {
    std::vector<LabeledPost> out;
    out.reserve(posts.size());
    for (const auto& p : posts) {
        if (!tl.covers(p.month)) {
            throw Error("post " + p.post_id + " has unlabeled month " + p.month.str());
        }
        out.push_back({p, tl.label_for(p.month)});
    }
    return out;
}

InflationSeries parse_series_csv(std::string_view content) {
    std::istringstream in{std::string(content)};
    std::string line;
    std::size_t line_no = 0;
    InflationSeries s;
    bool header_seen = false;
    std::optional<Month> previous;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty() || trim(line).front() == '#') {
            continue;
        }
        auto fields = csv::split_line(line);
        if (!header_seen) {
            header_seen = true;
            if (fields.size() >= 2 && trim(fields[0]) == "month" && trim(fields[1]) == "value_pct") {
                continue;
            }
            throw ParseError("series header must be month,value_pct", line_no);
        }
        if (fields.size() < 2) {
            throw ParseError("expected month,value_pct", line_no);
        }
        Month m;
        double v = 0.0;
        try {
            m = Month::parse(fields[0]);
            // fedstat exports use a decimal comma; accept it when the field was quoted.
            std::string value(trim(fields[1]));
            for (auto& c : value) {
                if (c == ',') {
                    c = '.';
                }
            }
            v = parse_double(value);
        } catch (const ParseError& e) {
            throw ParseError(e.what(), line_no);
        }
        if (previous && m.index() != previous->index() + 1) {
            throw ParseError("months must be consecutive (" + previous->str() + " then " + m.str() + ")", line_no);
        }
        if (!previous) {
            s.start_month = m;
        }
        previous = m;
        s.values.push_back(v);
    }
    if (s.values.empty()) {
        throw ParseError("series has no rows");
    }
    return s;
}

InflationSeries read_series_csv(const std::filesystem::path& path) { return parse_series_csv(read_file(path)); }

std::string series_to_csv(const InflationSeries& s) {
    std::string out = "month,value_pct\n";
    for (std::size_t i = 0; i < s.size(); ++i) {
        out += s.month_at(i).str() + "," + format_double(s.values[i]) + "\n";
    }
    return out;
}

std::string breakpoints_to_csv(const std::vector<Breakpoint>& bps, const InflationSeries& s) {
    std::string out = "index,month,kind,value_pct\n";
    for (const auto& b : bps) {
        out += std::to_string(b.index) + "," + b.month.str() + "," + to_string(b.kind) + "," +
               format_double(s.values[b.index]) + "\n";
    }
    return out;
}

}  // namespace inflacast::labeler
