#include "inflacast/svg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "inflacast/common.hpp"

namespace inflacast::svg {

namespace {

constexpr double kWidth = 720;
constexpr double kHeight = 420;
constexpr double kLeft = 70;
constexpr double kRight = 20;
constexpr double kTop = 40;
constexpr double kBottom = 60;

std::string esc(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string num(double v) { return format_fixed(v, 2); }

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();

    void add(double v) {
        if (std::isfinite(v)) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    void finish() {
        if (!std::isfinite(lo)) {
            lo = 0.0;
            hi = 1.0;
        }
        if (hi <= lo) {
            hi = lo + 1.0;
        }
    }
};

class Frame {
public:
    Frame(const std::string& title, const std::string& x_label, const std::string& y_label, Range xr, Range yr)
        : xr_(xr), yr_(yr) {
        out_ += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) +
                "\" viewBox=\"0 0 " + num(kWidth) + " " + num(kHeight) + "\" font-family=\"sans-serif\">\n";
        out_ += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
        out_ += "<text x=\"" + num(kWidth / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" + esc(title) +
                "</text>\n";
        const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
        out_ += "<line x1=\"" + num(x0) + "\" y1=\"" + num(y0) + "\" x2=\"" + num(x1) + "\" y2=\"" + num(y0) +
                "\" stroke=\"black\"/>\n";
        out_ += "<line x1=\"" + num(x0) + "\" y1=\"" + num(y0) + "\" x2=\"" + num(x0) + "\" y2=\"" + num(y1) +
                "\" stroke=\"black\"/>\n";
        out_ += "<text x=\"" + num((x0 + x1) / 2) + "\" y=\"" + num(kHeight - 15) +
                "\" text-anchor=\"middle\" font-size=\"12\">" + esc(x_label) + "</text>\n";
        out_ += "<text x=\"15\" y=\"" + num((y0 + y1) / 2) + "\" text-anchor=\"middle\" font-size=\"12\" " +
                "transform=\"rotate(-90 15 " + num((y0 + y1) / 2) + ")\">" + esc(y_label) + "</text>\n";
        out_ += "<text x=\"" + num(x0 - 5) + "\" y=\"" + num(y0) + "\" text-anchor=\"end\" font-size=\"10\">" +
                format_double(yr_.lo) + "</text>\n";
        out_ += "<text x=\"" + num(x0 - 5) + "\" y=\"" + num(y1 + 4) + "\" text-anchor=\"end\" font-size=\"10\">" +
                format_double(yr_.hi) + "</text>\n";
    }

    double px(double x) const { return kLeft + (x - xr_.lo) / (xr_.hi - xr_.lo) * (kWidth - kLeft - kRight); }
    double py(double y) const { return kHeight - kBottom - (y - yr_.lo) / (yr_.hi - yr_.lo) * (kHeight - kTop - kBottom); }

    void x_ticks() {
        const double y0 = kHeight - kBottom;
        out_ += "<text x=\"" + num(kLeft) + "\" y=\"" + num(y0 + 15) + "\" text-anchor=\"middle\" font-size=\"10\">" +
                format_double(xr_.lo) + "</text>\n";
        out_ += "<text x=\"" + num(kWidth - kRight) + "\" y=\"" + num(y0 + 15) +
                "\" text-anchor=\"middle\" font-size=\"10\">" + format_double(xr_.hi) + "</text>\n";
    }

    std::string& body() { return out_; }
    std::string finish() { return out_ + "</svg>\n"; }

private:
    Range xr_;
    Range yr_;
    std::string out_;
};

}  // namespace

std::string line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                       const std::vector<Series>& series, const std::vector<Marker>& markers) {
    Range xr, yr;
    for (const auto& s : series) {
        for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
            if (std::isfinite(s.x[i]) && std::isfinite(s.y[i])) {
                xr.add(s.x[i]);
                yr.add(s.y[i]);
            }
        }
    }
    xr.finish();
    yr.finish();
    Frame f(title, x_label, y_label, xr, yr);
    f.x_ticks();
    for (const auto& m : markers) {
        f.body() += "<line x1=\"" + num(f.px(m.x)) + "\" y1=\"" + num(kTop) + "\" x2=\"" + num(f.px(m.x)) +
                    "\" y2=\"" + num(kHeight - kBottom) + "\" stroke=\"" + m.color + "\" stroke-dasharray=\"4 3\"/>\n";
    }
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        std::string pts;
        for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) {
                continue;
            }
            pts += (pts.empty() ? "" : " ") + num(f.px(s.x[i])) + "," + num(f.py(s.y[i]));
        }
        f.body() += "<polyline fill=\"none\" stroke=\"" + s.color + "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
        const double ly = kTop + 14.0 * static_cast<double>(k);
        f.body() += "<rect x=\"" + num(kWidth - 170) + "\" y=\"" + num(ly - 8) + "\" width=\"10\" height=\"10\" fill=\"" +
                    s.color + "\"/>\n";
        f.body() += "<text x=\"" + num(kWidth - 155) + "\" y=\"" + num(ly + 1) + "\" font-size=\"11\">" + esc(s.name) +
                    "</text>\n";
    }
    return f.finish();
}

std::string bar_chart(const std::string& title, const std::string& y_label, const std::vector<std::string>& labels,
                      const std::vector<double>& values) {
    Range xr{0.0, static_cast<double>(std::max<std::size_t>(1, values.size()))};
    Range yr{0.0, 0.0};
    for (double v : values) {
        yr.add(v);
    }
    yr.lo = std::min(yr.lo, 0.0);
    yr.finish();
    Frame f(title, "", y_label, xr, yr);
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double x0 = f.px(static_cast<double>(i) + 0.1);
        const double x1 = f.px(static_cast<double>(i) + 0.9);
        const double top = f.py(std::max(values[i], 0.0));
        const double bottom = f.py(std::min(values[i], 0.0));
        f.body() += "<rect x=\"" + num(x0) + "\" y=\"" + num(top) + "\" width=\"" + num(x1 - x0) + "\" height=\"" +
                    num(bottom - top) + "\" fill=\"#1f77b4\"/>\n";
        f.body() += "<text x=\"" + num((x0 + x1) / 2) + "\" y=\"" + num(top - 4) +
                    "\" text-anchor=\"middle\" font-size=\"10\">" + format_fixed(values[i], 3) + "</text>\n";
        if (i < labels.size()) {
            f.body() += "<text x=\"" + num((x0 + x1) / 2) + "\" y=\"" + num(kHeight - kBottom + 15) +
                        "\" text-anchor=\"middle\" font-size=\"10\">" + esc(labels[i]) + "</text>\n";
        }
    }
    return f.finish();
}

std::string histogram(const std::string& title, const std::string& x_label, const std::string& y_label,
                      const std::vector<double>& edges, const std::vector<double>& heights) {
    if (edges.size() != heights.size() + 1) {
        throw Error("histogram needs one more edge than bins");
    }
    Range xr, yr{0.0, 0.0};
    for (double e : edges) {
        xr.add(e);
    }
    for (double h : heights) {
        yr.add(h);
    }
    xr.finish();
    yr.finish();
    Frame f(title, x_label, y_label, xr, yr);
    f.x_ticks();
    for (std::size_t i = 0; i < heights.size(); ++i) {
        if (heights[i] <= 0.0) {
            continue;
        }
        const double x0 = f.px(edges[i]);
        const double x1 = f.px(edges[i + 1]);
        const double top = f.py(heights[i]);
        f.body() += "<rect x=\"" + num(x0) + "\" y=\"" + num(top) + "\" width=\"" + num(x1 - x0) + "\" height=\"" +
                    num(f.py(0.0) - top) + "\" fill=\"#1f77b4\" stroke=\"white\" stroke-width=\"0.3\"/>\n";
    }
    return f.finish();
}

}  // namespace inflacast::svg
