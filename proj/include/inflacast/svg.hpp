#pragma once

#include <string>
#include <vector>

namespace inflacast::svg {

struct Series {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
    std::string color = "#1f77b4";
};

/// Vertical guide lines drawn behind the series, e.g. breakpoints.
struct Marker {
    double x = 0.0;
    std::string color = "#999999";
};

/// Polyline chart with axes, min/max tick labels and a legend. Non-finite points are skipped.
std::string line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                       const std::vector<Series>& series, const std::vector<Marker>& markers = {});

/// One bar per label.
std::string bar_chart(const std::string& title, const std::string& y_label, const std::vector<std::string>& labels,
                      const std::vector<double>& values);

/// Adjacent bars over bin edges (edges.size() == heights.size() + 1).
std::string histogram(const std::string& title, const std::string& x_label, const std::string& y_label,
                      const std::vector<double>& edges, const std::vector<double>& heights);

}  // namespace inflacast::svg
