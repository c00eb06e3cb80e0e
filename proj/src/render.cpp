#include "hexposome/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <stdexcept>

#include "hexposome/analytics.hpp"
#include "hexposome/expometrics.hpp"

namespace hexposome {

namespace {

std::string fixed(double v, int digits = 2) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string compact(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string rgb(int r, int g, int b) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", std::clamp(r, 0, 255), std::clamp(g, 0, 255),
                  std::clamp(b, 0, 255));
    return buf;
}

std::vector<std::string> sequential_ramp(int k) {
    std::vector<std::string> out;
    for (int i = 0; i < k; ++i) {
        const double t = k > 1 ? static_cast<double>(i) / (k - 1) : 1.0;
        out.push_back(rgb(static_cast<int>(std::lround(239.0 + t * (8.0 - 239.0))),
                          static_cast<int>(std::lround(243.0 + t * (48.0 - 243.0))),
                          static_cast<int>(std::lround(255.0 + t * (107.0 - 255.0)))));
    }
    return out;
}

std::vector<std::string> bivariate_ramp() {
    std::vector<std::string> out;
    for (int a = 0; a < 4; ++a) {      // first axis deepens blue
        for (int b = 0; b < 4; ++b) {  // second axis deepens red
            out.push_back(rgb(250 - 58 * b, 250 - 34 * a - 28 * b, 250 - 58 * a));
        }
    }
    return out;
}

constexpr const char* kNoDataFill = "#e0e0e0";

struct Classed {
    std::vector<int> cls;  // -1 marks no data
    std::vector<std::string> palette;
    std::vector<std::string> labels;
};

Classed class_quantile(const std::vector<double>& values, const RenderOptions& opt) {
    std::vector<double> present;
    for (const double v : values) {
        if (!std::isnan(v)) present.push_back(v);
    }
    const auto breaks = quantile_breaks(present, opt.classes);
    Classed out;
    for (const double v : values) {
        if (std::isnan(v)) {
            out.cls.push_back(-1);
            continue;
        }
        int c = 0;
        for (const double b : breaks) {
            if (v >= b) ++c;
        }
        out.cls.push_back(std::min(c, opt.classes - 1));
    }
    out.palette = sequential_ramp(opt.classes);
    for (int i = 0; i < opt.classes; ++i) {
        if (i == 0) {
            out.labels.push_back("< " + compact(breaks.front()));
        } else if (i == opt.classes - 1) {
            out.labels.push_back(">= " + compact(breaks.back()));
        } else {
            out.labels.push_back("[" + compact(breaks[i - 1]) + ", " + compact(breaks[i]) + ")");
        }
    }
    return out;
}

Classed class_ceem(const std::vector<double>& values) {
    Classed out;
    for (const double v : values) {
        if (std::isnan(v)) out.cls.push_back(-1);
        else out.cls.push_back(v > 1.0 ? 1 : 0);
    }
    out.palette = {"#4575b4", "#d73027"};
    out.labels = {"<= 1 (within budget)", "> 1 (exceeds budget)"};
    return out;
}

Classed class_bivariate(const std::vector<double>& a, const std::vector<double>& b) {
    Classed out;
    for (size_t i = 0; i < a.size(); ++i) {
        if (std::isnan(a[i]) || std::isnan(b[i])) {
            out.cls.push_back(-1);
        } else {
            out.cls.push_back(4 * static_cast<int>(classify_aqi(a[i])) +
                              static_cast<int>(classify_aqi(b[i])));
        }
    }
    out.palette = bivariate_ramp();
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            out.labels.push_back(std::string(aqi_label(static_cast<AqiClass>(i))) + " / " +
                                 aqi_label(static_cast<AqiClass>(j)));
        }
    }
    return out;
}

}  // namespace

std::string render_svg(const HexFrame& frame, const GridSpec& g, const RenderOptions& opt) {
    if (!frame.grid_matches(g)) throw std::invalid_argument("frame grid does not match the given grid");
    if (frame.rows.empty()) throw std::invalid_argument("nothing to render: frame is empty");

    std::set<std::string> periods;
    for (const auto& row : frame.rows) periods.insert(row.period);
    if (periods.size() > 1 && opt.period.empty()) {
        throw std::invalid_argument("frame spans " + std::to_string(periods.size()) +
                                    " periods; pass a period filter");
    }
    std::vector<const HexFrame::Row*> rows;
    for (const auto& row : frame.rows) {
        if (opt.period.empty() || row.period == opt.period) rows.push_back(&row);
    }
    if (rows.empty()) throw std::invalid_argument("no rows for period " + opt.period);

    const int vi = frame.variable_index(opt.variable);
    if (vi < 0) throw std::invalid_argument("no variable named " + opt.variable);
    std::vector<double> values;
    for (const auto* row : rows) values.push_back(row->values[vi]);

    Classed classed;
    switch (opt.classing) {
        case Classing::quantile:
            classed = class_quantile(values, opt);
            break;
        case Classing::ceem_threshold:
            classed = class_ceem(values);
            break;
        case Classing::bivariate: {
            const int vj = frame.variable_index(opt.variable2);
            if (vj < 0) throw std::invalid_argument("no variable named " + opt.variable2);
            std::vector<double> second;
            for (const auto* row : rows) second.push_back(row->values[vj]);
            classed = class_bivariate(values, second);
            break;
        }
    }
    if (!opt.palette.empty()) {
        if (opt.palette.size() != classed.palette.size()) {
            throw std::invalid_argument("palette needs " + std::to_string(classed.palette.size()) +
                                        " colors, got " + std::to_string(opt.palette.size()));
        }
        classed.palette = opt.palette;
    }

    std::vector<std::vector<Point>> boundaries;
    double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
    bool first = true;
    for (const auto* row : rows) {
        boundaries.push_back(cell_boundary(row->hex, g));
        for (const Point& p : boundaries.back()) {
            if (first) {
                xmin = xmax = p.x;
                ymin = ymax = p.y;
                first = false;
            } else {
                xmin = std::min(xmin, p.x);
                xmax = std::max(xmax, p.x);
                ymin = std::min(ymin, p.y);
                ymax = std::max(ymax, p.y);
            }
        }
    }

    const double margin = 20.0;
    const double span = std::max(xmax - xmin, ymax - ymin);
    const double scale = span > 0.0 ? 760.0 / span : 1.0;
    const double map_w = (xmax - xmin) * scale + 2 * margin;
    const double map_h = (ymax - ymin) * scale + 2 * margin;
    auto px = [&](double x) { return (x - xmin) * scale + margin; };
    auto py = [&](double y) { return (ymax - y) * scale + margin; };  // svg y grows downward

    bool any_missing = false;
    for (const int c : classed.cls) {
        if (c < 0) any_missing = true;
    }
    const size_t legend_rows = classed.labels.size() + (any_missing ? 1 : 0);
    const double legend_h = 30.0 + 20.0 * static_cast<double>(legend_rows);
    const double total_h = map_h + legend_h;

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fixed(std::max(map_w, 320.0)) +
           "\" height=\"" + fixed(total_h) + "\" viewBox=\"0 0 " + fixed(std::max(map_w, 320.0)) +
           " " + fixed(total_h) + "\">\n";
    svg += "<g stroke=\"#ffffff\" stroke-width=\"0.5\">\n";
    for (size_t i = 0; i < boundaries.size(); ++i) {
        const int c = classed.cls[i];
        const std::string& fill = c < 0 ? kNoDataFill : classed.palette[static_cast<size_t>(c)];
        svg += "<polygon fill=\"" + fill + "\" points=\"";
        for (size_t v = 0; v < boundaries[i].size(); ++v) {
            if (v) svg += ' ';
            svg += fixed(px(boundaries[i][v].x)) + "," + fixed(py(boundaries[i][v].y));
        }
        svg += "\"><title>" + encode_hexid(rows[i]->hex) + "</title></polygon>\n";
    }
    svg += "</g>\n";

    svg += "<g font-family=\"sans-serif\" font-size=\"12\">\n";
    std::string title = opt.variable;
    if (opt.classing == Classing::bivariate) title += " / " + opt.variable2;
    if (!opt.period.empty()) title += " (" + opt.period + ")";
    svg += "<text x=\"" + fixed(margin) + "\" y=\"" + fixed(map_h + 16.0) + "\" font-weight=\"bold\">" +
           title + "</text>\n";
    double ly = map_h + 30.0;
    for (size_t i = 0; i < classed.labels.size(); ++i) {
        svg += "<rect x=\"" + fixed(margin) + "\" y=\"" + fixed(ly) + "\" width=\"14\" height=\"14\" fill=\"" +
               classed.palette[i] + "\"/>\n";
        svg += "<text x=\"" + fixed(margin + 20.0) + "\" y=\"" + fixed(ly + 12.0) + "\">" +
               classed.labels[i] + "</text>\n";
        ly += 20.0;
    }
    if (any_missing) {
        svg += "<rect x=\"" + fixed(margin) + "\" y=\"" + fixed(ly) + "\" width=\"14\" height=\"14\" fill=\"" +
               std::string(kNoDataFill) + "\"/>\n";
        svg += "<text x=\"" + fixed(margin + 20.0) + "\" y=\"" + fixed(ly + 12.0) + "\">no data</text>\n";
    }
    svg += "</g>\n</svg>\n";
    return svg;
}

}  // namespace hexposome
