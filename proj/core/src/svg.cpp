#include "posyn/svg.hpp"

#include <algorithm>
#include <cmath>

#include "posyn/io.hpp"

namespace posyn::svg {

namespace {

std::string num(double v) { return format_fixed(v, 2); }

std::string escape(const std::string& s) {
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

const std::array<const char*, 4> kDirectionColors{"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};

}  // namespace

Document::Document(double width, double height, std::string comment)
    : width_(width), height_(height), comment_(std::move(comment)) {}

void Document::rect(double x, double y, double w, double h, const std::string& fill, const std::string& stroke,
                    const std::string& css_class) {
    body_ += "<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(w) + "\" height=\"" + num(h) +
             "\" fill=\"" + fill + "\" stroke=\"" + stroke + "\"";
    if (!css_class.empty()) body_ += " class=\"" + css_class + "\"";
    body_ += "/>\n";
}

void Document::line(double x1, double y1, double x2, double y2, const std::string& stroke, double width,
                    const std::string& dash) {
    body_ += "<line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) + "\" y2=\"" + num(y2) +
             "\" stroke=\"" + stroke + "\" stroke-width=\"" + num(width) + "\"";
    if (!dash.empty()) body_ += " stroke-dasharray=\"" + dash + "\"";
    body_ += "/>\n";
}

void Document::polyline(const std::vector<std::pair<double, double>>& pts, const std::string& stroke, double width) {
    body_ += "<polyline fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"" + num(width) + "\" points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (i) body_ += ' ';
        body_ += num(pts[i].first) + "," + num(pts[i].second);
    }
    body_ += "\"/>\n";
}

void Document::circle(double cx, double cy, double r, const std::string& fill) {
    body_ += "<circle cx=\"" + num(cx) + "\" cy=\"" + num(cy) + "\" r=\"" + num(r) + "\" fill=\"" + fill + "\"/>\n";
}

void Document::text(double x, double y, const std::string& content, int size, const std::string& anchor,
                    double rotate) {
    body_ += "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-size=\"" + std::to_string(size) +
             "\" font-family=\"sans-serif\" text-anchor=\"" + anchor + "\"";
    if (rotate != 0.0) body_ += " transform=\"rotate(" + num(rotate) + " " + num(x) + " " + num(y) + ")\"";
    body_ += ">" + escape(content) + "</text>\n";
}

std::string Document::str() const {
    std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    if (!comment_.empty()) out += "<!-- " + comment_ + " -->\n";
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width_) + "\" height=\"" + num(height_) +
           "\" viewBox=\"0 0 " + num(width_) + " " + num(height_) + "\">\n";
    out += "<rect x=\"0\" y=\"0\" width=\"" + num(width_) + "\" height=\"" + num(height_) + "\" fill=\"white\"/>\n";
    out += body_;
    out += "</svg>\n";
    return out;
}

std::string synergy_bars(const synergy::SynergySet& set, const std::vector<MuscleChannel>& rows,
                         const std::string& title, const std::string& comment) {
    const Index n = set.W.cols();
    const Index m = set.W.rows();
    const double panel_w = 460.0, panel_h = 150.0, left = 50.0, top = 40.0;
    Document doc(left + panel_w + 20.0, top + static_cast<double>(n) * (panel_h + 20.0) + 60.0, comment);
    doc.text(left, 22.0, title, 14);
    const double bar_w = panel_w / static_cast<double>(std::max<Index>(m, 1));
    for (Index i = 0; i < n; ++i) {
        const double y0 = top + static_cast<double>(i) * (panel_h + 20.0);
        doc.rect(left, y0, panel_w, panel_h, "none", "#999999", "panel");
        doc.text(left + 4.0, y0 + 14.0, "W" + std::to_string(i + 1), 11);
        for (Index r = 0; r < m; ++r) {
            const double h = std::clamp(set.W(r, i), 0.0, 1.0) * (panel_h - 20.0);
            doc.rect(left + static_cast<double>(r) * bar_w + 2.0, y0 + panel_h - h, bar_w - 4.0, h, "#4c72b0");
        }
    }
    const double base = top + static_cast<double>(n) * (panel_h + 20.0) + 8.0;
    for (Index r = 0; r < m; ++r) {
        const std::string label = static_cast<std::size_t>(r) < rows.size() ? rows[static_cast<std::size_t>(r)].label()
                                                                            : std::to_string(r);
        doc.text(left + (static_cast<double>(r) + 0.5) * bar_w, base, label, 9, "end", -60.0);
    }
    return doc.str();
}

std::string tuning_grid(const synergy::TuningCurves& curves, const std::string& title, const std::string& comment) {
    const std::size_t n = curves.curves.size();
    const double panel_w = 300.0, panel_h = 160.0, left = 50.0, top = 40.0;
    Document doc(left + panel_w + 150.0, top + static_cast<double>(n) * (panel_h + 30.0) + 20.0, comment);
    doc.text(left, 22.0, title, 14);
    for (std::size_t d = 0; d < curves.directions.size(); ++d) {
        const double ly = top + 14.0 * static_cast<double>(d);
        doc.line(left + panel_w + 20.0, ly, left + panel_w + 40.0, ly, kDirectionColors[d % 4], 2.0);
        doc.text(left + panel_w + 45.0, ly + 4.0, std::string(to_string(curves.directions[d])), 10);
    }
    for (std::size_t i = 0; i < n; ++i) {
        const auto& grid = curves.curves[i];
        const double y0 = top + static_cast<double>(i) * (panel_h + 30.0);
        doc.rect(left, y0, panel_w, panel_h, "none", "#999999", "panel");
        doc.text(left + 4.0, y0 + 14.0, "C" + std::to_string(i + 1), 11);
        const double peak = grid.size() > 0 ? std::max(grid.maxCoeff(), 1e-12) : 1.0;
        const auto bins = static_cast<double>(std::max<Index>(grid.rows(), 2) - 1);
        for (Index d = 0; d < grid.cols(); ++d) {
            std::vector<std::pair<double, double>> pts;
            for (Index b = 0; b < grid.rows(); ++b) {
                pts.emplace_back(left + 10.0 + (panel_w - 20.0) * static_cast<double>(b) / bins,
                                 y0 + panel_h - 10.0 - (panel_h - 30.0) * grid(b, d) / peak);
            }
            doc.polyline(pts, kDirectionColors[static_cast<std::size_t>(d) % 4]);
        }
        for (Index b = 0; b < grid.rows(); ++b) {
            doc.text(left + 10.0 + (panel_w - 20.0) * static_cast<double>(b) / bins, y0 + panel_h + 12.0,
                     std::string(binning::to_string(curves.bins[static_cast<std::size_t>(b)])), 9, "middle");
        }
    }
    return doc.str();
}

std::string vaf_scan(const std::vector<double>& scan, double criterion, int chosen, const std::string& title,
                     const std::string& comment) {
    const double left = 60.0, top = 40.0, w = 420.0, h = 260.0;
    Document doc(left + w + 30.0, top + h + 50.0, comment);
    doc.text(left, 22.0, title, 14);
    doc.rect(left, top, w, h, "none", "#999999");
    const auto count = static_cast<double>(std::max<std::size_t>(scan.size(), 2) - 1);
    auto px = [&](std::size_t i) { return left + 15.0 + (w - 30.0) * static_cast<double>(i) / count; };
    auto py = [&](double v) { return top + h - h * std::clamp(v, 0.0, 100.0) / 100.0; };
    doc.line(left, py(criterion), left + w, py(criterion), "#888888", 1.0, "4 3");
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < scan.size(); ++i) pts.emplace_back(px(i), py(scan[i]));
    doc.polyline(pts, "#4c72b0", 2.0);
    for (std::size_t i = 0; i < scan.size(); ++i) {
        doc.circle(px(i), py(scan[i]), static_cast<int>(i) + 1 == chosen ? 5.0 : 3.0,
                   static_cast<int>(i) + 1 == chosen ? "#d62728" : "#4c72b0");
        doc.text(px(i), top + h + 16.0, std::to_string(i + 1), 10, "middle");
    }
    for (int v = 0; v <= 100; v += 20) doc.text(left - 6.0, py(v) + 4.0, std::to_string(v), 10, "end");
    doc.text(left + w / 2.0, top + h + 36.0, "number of synergies", 11, "middle");
    doc.text(18.0, top + h / 2.0, "VAF (%)", 11, "middle", -90.0);
    return doc.str();
}

std::string cop_traces(const std::vector<Trace>& traces, const std::string& title, const std::string& comment) {
    const double left = 60.0, top = 40.0, size = 360.0;
    Document doc(left + size + 160.0, top + size + 50.0, comment);
    doc.text(left, 22.0, title, 14);
    doc.rect(left, top, size, size, "none", "#999999");
    double extent = 1.0;
    double cx = 0.0, cy = 0.0;
    std::size_t count = 0;
    for (const auto& t : traces) {
        for (std::size_t i = 0; i < t.x.size(); ++i) {
            cx += t.x[i];
            cy += t.y[i];
            ++count;
        }
    }
    if (count > 0) {
        cx /= static_cast<double>(count);
        cy /= static_cast<double>(count);
    }
    for (const auto& t : traces) {
        for (std::size_t i = 0; i < t.x.size(); ++i) {
            extent = std::max({extent, std::abs(t.x[i] - cx), std::abs(t.y[i] - cy)});
        }
    }
    extent *= 1.1;
    // ML to the right, AP upward.
    auto px = [&](double y) { return left + size / 2.0 + (y - cy) / extent * size / 2.0; };
    auto py = [&](double x) { return top + size / 2.0 - (x - cx) / extent * size / 2.0; };
    for (std::size_t k = 0; k < traces.size(); ++k) {
        std::vector<std::pair<double, double>> pts;
        for (std::size_t i = 0; i < traces[k].x.size(); ++i) pts.emplace_back(px(traces[k].y[i]), py(traces[k].x[i]));
        doc.polyline(pts, kDirectionColors[k % 4], 1.0);
        doc.line(left + size + 20.0, top + 14.0 * static_cast<double>(k), left + size + 40.0,
                 top + 14.0 * static_cast<double>(k), kDirectionColors[k % 4], 2.0);
        doc.text(left + size + 45.0, top + 14.0 * static_cast<double>(k) + 4.0, traces[k].label, 10);
    }
    doc.text(left + size / 2.0, top + size + 20.0, "ML (mm), half-range " + format_fixed(extent, 1), 11, "middle");
    doc.text(20.0, top + size / 2.0, "AP (mm)", 11, "middle", -90.0);
    return doc.str();
}

int count_elements(const std::string& svg, const std::string& tag, const std::string& class_name) {
    int n = 0;
    const std::string open = "<" + tag + " ";
    for (std::size_t pos = svg.find(open); pos != std::string::npos; pos = svg.find(open, pos + 1)) {
        if (class_name.empty()) {
            ++n;
            continue;
        }
        const auto end = svg.find('>', pos);
        if (svg.substr(pos, end - pos).find("class=\"" + class_name + "\"") != std::string::npos) ++n;
    }
    return n;
}

}  // namespace posyn::svg
