#pragma once

#include <string>
#include <vector>

#include "posyn/binning.hpp"
#include "posyn/synergy.hpp"

namespace posyn::svg {

/// Minimal SVG document builder. Coordinates are printed with two decimals
/// so renders are byte-stable.
class Document {
public:
    Document(double width, double height, std::string comment = {});

    void rect(double x, double y, double w, double h, const std::string& fill, const std::string& stroke = "none",
              const std::string& css_class = {});
    void line(double x1, double y1, double x2, double y2, const std::string& stroke, double width = 1.0,
              const std::string& dash = {});
    void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& stroke, double width = 1.5);
    void circle(double cx, double cy, double r, const std::string& fill);
    void text(double x, double y, const std::string& content, int size = 11, const std::string& anchor = "start",
              double rotate = 0.0);

    std::string str() const;

private:
    double width_;
    double height_;
    std::string comment_;
    std::string body_;
};

/// One bar panel per synergy vector (muscles on the x axis).
std::string synergy_bars(const synergy::SynergySet& set, const std::vector<MuscleChannel>& rows,
                         const std::string& title, const std::string& comment);

/// One panel per synergy; bins on the x axis, one line per direction.
std::string tuning_grid(const synergy::TuningCurves& curves, const std::string& title, const std::string& comment);

/// VAF against the number of synergies, with the selection criterion.
std::string vaf_scan(const std::vector<double>& scan, double criterion, int chosen, const std::string& title,
                     const std::string& comment);

/// Planar COP paths (mm), one polyline per trace.
struct Trace {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};
std::string cop_traces(const std::vector<Trace>& traces, const std::string& title, const std::string& comment);

/// Number of elements with the given tag name in an SVG string.
int count_elements(const std::string& svg, const std::string& tag, const std::string& class_name = {});

}  // namespace posyn::svg
