#include "posyn/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "posyn/error.hpp"

namespace posyn::geometry {

namespace {

double cross(const Vec2& o, const Vec2& a, const Vec2& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

double segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
    const Vec2 ab = b - a;
    const double len2 = ab.squaredNorm();
    double s = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
    s = std::clamp(s, 0.0, 1.0);
    return (p - (a + s * ab)).norm();
}

}  // namespace

std::vector<Vec2> convex_hull(std::vector<Vec2> points) {
    std::sort(points.begin(), points.end(), [](const Vec2& a, const Vec2& b) {
        return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
    });
    points.erase(std::unique(points.begin(), points.end()), points.end());
    if (points.size() < 3) throw NumericError("convex_hull: need at least 3 distinct points");

    double scale = 0.0;
    for (const auto& p : points) scale = std::max(scale, p.cwiseAbs().maxCoeff());
    const double eps = 1e-12 * std::max(1.0, scale * scale);

    // Andrew's monotone chain; collinear points are dropped.
    std::vector<Vec2> hull(2 * points.size());
    std::size_t k = 0;
    for (const auto& p : points) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= eps) --k;
        hull[k++] = p;
    }
    const std::size_t lower = k + 1;
    for (auto it = points.rbegin() + 1; it != points.rend(); ++it) {
        while (k >= lower && cross(hull[k - 2], hull[k - 1], *it) <= eps) --k;
        hull[k++] = *it;
    }
    hull.resize(k - 1);
    if (hull.size() < 3) throw NumericError("convex_hull: points are collinear");
    return hull;
}

double polygon_area(const std::vector<Vec2>& polygon) {
    double a = 0.0;
    for (std::size_t i = 0; i < polygon.size(); ++i) {
        const auto& p = polygon[i];
        const auto& q = polygon[(i + 1) % polygon.size()];
        a += p.x() * q.y() - q.x() * p.y();
    }
    return 0.5 * a;
}

bool contains(const std::vector<Vec2>& polygon, const Vec2& p, double tol) {
    for (std::size_t i = 0; i < polygon.size(); ++i) {
        const auto& a = polygon[i];
        const auto& b = polygon[(i + 1) % polygon.size()];
        const double len = (b - a).norm();
        if (len == 0.0) continue;
        // Signed distance to the edge line, negative outside.
        if (cross(a, b, p) / len < -tol) return false;
    }
    return true;
}

double distance_to_boundary(const std::vector<Vec2>& polygon, const Vec2& p) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < polygon.size(); ++i) {
        best = std::min(best, segment_distance(p, polygon[i], polygon[(i + 1) % polygon.size()]));
    }
    return best;
}

std::vector<Vec2> regular_polygon(int n, double r, const Vec2& c) {
    std::vector<Vec2> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double th = 2.0 * std::numbers::pi * i / n;
        out.emplace_back(c.x() + r * std::cos(th), c.y() + r * std::sin(th));
    }
    return out;
}

}  // namespace posyn::geometry
