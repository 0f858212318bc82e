#pragma once

#include <vector>

#include <Eigen/Dense>

namespace posyn::geometry {

using Vec2 = Eigen::Vector2d;

/// Convex hull in counter-clockwise order without collinear vertices.
/// Throws NumericError if the points span less than a triangle.
std::vector<Vec2> convex_hull(std::vector<Vec2> points);

/// Signed area (positive for counter-clockwise polygons).
double polygon_area(const std::vector<Vec2>& polygon);

/// True when `p` lies inside or within `tol` of the boundary of a
/// counter-clockwise convex polygon.
bool contains(const std::vector<Vec2>& polygon, const Vec2& p, double tol = 1e-9);

/// Distance from `p` to the closest point on the polygon boundary.
double distance_to_boundary(const std::vector<Vec2>& polygon, const Vec2& p);

/// Regular n-gon of radius r centered at c, counter-clockwise.
std::vector<Vec2> regular_polygon(int n, double r, const Vec2& c = Vec2::Zero());

}  // namespace posyn::geometry
