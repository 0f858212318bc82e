#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "posyn/error.hpp"
#include "posyn/geometry.hpp"

using namespace posyn;
using namespace posyn::geometry;

TEST(Hull, SquareWithInteriorAndCollinear) {
    const std::vector<Vec2> pts{{0, 0}, {2, 0}, {1, 0}, {2, 2}, {0, 2}, {1, 1}, {0.5, 0.7}};
    const auto h = convex_hull(pts);
    EXPECT_EQ(h.size(), 4u);
    EXPECT_NEAR(polygon_area(h), 4.0, 1e-12);
}

TEST(Hull, DegenerateThrows) {
    EXPECT_THROW(convex_hull({{0, 0}, {1, 1}, {2, 2}}), NumericError);
    EXPECT_THROW(convex_hull({{0, 0}, {0, 0}}), NumericError);
}

TEST(Hull, ContainsEveryInputPoint) {
    std::mt19937_64 gen(3);
    std::normal_distribution<double> g;
    std::vector<Vec2> pts;
    for (int i = 0; i < 300; ++i) pts.emplace_back(g(gen), 2.0 * g(gen));
    const auto h = convex_hull(pts);
    for (const auto& p : pts) EXPECT_TRUE(contains(h, p, 1e-9));
    EXPECT_GT(polygon_area(h), 0.0);
}

TEST(Contains, InsideOutsideEdge) {
    const auto sq = convex_hull({{0, 0}, {1, 0}, {1, 1}, {0, 1}});
    EXPECT_TRUE(contains(sq, Vec2(0.5, 0.5)));
    EXPECT_TRUE(contains(sq, Vec2(1.0, 0.5)));
    EXPECT_FALSE(contains(sq, Vec2(1.1, 0.5)));
}

TEST(Distance, ToSquare) {
    const auto sq = convex_hull({{0, 0}, {1, 0}, {1, 1}, {0, 1}});
    EXPECT_NEAR(distance_to_boundary(sq, Vec2(3, 0.5)), 2.0, 1e-12);
    EXPECT_NEAR(distance_to_boundary(sq, Vec2(4, 5)), 5.0, 1e-12);
    EXPECT_NEAR(distance_to_boundary(sq, Vec2(0.5, 0.4)), 0.4, 1e-12);
}

TEST(RegularPolygon, AreaApproachesCircle) {
    const auto p = regular_polygon(720, 2.0, Vec2(1, 1));
    EXPECT_NEAR(polygon_area(p), std::numbers::pi * 4.0, 1e-3);
    EXPECT_TRUE(contains(p, Vec2(1, 1)));
}
