#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "hexposome/geom.hpp"
#include "hexposome/hexgrid.hpp"
#include "test_util.hpp"

using namespace hexposome;

namespace {

Polygon unit_square() {
    return {{{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {}};
}

std::vector<Point> hex_ring(double cx, double cy, double edge) {
    std::vector<Point> ring;
    for (int k = 0; k < 6; ++k) {
        const double th = (30.0 + 60.0 * k) * M_PI / 180.0;
        ring.push_back({cx + edge * std::cos(th), cy + edge * std::sin(th)});
    }
    return ring;
}

// Convex 6-gon standing in for the half-plane left of a->b inside a bounded
// scene: a rectangle with two collinear midpoint vertices.
std::vector<Point> halfplane_ring(const Point& a, const Point& b, double reach) {
    const double dx = b.x - a.x, dy = b.y - a.y;
    const double len = std::hypot(dx, dy);
    const double ux = dx / len, uy = dy / len;   // along the line
    const double nx = -uy, ny = ux;              // inward (left) normal
    const Point p0{a.x - ux * reach, a.y - uy * reach};
    const Point p1{a.x + ux * reach, a.y + uy * reach};
    const Point q1{p1.x + nx * reach, p1.y + ny * reach};
    const Point q0{p0.x + nx * reach, p0.y + ny * reach};
    return {p0, p1, q1, {0.5 * (q0.x + q1.x), 0.5 * (q0.y + q1.y)}, q0,
            {p0.x + nx * reach * 0.5, p0.y + ny * reach * 0.5}};
}

Polygon random_convex(std::mt19937& rng, double cx, double cy, double rmin, double rmax) {
    std::uniform_real_distribution<double> radius(rmin, rmax);
    std::uniform_real_distribution<double> jitter(0.0, 1.0);
    const int n = 8;
    std::vector<double> angles;
    for (int i = 0; i < n; ++i) angles.push_back(2.0 * M_PI * (i + 0.8 * jitter(rng)) / n);
    Polygon p;
    for (double th : angles) {
        const double r = radius(rng);
        p.exterior.push_back({cx + r * std::cos(th), cy + r * std::sin(th)});
    }
    return p;
}

}  // namespace

TEST_CASE("polygon_area on squares, holes, and hexagons") {
    CHECK(polygon_area(unit_square()) == doctest::Approx(1.0).epsilon(1e-15));

    Polygon holed = unit_square();
    holed.holes.push_back({{0.25, 0.25}, {0.25, 0.75}, {0.75, 0.75}, {0.75, 0.25}});  // clockwise
    CHECK(polygon_area(holed) == doctest::Approx(0.75).epsilon(1e-15));

    Polygon hex{hex_ring(0, 0, 1.0), {}};
    CHECK(polygon_area(hex) == doctest::Approx(1.5 * std::sqrt(3.0)).epsilon(1e-14));

    Polygon degenerate{{{0, 0}, {1, 0}}, {}};
    CHECK_THROWS_AS(polygon_area(degenerate), std::invalid_argument);
}

TEST_CASE("point_in_polygon: interior, exterior, holes, edges") {
    const Polygon sq = unit_square();
    CHECK(point_in_polygon({0.5, 0.5}, sq));
    CHECK_FALSE(point_in_polygon({2.0, 2.0}, sq));
    CHECK(point_in_polygon({0.5, 0.0}, sq));  // on an edge
    CHECK(point_in_polygon({0.0, 0.0}, sq));  // on a vertex

    Polygon holed = unit_square();
    holed.holes.push_back({{0.25, 0.25}, {0.25, 0.75}, {0.75, 0.75}, {0.75, 0.25}});
    CHECK_FALSE(point_in_polygon({0.5, 0.5}, holed));   // inside the hole
    CHECK(point_in_polygon({0.1, 0.5}, holed));         // in the ring of material
    CHECK(point_in_polygon({0.25, 0.5}, holed));        // on the hole edge
}

TEST_CASE("point_in_polygon agrees with a winding-number oracle") {
    std::mt19937 rng(314);
    std::uniform_real_distribution<double> coord(-3.0, 3.0);
    int checked = 0;
    for (int trial = 0; trial < 200; ++trial) {
        Polygon poly = random_convex(rng, coord(rng) * 0.3, coord(rng) * 0.3, 0.5, 2.0);
        for (int i = 0; i < 50; ++i) {
            const Point p{coord(rng), coord(rng)};
            // Skip points hugging an edge; the two rules differ only on measure zero.
            bool near_edge = false;
            const auto& ring = poly.exterior;
            for (size_t a = 0, b = ring.size() - 1; a < ring.size(); b = a++) {
                const double ex = ring[a].x - ring[b].x, ey = ring[a].y - ring[b].y;
                const double px = p.x - ring[b].x, py = p.y - ring[b].y;
                const double len = std::hypot(ex, ey);
                const double dist = std::fabs(ex * py - ey * px) / len;
                if (dist < 1e-9) near_edge = true;
            }
            if (near_edge) continue;
            CHECK(point_in_polygon(p, poly) == testutil::winding_inside(p, poly));
            ++checked;
        }
    }
    CHECK(checked > 9000);
}

TEST_CASE("clip of a hex against itself keeps its area") {
    const auto hex = hex_ring(0.3, -0.2, 1.0);
    const Polygon subject{hex, {}};
    const Polygon clipped = clip_to_hex(subject, hex);
    REQUIRE_FALSE(clipped.empty());
    CHECK(polygon_area(clipped) == doctest::Approx(polygon_area(subject)).epsilon(1e-12));
}

TEST_CASE("clip of a disjoint subject is empty") {
    const auto hex = hex_ring(0, 0, 1.0);
    Polygon far{{{10, 10}, {11, 10}, {11, 11}, {10, 11}}, {}};
    CHECK(clip_to_hex(far, hex).empty());
    CHECK(intersection_area(far, hex) == 0.0);
}

TEST_CASE("hex fully inside the subject yields the hex area") {
    const auto hex = hex_ring(0, 0, 1.0);
    Polygon big{{{-5, -5}, {5, -5}, {5, 5}, {-5, 5}}, {}};
    CHECK(intersection_area(big, hex) == doctest::Approx(1.5 * std::sqrt(3.0)).epsilon(1e-12));
}

TEST_CASE("west half-plane takes exactly half the hex") {
    const auto hex = hex_ring(0, 0, 1.0);
    Polygon west{{{-5, -5}, {0, -5}, {0, 5}, {-5, 5}}, {}};
    const double half = 0.5 * 1.5 * std::sqrt(3.0);
    CHECK(intersection_area(west, hex) == doctest::Approx(half).epsilon(1e-9));
}

TEST_CASE("clipped area matches a Monte-Carlo oracle on random convex subjects") {
    std::mt19937 rng(2718);
    const auto hex = hex_ring(0, 0, 1.0);
    const Polygon hexpoly{hex, {}};
    for (int trial = 0; trial < 3; ++trial) {
        const Polygon subject = random_convex(rng, 0.4, -0.3, 0.6, 1.6);
        const double got = intersection_area(subject, hex);
        const double mc = testutil::mc_area(
            [&](double x, double y) {
                const Point p{x, y};
                return point_in_polygon(p, subject) && point_in_polygon(p, hexpoly);
            },
            -2.2, -2.2, 2.2, 2.2, 1000, 1000 + trial);
        CHECK(got == doctest::Approx(mc).epsilon(1e-3));
    }
}

TEST_CASE("half-plane split of a square partitions its overlap with the hex") {
    const auto hex = hex_ring(0, 0, 1.0);
    Polygon square{{{-0.9, -0.9}, {0.9, -0.9}, {0.9, 0.9}, {-0.9, 0.9}}, {}};
    // Split along a diagonal line through the hex; the two clipped halves must
    // rebuild the square-hex overlap.
    const Point a{-2.0, -1.1}, b{2.0, 1.3};
    const auto left = halfplane_ring(a, b, 50.0);
    const auto right = halfplane_ring(b, a, 50.0);
    const Polygon in_hex = clip_to_hex(square, hex);
    REQUIRE_FALSE(in_hex.empty());
    const double whole = polygon_area(in_hex);
    const double lhs = clip_to_convex(in_hex, left).empty() ? 0.0 : polygon_area(clip_to_convex(in_hex, left));
    const double rhs = clip_to_convex(in_hex, right).empty() ? 0.0 : polygon_area(clip_to_convex(in_hex, right));
    CHECK(lhs + rhs == doctest::Approx(whole).epsilon(1e-9));
    const double mc = testutil::mc_area(
        [&](double x, double y) {
            const Point p{x, y};
            return point_in_polygon(p, square) && point_in_polygon(p, Polygon{hex, {}});
        },
        -1.0, -1.0, 1.0, 1.0);
    CHECK(whole == doctest::Approx(mc).epsilon(1e-3));
}

TEST_CASE("subject holes survive clipping") {
    const auto hex = hex_ring(0, 0, 2.0);
    Polygon holed{{{-1, -1}, {1, -1}, {1, 1}, {-1, 1}},
                  {{{-0.5, -0.5}, {-0.5, 0.5}, {0.5, 0.5}, {0.5, -0.5}}}};
    const Polygon clipped = clip_to_hex(holed, hex);
    REQUIRE_FALSE(clipped.empty());
    CHECK(polygon_area(clipped) == doctest::Approx(4.0 - 1.0).epsilon(1e-12));
}

TEST_CASE("sliver intersections collapse to empty") {
    const auto hex = hex_ring(0, 0, 1.0);
    // Grazes the east edge of the hexagon: overlap width ~1e-9, area far below cutoff only
    // if the grazing strip is thin enough; use a 1e-9 x 1e-4 strip => area ~1e-13... keep
    // it truly degenerate instead: a strip overlapping by 1e-14 in x.
    const double x_edge = std::sqrt(3.0) / 2.0;  // inradius, east edge line x = x_edge
    Polygon strip{{{x_edge - 1e-14, -1e-4}, {x_edge + 1.0, -1e-4}, {x_edge + 1.0, 1e-4}, {x_edge - 1e-14, 1e-4}}, {}};
    CHECK(clip_to_hex(strip, hex).empty());
    CHECK(intersection_area(strip, hex) == 0.0);
}

TEST_CASE("pixel_polygon honors the row-0-north convention") {
    RasterGrid grid;
    grid.ncols = 3;
    grid.nrows = 2;
    grid.xll = 0.0;
    grid.yll = 0.0;
    grid.cellsize = 1.0;
    grid.values.assign(6, 0.0);

    const Polygon p = pixel_polygon(grid, 1, 0);
    REQUIRE(p.exterior.size() == 4);
    double xmin = 1e9, xmax = -1e9, ymin = 1e9, ymax = -1e9;
    for (const Point& v : p.exterior) {
        xmin = std::min(xmin, v.x);
        xmax = std::max(xmax, v.x);
        ymin = std::min(ymin, v.y);
        ymax = std::max(ymax, v.y);
    }
    CHECK(xmin == 0.0);
    CHECK(ymin == 0.0);
    CHECK(xmax == 1.0);
    CHECK(ymax == 1.0);
    CHECK(polygon_area(p) == doctest::Approx(grid.cellsize * grid.cellsize).epsilon(1e-15));

    // Adjacent pixels share exactly one edge.
    const Polygon p2 = pixel_polygon(grid, 1, 1);
    int shared = 0;
    for (const Point& v : p.exterior) {
        for (const Point& w : p2.exterior) {
            if (v == w) ++shared;
        }
    }
    CHECK(shared == 2);

    CHECK_THROWS_AS(pixel_polygon(grid, 2, 0), std::out_of_range);
    CHECK_THROWS_AS(pixel_polygon(grid, 0, 3), std::out_of_range);
}
