#pragma once

#include <vector>

namespace hexposome {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

inline bool operator==(const Point& a, const Point& b) { return a.x == b.x && a.y == b.y; }

// Ring storage is open: first vertex is not repeated at the end.
// Exterior counterclockwise, holes clockwise.
struct Polygon {
    std::vector<Point> exterior;
    std::vector<std::vector<Point>> holes;

    bool empty() const { return exterior.empty(); }
};

// Row-major grid of values, row 0 is the northernmost row.
struct RasterGrid {
    int ncols = 0;
    int nrows = 0;
    double xll = 0.0;
    double yll = 0.0;
    double cellsize = 1.0;
    double nodata = -9999.0;
    std::vector<double> values;

    double at(int row, int col) const { return values[static_cast<size_t>(row) * ncols + col]; }
    bool is_nodata(double v) const;
};

// Signed shoelace area: positive for counterclockwise rings.
double signed_ring_area(const std::vector<Point>& ring);

// Exterior area minus hole areas. Orientation-tolerant (absolute values per ring).
double polygon_area(const Polygon& poly);

// Even-odd rule over exterior and holes; points on any edge count as inside.
bool point_in_polygon(const Point& p, const Polygon& poly);

// Sutherland-Hodgman clip of subject (exterior and holes) against a convex ring.
// Boundary-inclusive. Results with area below the sliver cutoff come back empty.
Polygon clip_to_convex(const Polygon& subject, const std::vector<Point>& convex_ring);
Polygon clip_to_hex(const Polygon& subject, const std::vector<Point>& hex);

double intersection_area(const Polygon& subject, const std::vector<Point>& hex);

// Map-coordinate square of one pixel.
Polygon pixel_polygon(const RasterGrid& grid, int row, int col);

// Fragments below this are floating-point slivers, not geometry. km^2.
inline constexpr double kSliverAreaCutoff = 1e-15;

}  // namespace hexposome
