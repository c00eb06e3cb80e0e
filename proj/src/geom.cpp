#include "hexposome/geom.hpp"

#include <cmath>
#include <stdexcept>

namespace hexposome {

bool RasterGrid::is_nodata(double v) const {
    return std::isnan(v) || v == nodata;
}

double signed_ring_area(const std::vector<Point>& ring) {
    const size_t n = ring.size();
    if (n == 0) return 0.0;
    // Anchored at the first vertex: shoelace loses most of its precision to
    // cancellation when a small ring sits far from the origin.
    const double x0 = ring[0].x, y0 = ring[0].y;
    double acc = 0.0;
    for (size_t i = 0, j = n - 1; i < n; j = i++) {
        const double xj = ring[j].x - x0, yj = ring[j].y - y0;
        const double xi = ring[i].x - x0, yi = ring[i].y - y0;
        acc += xj * yi - xi * yj;
    }
    return 0.5 * acc;
}

double polygon_area(const Polygon& poly) {
    if (poly.exterior.empty()) return 0.0;
    if (poly.exterior.size() < 3) throw std::invalid_argument("polygon exterior needs at least 3 vertices");
    double area = std::fabs(signed_ring_area(poly.exterior));
    for (const auto& hole : poly.holes) {
        if (hole.size() < 3) throw std::invalid_argument("polygon hole needs at least 3 vertices");
        area -= std::fabs(signed_ring_area(hole));
    }
    return area;
}

namespace {

// Distance tolerance for on-edge classification, km. Sub-nanometer.
constexpr double kOnEdgeTol = 1e-12;

bool on_segment(const Point& p, const Point& a, const Point& b) {
    const double abx = b.x - a.x, aby = b.y - a.y;
    const double apx = p.x - a.x, apy = p.y - a.y;
    const double len2 = abx * abx + aby * aby;
    if (len2 == 0.0) return std::hypot(apx, apy) <= kOnEdgeTol;
    double t = (apx * abx + apy * aby) / len2;
    if (t < 0.0) t = 0.0;
    if (t > 1.0) t = 1.0;
    const double dx = apx - t * abx, dy = apy - t * aby;
    return std::hypot(dx, dy) <= kOnEdgeTol;
}

bool ring_crossings_odd(const Point& p, const std::vector<Point>& ring) {
    bool odd = false;
    const size_t n = ring.size();
    for (size_t i = 0, j = n - 1; i < n; j = i++) {
        const Point& a = ring[j];
        const Point& b = ring[i];
        if ((a.y > p.y) != (b.y > p.y)) {
            const double xint = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if (p.x < xint) odd = !odd;
        }
    }
    return odd;
}

bool ring_has_point_on_edge(const Point& p, const std::vector<Point>& ring) {
    const size_t n = ring.size();
    for (size_t i = 0, j = n - 1; i < n; j = i++) {
        if (on_segment(p, ring[j], ring[i])) return true;
    }
    return false;
}

}  // namespace

bool point_in_polygon(const Point& p, const Polygon& poly) {
    if (poly.exterior.size() < 3) throw std::invalid_argument("degenerate polygon");
    if (ring_has_point_on_edge(p, poly.exterior)) return true;
    for (const auto& hole : poly.holes) {
        if (ring_has_point_on_edge(p, hole)) return true;
    }
    bool inside = ring_crossings_odd(p, poly.exterior);
    for (const auto& hole : poly.holes) {
        if (ring_crossings_odd(p, hole)) inside = !inside;
    }
    return inside;
}

namespace {

// Signed distance of p left of directed edge a->b, in km (cross / |ab|).
double left_distance(const Point& p, const Point& a, const Point& b) {
    const double abx = b.x - a.x, aby = b.y - a.y;
    const double len = std::hypot(abx, aby);
    if (len == 0.0) return 0.0;
    return (abx * (p.y - a.y) - aby * (p.x - a.x)) / len;
}

Point line_intersection(const Point& p, const Point& q, const Point& a, const Point& b) {
    const double rx = q.x - p.x, ry = q.y - p.y;
    const double sx = b.x - a.x, sy = b.y - a.y;
    const double denom = rx * sy - ry * sx;
    // Caller guarantees p and q straddle line ab, so denom is nonzero.
    const double t = ((a.x - p.x) * sy - (a.y - p.y) * sx) / denom;
    return {p.x + t * rx, p.y + t * ry};
}

// One Sutherland-Hodgman pass against the half-plane left of a->b.
// Boundary-inclusive: points exactly on the clip line are kept.
std::vector<Point> clip_ring_halfplane(const std::vector<Point>& ring, const Point& a, const Point& b) {
    std::vector<Point> out;
    const size_t n = ring.size();
    if (n == 0) return out;
    out.reserve(n + 2);
    for (size_t i = 0, j = n - 1; i < n; j = i++) {
        const Point& prev = ring[j];
        const Point& cur = ring[i];
        const bool prev_in = left_distance(prev, a, b) >= 0.0;
        const bool cur_in = left_distance(cur, a, b) >= 0.0;
        if (cur_in) {
            if (!prev_in) out.push_back(line_intersection(prev, cur, a, b));
            out.push_back(cur);
        } else if (prev_in) {
            out.push_back(line_intersection(prev, cur, a, b));
        }
    }
    return out;
}

std::vector<Point> clip_ring_convex(std::vector<Point> ring, const std::vector<Point>& convex_ring) {
    const size_t n = convex_ring.size();
    for (size_t i = 0, j = n - 1; i < n && !ring.empty(); j = i++) {
        ring = clip_ring_halfplane(ring, convex_ring[j], convex_ring[i]);
    }
    if (ring.size() < 3) ring.clear();
    return ring;
}

}  // namespace

Polygon clip_to_convex(const Polygon& subject, const std::vector<Point>& convex_ring) {
    if (convex_ring.size() < 3) throw std::invalid_argument("clip region needs at least 3 vertices");
    if (subject.exterior.size() < 3) throw std::invalid_argument("degenerate subject polygon");
    Polygon out;
    out.exterior = clip_ring_convex(subject.exterior, convex_ring);
    if (out.exterior.empty()) return Polygon{};
    for (const auto& hole : subject.holes) {
        auto clipped = clip_ring_convex(hole, convex_ring);
        if (!clipped.empty()) out.holes.push_back(std::move(clipped));
    }
    if (polygon_area(out) < kSliverAreaCutoff) return Polygon{};
    return out;
}

Polygon clip_to_hex(const Polygon& subject, const std::vector<Point>& hex) {
    if (hex.size() != 6) throw std::invalid_argument("hex ring must have 6 vertices");
    return clip_to_convex(subject, hex);
}

double intersection_area(const Polygon& subject, const std::vector<Point>& hex) {
    Polygon clipped = clip_to_hex(subject, hex);
    return clipped.empty() ? 0.0 : polygon_area(clipped);
}

Polygon pixel_polygon(const RasterGrid& grid, int row, int col) {
    if (row < 0 || row >= grid.nrows || col < 0 || col >= grid.ncols)
        throw std::out_of_range("pixel index out of range");
    const double x0 = grid.xll + col * grid.cellsize;
    const double x1 = x0 + grid.cellsize;
    const double ytop = grid.yll + grid.nrows * grid.cellsize;
    const double y1 = ytop - row * grid.cellsize;
    const double y0 = y1 - grid.cellsize;
    Polygon p;
    p.exterior = {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
    return p;
}

}  // namespace hexposome
