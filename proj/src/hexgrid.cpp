#include "hexposome/hexgrid.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace hexposome {

namespace {

constexpr int kMaxEncodableRes = 15;

void check_res(const GridSpec& g, int res) {
    if (res < 0 || res > g.max_resolution) throw std::out_of_range("resolution out of range");
}

double level_rotation() {
    static const double alpha = std::atan(std::sqrt(3.0) / 5.0);
    return alpha;
}

struct Lattice {
    double s;   // edge length
    double c;   // cos of lattice angle
    double sn;  // sin of lattice angle
};

Lattice lattice_for(const GridSpec& g, int res) {
    const double ang = res * g.rotation_sign * level_rotation();
    return {g.edge(res), std::cos(ang), std::sin(ang)};
}

}  // namespace

double GridSpec::edge(int res) const {
    if (base_edge_s0 <= 0.0) throw std::invalid_argument("base_edge_s0 must be positive");
    check_res(*this, res);
    return base_edge_s0 / std::pow(std::sqrt(7.0), res);
}

double GridSpec::cell_area(int res) const {
    check_res(*this, res);
    const double e = edge(max_resolution);
    double a = 1.5 * std::sqrt(3.0) * e * e;
    // Built by multiplication from the finest level so consecutive areas differ
    // by an exact factor of 7 in doubles, not just in the reals.
    for (int r = max_resolution; r > res; --r) a *= 7.0;
    return a;
}

std::string GridSpec::fingerprint() const {
    char buf[160];
    std::snprintf(buf, sizeof buf, "hexgrid:%.17g,%.17g;%.17g;%+d;%d", origin.x, origin.y,
                  base_edge_s0, rotation_sign, max_resolution);
    return buf;
}

std::pair<double, double> fractional_axial(const Point& p, int res, const GridSpec& g) {
    check_res(g, res);
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw std::invalid_argument("non-finite point");
    const Lattice L = lattice_for(g, res);
    const double vx = p.x - g.origin.x;
    const double vy = p.y - g.origin.y;
    const double ux = L.c * vx + L.sn * vy;
    const double uy = -L.sn * vx + L.c * vy;
    const double sqrt3 = std::sqrt(3.0);
    const double qf = (sqrt3 / 3.0 * ux - uy / 3.0) / L.s;
    const double rf = (2.0 / 3.0 * uy) / L.s;
    return {qf, rf};
}

HexId point_to_cell(const Point& p, int res, const GridSpec& g) {
    const auto [qf, rf] = fractional_axial(p, res, g);
    const double sf = -qf - rf;

    double rq = std::round(qf);
    double rr = std::round(rf);
    const double rs = std::round(sf);
    const double dq = std::fabs(rq - qf);
    const double dr = std::fabs(rr - rf);
    const double ds = std::fabs(rs - sf);
    if (dq >= dr && dq >= ds) {
        rq = -rr - rs;
    } else if (dr >= ds) {
        rr = -rq - rs;
    }
    return {res, std::llround(rq), std::llround(rr)};
}

Point cell_center(const HexId& h, const GridSpec& g) {
    check_res(g, h.res);
    const Lattice L = lattice_for(g, h.res);
    const double sqrt3 = std::sqrt(3.0);
    const double ux = L.s * sqrt3 * (static_cast<double>(h.q) + static_cast<double>(h.r) / 2.0);
    const double uy = L.s * 1.5 * static_cast<double>(h.r);
    return {L.c * ux - L.sn * uy + g.origin.x, L.sn * ux + L.c * uy + g.origin.y};
}

std::vector<Point> cell_boundary(const HexId& h, const GridSpec& g) {
    const Point c = cell_center(h, g);
    const Lattice L = lattice_for(g, h.res);
    const double base = h.res * g.rotation_sign * level_rotation();
    std::vector<Point> ring;
    ring.reserve(6);
    for (int k = 0; k < 6; ++k) {
        const double th = base + (30.0 + 60.0 * k) * M_PI / 180.0;
        ring.push_back({c.x + L.s * std::cos(th), c.y + L.s * std::sin(th)});
    }
    return ring;
}

HexId parent(const HexId& h, const GridSpec& g) {
    check_res(g, h.res);
    if (h.res == 0) throw std::out_of_range("resolution 0 has no parent");
    return point_to_cell(cell_center(h, g), h.res - 1, g);
}

std::vector<HexId> children(const HexId& h, const GridSpec& g) {
    check_res(g, h.res);
    if (h.res >= g.max_resolution) throw std::out_of_range("finest resolution has no children");
    // The coarse basis vectors are exact integer combinations of the fine ones,
    // so the central child is an integer map, no rounding involved.
    std::int64_t cq, cr;
    if (g.rotation_sign < 0) {
        cq = 2 * h.q - h.r;
        cr = h.q + 3 * h.r;
    } else {
        cq = 3 * h.q + h.r;
        cr = -h.q + 2 * h.r;
    }
    const int res = h.res + 1;
    std::vector<HexId> out = {
        {res, cq, cr},          {res, cq + 1, cr},     {res, cq + 1, cr - 1},
        {res, cq, cr + 1},      {res, cq, cr - 1},     {res, cq - 1, cr + 1},
        {res, cq - 1, cr},
    };
    std::sort(out.begin(), out.end());
    return out;
}

std::int64_t hex_distance(const HexId& a, const HexId& b) {
    if (a.res != b.res) throw std::invalid_argument("hex_distance needs equal resolutions");
    const std::int64_t dq = a.q - b.q;
    const std::int64_t dr = a.r - b.r;
    return (std::llabs(dq) + std::llabs(dr) + std::llabs(dq + dr)) / 2;
}

std::vector<HexId> k_ring(const HexId& h, int k) {
    if (k < 0) throw std::invalid_argument("k_ring needs k >= 0");
    std::vector<HexId> out;
    out.reserve(static_cast<size_t>(1 + 3 * static_cast<std::int64_t>(k) * (k + 1)));
    for (std::int64_t dq = -k; dq <= k; ++dq) {
        const std::int64_t lo = std::max<std::int64_t>(-k, -dq - k);
        const std::int64_t hi = std::min<std::int64_t>(k, -dq + k);
        for (std::int64_t dr = lo; dr <= hi; ++dr) {
            out.push_back({h.res, h.q + dq, h.r + dr});
        }
    }
    return out;
}

std::vector<HexId> polyfill(const Polygon& poly, int res, const GridSpec& g) {
    if (poly.exterior.size() < 3) throw std::invalid_argument("degenerate polygon");
    check_res(g, res);
    double xmin = poly.exterior[0].x, xmax = xmin, ymin = poly.exterior[0].y, ymax = ymin;
    for (const Point& p : poly.exterior) {
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw std::invalid_argument("non-finite polygon vertex");
        xmin = std::min(xmin, p.x);
        xmax = std::max(xmax, p.x);
        ymin = std::min(ymin, p.y);
        ymax = std::max(ymax, p.y);
    }
    const double pad = g.edge(res);  // circumradius
    xmin -= pad;
    xmax += pad;
    ymin -= pad;
    ymax += pad;

    // Axial coordinates are a linear map of the plane, so their extremes over a
    // rectangle are attained at its corners.
    double qlo = 0, qhi = 0, rlo = 0, rhi = 0;
    bool first = true;
    for (const Point corner : {Point{xmin, ymin}, Point{xmax, ymin}, Point{xmax, ymax}, Point{xmin, ymax}}) {
        const auto [qf, rf] = fractional_axial(corner, res, g);
        if (first) {
            qlo = qhi = qf;
            rlo = rhi = rf;
            first = false;
        } else {
            qlo = std::min(qlo, qf);
            qhi = std::max(qhi, qf);
            rlo = std::min(rlo, rf);
            rhi = std::max(rhi, rf);
        }
    }
    std::vector<HexId> out;
    const auto q0 = static_cast<std::int64_t>(std::floor(qlo)) - 1;
    const auto q1 = static_cast<std::int64_t>(std::ceil(qhi)) + 1;
    const auto r0 = static_cast<std::int64_t>(std::floor(rlo)) - 1;
    const auto r1 = static_cast<std::int64_t>(std::ceil(rhi)) + 1;
    for (std::int64_t q = q0; q <= q1; ++q) {
        for (std::int64_t r = r0; r <= r1; ++r) {
            const HexId h{res, q, r};
            if (point_in_polygon(cell_center(h, g), poly)) out.push_back(h);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<HexId> cells_in_box(const Point& lo, const Point& hi, int res, const GridSpec& g) {
    double qlo = 0, qhi = 0, rlo = 0, rhi = 0;
    bool first = true;
    for (const Point corner : {Point{lo.x, lo.y}, Point{hi.x, lo.y}, Point{hi.x, hi.y}, Point{lo.x, hi.y}}) {
        const auto [qf, rf] = fractional_axial(corner, res, g);
        if (first) {
            qlo = qhi = qf;
            rlo = rhi = rf;
            first = false;
        } else {
            qlo = std::min(qlo, qf);
            qhi = std::max(qhi, qf);
            rlo = std::min(rlo, rf);
            rhi = std::max(rhi, rf);
        }
    }
    std::vector<HexId> out;
    const auto q0 = static_cast<std::int64_t>(std::floor(qlo)) - 1;
    const auto q1 = static_cast<std::int64_t>(std::ceil(qhi)) + 1;
    const auto r0 = static_cast<std::int64_t>(std::floor(rlo)) - 1;
    const auto r1 = static_cast<std::int64_t>(std::ceil(rhi)) + 1;
    for (std::int64_t q = q0; q <= q1; ++q) {
        for (std::int64_t r = r0; r <= r1; ++r) {
            const HexId h{res, q, r};
            const Point c = cell_center(h, g);
            if (c.x >= lo.x && c.x <= hi.x && c.y >= lo.y && c.y <= hi.y) out.push_back(h);
        }
    }
    return out;
}

std::string encode_hexid(const HexId& h) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "H%d:%lld:%lld", h.res, static_cast<long long>(h.q),
                  static_cast<long long>(h.r));
    return buf;
}

namespace {

const char* parse_i64(const char* first, const char* last, std::int64_t& out) {
    auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc{}) throw std::invalid_argument("malformed hex id");
    return ptr;
}

}  // namespace

HexId decode_hexid(const std::string& text) {
    const char* p = text.data();
    const char* end = p + text.size();
    if (p == end || *p != 'H') throw std::invalid_argument("malformed hex id: " + text);
    ++p;
    std::int64_t res = 0, q = 0, r = 0;
    p = parse_i64(p, end, res);
    if (p == end || *p != ':') throw std::invalid_argument("malformed hex id: " + text);
    p = parse_i64(p + 1, end, q);
    if (p == end || *p != ':') throw std::invalid_argument("malformed hex id: " + text);
    p = parse_i64(p + 1, end, r);
    if (p != end) throw std::invalid_argument("malformed hex id: " + text);
    if (res < 0 || res > kMaxEncodableRes) throw std::out_of_range("hex id resolution out of range: " + text);
    return {static_cast<int>(res), q, r};
}

}  // namespace hexposome
