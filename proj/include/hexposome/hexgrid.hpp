#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hexposome/geom.hpp"

namespace hexposome {

struct HexId {
    int res = 0;
    std::int64_t q = 0;
    std::int64_t r = 0;

    friend bool operator==(const HexId&, const HexId&) = default;
    friend auto operator<=>(const HexId&, const HexId&) = default;
};

struct GridSpec {
    Point origin{0.0, 0.0};
    // Calibrated so that a resolution-8 cell has area 0.737 km^2.
    double base_edge_s0 = 0.532575 * 2401.0;
    int rotation_sign = -1;  // each finer lattice rotated by rotation_sign * atan(sqrt(3)/5)
    int max_resolution = 15;

    double edge(int res) const;
    // Invariant: cell_area(res) == 7.0 * cell_area(res + 1), exact in doubles.
    double cell_area(int res) const;

    // Stable content fingerprint, used to bind derived files to the grid they came from.
    std::string fingerprint() const;
};

HexId point_to_cell(const Point& p, int res, const GridSpec& g);
// Unrounded axial coordinates of p in the resolution-res lattice.
std::pair<double, double> fractional_axial(const Point& p, int res, const GridSpec& g);
Point cell_center(const HexId& h, const GridSpec& g);
std::vector<Point> cell_boundary(const HexId& h, const GridSpec& g);

HexId parent(const HexId& h, const GridSpec& g);
std::vector<HexId> children(const HexId& h, const GridSpec& g);

std::vector<HexId> k_ring(const HexId& h, int k);
std::int64_t hex_distance(const HexId& a, const HexId& b);

std::vector<HexId> polyfill(const Polygon& poly, int res, const GridSpec& g);

// Cells whose center lies in the closed box [lo, hi]. Pad the box by edge(res)
// to catch every cell that merely touches it.
std::vector<HexId> cells_in_box(const Point& lo, const Point& hi, int res, const GridSpec& g);

std::string encode_hexid(const HexId& h);
HexId decode_hexid(const std::string& text);

}  // namespace hexposome

template <>
struct std::hash<hexposome::HexId> {
    size_t operator()(const hexposome::HexId& h) const noexcept {
        size_t seed = std::hash<int>{}(h.res);
        seed ^= std::hash<std::int64_t>{}(h.q) + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2);
        seed ^= std::hash<std::int64_t>{}(h.r) + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2);
        return seed;
    }
};
