#include <array>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include "doctest.h"
#include "hexposome/convert.hpp"
#include "hexposome/util.hpp"
#include "test_util.hpp"

using namespace hexposome;

namespace {

GridSpec unit_grid() {
    GridSpec g;
    g.base_edge_s0 = 1.0;
    return g;
}

bool frames_identical(const HexFrame& a, const HexFrame& b) {
    if (a.res != b.res || a.base_edge_s0 != b.base_edge_s0 || a.rotation_sign != b.rotation_sign ||
        a.variables != b.variables || a.rows.size() != b.rows.size()) {
        return false;
    }
    for (size_t i = 0; i < a.rows.size(); ++i) {
        if (!(a.rows[i].hex == b.rows[i].hex) || a.rows[i].period != b.rows[i].period) return false;
        if (a.rows[i].values.size() != b.rows[i].values.size()) return false;
        for (size_t j = 0; j < a.rows[i].values.size(); ++j) {
            const double x = a.rows[i].values[j], y = b.rows[i].values[j];
            if (std::isnan(x) != std::isnan(y)) return false;
            if (!std::isnan(x) && x != y) return false;  // bitwise-equal values required
        }
    }
    return true;
}

Table point_table(std::initializer_list<std::array<double, 3>> pts) {
    Table t;
    t.columns = {{"x", ColumnKind::number}, {"y", ColumnKind::number}, {"v", ColumnKind::number}};
    for (const auto& p : pts) t.rows.push_back({Cell::num(p[0]), Cell::num(p[1]), Cell::num(p[2])});
    return t;
}

// Smooth synthetic raster, fixed seed, a sprinkle of nodata.
RasterGrid synthetic_raster(int n, double cellsize, double x0, double y0, bool with_nodata) {
    RasterGrid r;
    r.ncols = n;
    r.nrows = n;
    r.xll = x0;
    r.yll = y0;
    r.cellsize = cellsize;
    r.nodata = -9999;
    std::mt19937 rng(4242);
    std::uniform_real_distribution<double> noise(-0.5, 0.5);
    std::uniform_real_distribution<double> gap(0.0, 1.0);
    for (int row = 0; row < n; ++row) {
        for (int col = 0; col < n; ++col) {
            if (with_nodata && gap(rng) < 0.03) {
                r.values.push_back(-9999);
                continue;
            }
            const double x = x0 + (col + 0.5) * cellsize;
            const double y = y0 + (n - row - 0.5) * cellsize;
            r.values.push_back(20.0 + 0.3 * x + 0.2 * y + std::sin(0.05 * x) + noise(rng));
        }
    }
    return r;
}

FeatureSet square_feature(double xmin, double ymin, double xmax, double ymax, double v) {
    FeatureSet fs;
    fs.geoms.push_back({Polygon{{{xmin, ymin}, {xmax, ymin}, {xmax, ymax}, {xmin, ymax}}, {}}});
    fs.props.columns = {{"v", ColumnKind::number}};
    fs.props.rows.push_back({Cell::num(v)});
    return fs;
}

}  // namespace

TEST_CASE("centroid aggregation over point tables") {
    const GridSpec g = unit_grid();
    const Table two = point_table({{0.0, 0.0, 10.0}, {0.1, 0.1, 20.0}});
    const HexFrame mean = centroid_aggregate(two, "x", "y", "v", 0, g, Aggregation::mean, "v");
    REQUIRE(mean.rows.size() == 1);
    CHECK(mean.rows[0].hex == HexId{0, 0, 0});
    CHECK(mean.rows[0].values[0] == 15.0);
    CHECK(centroid_aggregate(two, "x", "y", "v", 0, g, Aggregation::count, "v").rows[0].values[0] == 2.0);
    CHECK(centroid_aggregate(two, "x", "y", "v", 0, g, Aggregation::sum, "v").rows[0].values[0] == 30.0);
    CHECK(centroid_aggregate(two, "x", "y", "v", 0, g, Aggregation::min, "v").rows[0].values[0] == 10.0);
    CHECK(centroid_aggregate(two, "x", "y", "v", 0, g, Aggregation::max, "v").rows[0].values[0] == 20.0);

    Table empty;
    empty.columns = two.columns;
    CHECK_THROWS_WITH_AS(centroid_aggregate(empty, "x", "y", "v", 0, g, Aggregation::mean, "v"),
                         doctest::Contains("empty source"), std::invalid_argument);
    CHECK_THROWS_AS(parse_aggregation("median"), std::invalid_argument);
}

TEST_CASE("centroid aggregation of a constant fine raster is constant") {
    GridSpec g;  // calibrated grid, res 8 hexes
    RasterGrid r;
    r.ncols = 60;
    r.nrows = 60;
    r.xll = 0;
    r.yll = 0;
    r.cellsize = 0.1;
    r.nodata = -9999;
    r.values.assign(3600, 7.0);
    const HexFrame f = centroid_aggregate(r, 8, g, Aggregation::mean, "c");
    CHECK(f.rows.size() > 10);
    for (const auto& row : f.rows) CHECK(row.values[0] == 7.0);
}

TEST_CASE("polyfill assignment: coverage, dropouts, and overlap resolution") {
    const GridSpec g = unit_grid();
    // Rectangle sized to cover a handful of res-2 centers.
    FeatureSet fs = square_feature(-1.0, -1.0, 1.0, 1.0, 3.0);
    const HexFrame f = polyfill_assign(fs, "v", 2, g, "v");
    const auto cells = polyfill(fs.geoms[0][0], 2, g);
    REQUIRE_FALSE(cells.empty());
    CHECK(f.rows.size() == cells.size());
    for (const auto& row : f.rows) CHECK(row.values[0] == 3.0);

    // A polygon holding no center drops out entirely.
    FeatureSet tiny = square_feature(0.83, 0.0, 0.86, 0.02, 5.0);
    CHECK(polyfill(tiny.geoms[0][0], 0, g).empty());
    CHECK(polyfill_assign(tiny, "v", 0, g, "v").rows.empty());

    // Later features win contested cells.
    FeatureSet both;
    both.geoms.push_back({Polygon{{{-1, -1}, {1, -1}, {1, 1}, {-1, 1}}, {}}});
    both.geoms.push_back({Polygon{{{-1, -1}, {1, -1}, {1, 1}, {-1, 1}}, {}}});
    both.props.columns = {{"v", ColumnKind::number}};
    both.props.rows = {{Cell::num(3.0)}, {Cell::num(9.0)}};
    const HexFrame o = polyfill_assign(both, "v", 2, g, "v");
    CHECK(o.rows.size() == cells.size());
    for (const auto& row : o.rows) CHECK(row.values[0] == 9.0);

    CHECK_THROWS_WITH_AS(polyfill_assign(fs, "absent", 2, g, "v"), doctest::Contains("missing column"),
                         std::invalid_argument);
}

TEST_CASE("overlay map of a cell's own boundary is one full-cover record") {
    GridSpec g;
    const HexId h{8, 40, -17};
    FeatureSet fs;
    fs.geoms.push_back({Polygon{cell_boundary(h, g), {}}});
    fs.props.columns = {{"v", ColumnKind::number}};
    fs.props.rows.push_back({Cell::num(1.0)});
    const OverlayMap map = build_overlay_map(fs, 8, g);
    REQUIRE(map.records.size() == 1);
    CHECK(map.records[0].hex == h);
    CHECK(map.records[0].frac_of_source == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(map.records[0].frac_of_hex == doctest::Approx(1.0).epsilon(1e-9));

    // The grid covers the plane, so only a degenerate source makes no records.
    FeatureSet flat;
    flat.geoms.push_back({Polygon{{{0, 0}, {1, 1}, {2, 2}}, {}}});
    flat.props.columns = {{"v", ColumnKind::number}};
    flat.props.rows.push_back({Cell::num(1.0)});
    CHECK(build_overlay_map(flat, 8, g).records.empty());
}

TEST_CASE("overlay map splits a straddling square 30/70") {
    const GridSpec g = unit_grid();
    // Neighboring res-0 cells share the vertical edge x = sqrt(3)/2.
    const double xe = std::sqrt(3.0) / 2.0;
    FeatureSet fs = square_feature(xe - 0.12, -0.2, xe + 0.28, 0.2, 1.0);
    const OverlayMap map = build_overlay_map(fs, 0, g);
    REQUIRE(map.records.size() == 2);
    const OverlayRecord& left = map.records[0].hex == HexId{0, 0, 0} ? map.records[0] : map.records[1];
    const OverlayRecord& right = map.records[0].hex == HexId{0, 1, 0} ? map.records[0] : map.records[1];
    CHECK(left.hex == HexId{0, 0, 0});
    CHECK(right.hex == HexId{0, 1, 0});
    CHECK(left.frac_of_source == doctest::Approx(0.3).epsilon(1e-9));
    CHECK(right.frac_of_source == doctest::Approx(0.7).epsilon(1e-9));

    // Independent area oracle for the same two fragments.
    const Polygon hex0{cell_boundary(HexId{0, 0, 0}, g), {}};
    const double mc = testutil::mc_area(
        [&](double x, double y) {
            const Point p{x, y};
            return point_in_polygon(p, fs.geoms[0][0]) && point_in_polygon(p, hex0);
        },
        xe - 0.2, -0.3, xe + 0.3, 0.3);
    CHECK(left.fragment_area == doctest::Approx(mc).epsilon(2e-3));
}

TEST_CASE("apply_overlay implements the three semantics") {
    GridSpec g;
    const HexId h{8, 0, 0};
    const double carea = g.cell_area(8);
    OverlayMap map;
    map.grid_fingerprint = g.fingerprint();
    map.source_checksum = "none";
    map.res = 8;
    // Dyadic fragment areas keep the intensive arithmetic exact.
    map.records = {
        {0, h, 0.5, 0.5, 0.5},
        {1, h, 0.5, 0.5, 0.5},
    };

    const HexFrame in = apply_overlay(map, {10.0, 20.0}, Semantics::intensive, "v");
    REQUIRE(in.rows.size() == 1);
    CHECK(in.variables == std::vector<std::string>{"v", "v_coverage"});
    CHECK(in.rows[0].values[0] == 15.0);
    CHECK(in.rows[0].values[1] == 1.0);

    // Missing values drop from numerator, denominator, and coverage.
    const HexFrame in2 = apply_overlay(map, {10.0, std::nan("")}, Semantics::intensive, "v");
    CHECK(in2.rows[0].values[0] == 10.0);
    CHECK(in2.rows[0].values[1] == 0.5);

    OverlayMap split;
    split.grid_fingerprint = g.fingerprint();
    split.source_checksum = "none";
    split.res = 8;
    split.records = {
        {0, HexId{8, 0, 0}, 0.3 * carea, 0.3, 0.3},
        {0, HexId{8, 1, 0}, 0.7 * carea, 0.7, 0.7},
    };
    const HexFrame ex = apply_overlay(split, {100.0}, Semantics::extensive, "v");
    REQUIRE(ex.rows.size() == 2);
    CHECK(ex.variables == std::vector<std::string>{"v"});
    CHECK(ex.rows[0].values[0] + ex.rows[1].values[0] == doctest::Approx(100.0).epsilon(1e-12));
    CHECK(ex.rows[0].values[0] == doctest::Approx(30.0).epsilon(1e-12));

    // Categorical: most prominent wins; ties break on smaller label text.
    const HexFrame cat = apply_overlay_categorical(map, {"1", "2"}, "v");
    REQUIRE(cat.rows.size() == 1);
    CHECK(cat.rows[0].values[0] == 1.0);
    OverlayMap skew;
    skew.grid_fingerprint = g.fingerprint();
    skew.source_checksum = "none";
    skew.res = 8;
    skew.records = {
        {0, h, 0.6 * carea, 1.0, 0.6},
        {1, h, 0.4 * carea, 1.0, 0.4},
    };
    CHECK(apply_overlay_categorical(skew, {"2", "1"}, "v").rows[0].values[0] == 2.0);
    CHECK(apply_overlay_categorical(map, {"10", "9"}, "v").rows[0].values[0] == 10.0);  // tie: "10" < "9"
    CHECK_THROWS_WITH_AS(apply_overlay_categorical(map, {"urban", "rural"}, "v"),
                         doctest::Contains("not numeric-coded"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(apply_overlay(map, {1.0, 2.0}, Semantics::categorical, "v"),
                         doctest::Contains("apply_overlay_categorical"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(apply_overlay(map, {1.0}, Semantics::intensive, "v"),
                         doctest::Contains("do not cover source index"), std::invalid_argument);
}

TEST_CASE("extensive conversion conserves mass on an interior raster") {
    GridSpec g;
    const RasterGrid r = synthetic_raster(20, 1.0, 5.0, 5.0, false);
    const OverlayMap map = build_overlay_map(r, 8, g);
    const HexFrame f = apply_overlay(map, raster_values(r), Semantics::extensive, "v");
    double hex_total = 0.0;
    for (const auto& row : f.rows) hex_total += row.values[0];
    double src_total = 0.0;
    for (double v : r.values) src_total += v;
    CHECK(hex_total == doctest::Approx(src_total).epsilon(1e-9));
}

TEST_CASE("intensive conversion reproduces a constant field") {
    GridSpec g;
    RasterGrid r;
    r.ncols = 30;
    r.nrows = 30;
    r.xll = 2.0;
    r.yll = 2.0;
    r.cellsize = 0.5;
    r.nodata = -9999;
    r.values.assign(900, 13.25);
    const OverlayMap map = build_overlay_map(r, 8, g);
    const HexFrame f = apply_overlay(map, raster_values(r), Semantics::intensive, "v");
    int full = 0;
    for (const auto& row : f.rows) {
        if (row.values[1] >= 1.0 - 1e-9) {
            ++full;
            CHECK(row.values[0] == doctest::Approx(13.25).epsilon(1e-12));
        }
    }
    CHECK(full > 50);
}

TEST_CASE("overlay maps are reusable across variables") {
    GridSpec g;
    const RasterGrid r = synthetic_raster(12, 1.0, 0.0, 0.0, true);
    const OverlayMap map = build_overlay_map(r, 8, g);

    RasterGrid r2 = r;  // same geometry, different values
    for (auto& v : r2.values) {
        if (v != r2.nodata) v = 2.0 * v + 1.0;
    }
    const HexFrame a1 = apply_overlay(map, raster_values(r), Semantics::intensive, "v");
    const HexFrame a2 = apply_overlay(map, raster_values(r2), Semantics::intensive, "v");
    const OverlayMap rebuilt = build_overlay_map(r2, 8, g);
    CHECK(map.source_checksum != rebuilt.source_checksum);  // values differ, geometry fingerprint is the checksum's job
    const HexFrame b2 = apply_overlay(rebuilt, raster_values(r2), Semantics::intensive, "v");
    CHECK(frames_identical(a2, b2));
    CHECK_FALSE(frames_identical(a1, a2));
}

TEST_CASE("centroid mean tracks intensive overlay on fine smooth input") {
    GridSpec g;
    // Pixel area 0.01 km^2 against 0.737 km^2 hexes: ratio ~74.
    const RasterGrid r = synthetic_raster(100, 0.1, 0.0, 0.0, false);
    const HexFrame c = centroid_aggregate(r, 8, g, Aggregation::mean, "v");
    const HexFrame o = apply_overlay(build_overlay_map(r, 8, g), raster_values(r), Semantics::intensive, "v");
    size_t ci = 0;
    int compared = 0;
    for (const auto& row : o.rows) {
        if (row.values[1] < 1.0 - 1e-9) continue;  // interior hexes only
        while (ci < c.rows.size() && !(c.rows[ci].hex == row.hex)) ++ci;
        if (ci == c.rows.size()) break;
        CHECK(std::fabs(c.rows[ci].values[0] - row.values[0]) / std::fabs(row.values[0]) <= 0.02);
        ++compared;
    }
    CHECK(compared >= 20);
}

TEST_CASE("chunked conversion is bit-identical to unchunked") {
    GridSpec g;
    const RasterGrid r = synthetic_raster(100, 0.25, 3.0, -7.0, true);
    const double R = g.edge(8);

    ConvertStrategy cen;
    cen.kind = ConvertStrategy::Kind::centroid;
    cen.agg = Aggregation::mean;
    cen.variable = "v";
    const HexFrame cen_ref = centroid_aggregate(r, 8, g, Aggregation::mean, "v");
    CHECK(frames_identical(cen_ref, chunked_convert(r, 8, g, cen, {5.0, R}, 1)));
    CHECK(frames_identical(cen_ref, chunked_convert(r, 8, g, cen, {2.5, 3 * R}, 1)));

    ConvertStrategy ovl;
    ovl.kind = ConvertStrategy::Kind::overlay;
    ovl.sem = Semantics::intensive;
    ovl.variable = "v";
    const double need = R + max_source_diameter(r);
    const HexFrame ovl_ref = apply_overlay(build_overlay_map(r, 8, g), raster_values(r), Semantics::intensive, "v");
    CHECK(frames_identical(ovl_ref, chunked_convert(r, 8, g, ovl, {5.0, need}, 1)));
    CHECK(frames_identical(ovl_ref, chunked_convert(r, 8, g, ovl, {5.0, need}, 4)));

    ConvertStrategy ext = ovl;
    ext.sem = Semantics::extensive;
    const HexFrame ext_ref = apply_overlay(build_overlay_map(r, 8, g), raster_values(r), Semantics::extensive, "v");
    CHECK(frames_identical(ext_ref, chunked_convert(r, 8, g, ext, {7.0, need}, 2)));

    CHECK_THROWS_WITH_AS(chunked_convert(r, 8, g, ovl, {5.0, 0.0}, 1),
                         doctest::Contains("below the required minimum"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(chunked_convert(r, 8, g, cen, {5.0, 0.5 * R}, 1),
                         doctest::Contains("below the required minimum"), std::invalid_argument);
}

TEST_CASE("chunked conversion of features matches unchunked") {
    GridSpec g;
    FeatureSet fs;
    fs.props.columns = {{"v", ColumnKind::number}};
    std::mt19937 rng(77);
    std::uniform_real_distribution<double> off(0.0, 18.0);
    std::uniform_real_distribution<double> sz(0.8, 3.0);
    std::uniform_real_distribution<double> val(1.0, 50.0);
    for (int i = 0; i < 24; ++i) {
        const double x = off(rng), y = off(rng), w = sz(rng), h = sz(rng);
        fs.geoms.push_back({Polygon{{{x, y}, {x + w, y}, {x + w, y + h}, {x, y + h}}, {}}});
        fs.props.rows.push_back({Cell::num(val(rng))});
    }

    ConvertStrategy pf;
    pf.kind = ConvertStrategy::Kind::polyfill;
    pf.value_field = "v";
    pf.variable = "v";
    const HexFrame pf_ref = polyfill_assign(fs, "v", 8, g, "v");
    CHECK(frames_identical(pf_ref, chunked_convert(fs, 8, g, pf, {4.0, 0.0}, 1)));
    CHECK(frames_identical(pf_ref, chunked_convert(fs, 8, g, pf, {3.0, 1.0}, 3)));

    ConvertStrategy ovl;
    ovl.kind = ConvertStrategy::Kind::overlay;
    ovl.sem = Semantics::intensive;
    ovl.value_field = "v";
    ovl.variable = "v";
    const double need = g.edge(8) + max_source_diameter(fs);
    const HexFrame ovl_ref =
        apply_overlay(build_overlay_map(fs, 8, g), feature_values(fs, "v"), Semantics::intensive, "v");
    CHECK(frames_identical(ovl_ref, chunked_convert(fs, 8, g, ovl, {4.0, need}, 1)));
    CHECK(frames_identical(ovl_ref, chunked_convert(fs, 8, g, ovl, {4.0, need}, 4)));

    // A hex centered exactly on a chunk boundary belongs to exactly one chunk.
    const auto rows_once = chunked_convert(fs, 8, g, pf, {0.9, 0.0}, 1);
    std::set<std::string> seen;
    for (const auto& row : rows_once.rows) CHECK(seen.insert(encode_hexid(row.hex)).second);
}

TEST_CASE("overlay map CSV round-trips") {
    testutil::TempDir dir;
    GridSpec g;
    const RasterGrid r = synthetic_raster(6, 1.0, 0.0, 0.0, false);
    const OverlayMap map = build_overlay_map(r, 8, g);
    REQUIRE_FALSE(map.records.empty());
    write_overlay_map(map, dir.file("map.csv"));
    const OverlayMap back = read_overlay_map(dir.file("map.csv"));
    CHECK(back.grid_fingerprint == map.grid_fingerprint);
    CHECK(back.source_checksum == map.source_checksum);
    CHECK(back.res == map.res);
    REQUIRE(back.records.size() == map.records.size());
    for (size_t i = 0; i < map.records.size(); ++i) {
        CHECK(back.records[i].source_index == map.records[i].source_index);
        CHECK(back.records[i].hex == map.records[i].hex);
        CHECK(back.records[i].fragment_area == map.records[i].fragment_area);
        CHECK(back.records[i].frac_of_source == map.records[i].frac_of_source);
        CHECK(back.records[i].frac_of_hex == map.records[i].frac_of_hex);
    }
    CHECK_NOTHROW(check_overlay_grid(back, g, 8));
    GridSpec other = g;
    other.base_edge_s0 *= 2;
    CHECK_THROWS_WITH_AS(check_overlay_grid(back, other, 8), doctest::Contains("grid mismatch"),
                         std::invalid_argument);
    CHECK_THROWS_AS(check_overlay_grid(back, g, 7), std::invalid_argument);

    // Per-source and per-hex fraction sums respect the partition bound.
    std::map<std::int64_t, double> by_source;
    std::map<std::string, double> by_hex;
    for (const auto& rec : map.records) {
        by_source[rec.source_index] += rec.frac_of_source;
        by_hex[encode_hexid(rec.hex)] += rec.frac_of_hex;
    }
    for (const auto& [idx, s] : by_source) CHECK(s <= 1.0 + 1e-9);
    for (const auto& [hex, s] : by_hex) CHECK(s <= 1.0 + 1e-9);
}
