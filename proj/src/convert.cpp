#include "hexposome/convert.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <unordered_map>

#include "hexposome/util.hpp"

namespace hexposome {

Aggregation parse_aggregation(const std::string& name) {
    if (name == "mean") return Aggregation::mean;
    if (name == "sum") return Aggregation::sum;
    if (name == "count") return Aggregation::count;
    if (name == "min") return Aggregation::min;
    if (name == "max") return Aggregation::max;
    throw std::invalid_argument("unknown aggregation: " + name);
}

Semantics parse_semantics(const std::string& name) {
    if (name == "intensive") return Semantics::intensive;
    if (name == "extensive") return Semantics::extensive;
    if (name == "categorical") return Semantics::categorical;
    throw std::invalid_argument("unknown semantics: " + name);
}

namespace {

struct BBox {
    double xmin = 0, ymin = 0, xmax = 0, ymax = 0;
};

BBox expand(BBox b, double pad) {
    return {b.xmin - pad, b.ymin - pad, b.xmax + pad, b.ymax + pad};
}

bool bbox_intersects(const BBox& a, const BBox& b) {
    return a.xmin <= b.xmax && b.xmin <= a.xmax && a.ymin <= b.ymax && b.ymin <= a.ymax;
}

BBox raster_bbox(const RasterGrid& src) {
    return {src.xll, src.yll, src.xll + src.ncols * src.cellsize, src.yll + src.nrows * src.cellsize};
}

BBox polygon_bbox(const Polygon& poly) {
    BBox b{poly.exterior[0].x, poly.exterior[0].y, poly.exterior[0].x, poly.exterior[0].y};
    for (const Point& p : poly.exterior) {
        b.xmin = std::min(b.xmin, p.x);
        b.ymin = std::min(b.ymin, p.y);
        b.xmax = std::max(b.xmax, p.x);
        b.ymax = std::max(b.ymax, p.y);
    }
    return b;
}

BBox feature_bbox(const std::vector<Polygon>& polys) {
    BBox b = polygon_bbox(polys.front());
    for (size_t i = 1; i < polys.size(); ++i) {
        const BBox pb = polygon_bbox(polys[i]);
        b.xmin = std::min(b.xmin, pb.xmin);
        b.ymin = std::min(b.ymin, pb.ymin);
        b.xmax = std::max(b.xmax, pb.xmax);
        b.ymax = std::max(b.ymax, pb.ymax);
    }
    return b;
}

BBox features_bbox(const FeatureSet& fs) {
    BBox b = feature_bbox(fs.geoms.front());
    for (size_t i = 1; i < fs.geoms.size(); ++i) {
        const BBox fb = feature_bbox(fs.geoms[i]);
        b.xmin = std::min(b.xmin, fb.xmin);
        b.ymin = std::min(b.ymin, fb.ymin);
        b.xmax = std::max(b.xmax, fb.xmax);
        b.ymax = std::max(b.ymax, fb.ymax);
    }
    return b;
}

// All cells whose center could fall inside the box. The box should already be
// padded by the circumradius when callers need intersecting cells.
void cells_covering_bbox(const BBox& b, int res, const GridSpec& g, std::vector<HexId>& out) {
    out.clear();
    double qlo = 0, qhi = 0, rlo = 0, rhi = 0;
    bool first = true;
    for (const Point corner : {Point{b.xmin, b.ymin}, Point{b.xmax, b.ymin}, Point{b.xmax, b.ymax},
                               Point{b.xmin, b.ymax}}) {
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
    const auto q0 = static_cast<std::int64_t>(std::floor(qlo)) - 1;
    const auto q1 = static_cast<std::int64_t>(std::ceil(qhi)) + 1;
    const auto r0 = static_cast<std::int64_t>(std::floor(rlo)) - 1;
    const auto r1 = static_cast<std::int64_t>(std::ceil(rhi)) + 1;
    for (std::int64_t q = q0; q <= q1; ++q) {
        for (std::int64_t r = r0; r <= r1; ++r) {
            const HexId h{res, q, r};
            const Point c = cell_center(h, g);
            if (c.x >= b.xmin && c.x <= b.xmax && c.y >= b.ymin && c.y <= b.ymax) out.push_back(h);
        }
    }
}

Point pixel_center(const RasterGrid& src, int row, int col) {
    const double ytop = src.yll + src.nrows * src.cellsize;
    return {src.xll + (col + 0.5) * src.cellsize, ytop - (row + 0.5) * src.cellsize};
}

struct CentroidAcc {
    double sum = 0.0;
    double mn = std::numeric_limits<double>::infinity();
    double mx = -std::numeric_limits<double>::infinity();
    std::int64_t count = 0;
};

double centroid_value(const CentroidAcc& a, Aggregation agg) {
    switch (agg) {
        case Aggregation::mean: return a.sum / static_cast<double>(a.count);
        case Aggregation::sum: return a.sum;
        case Aggregation::count: return static_cast<double>(a.count);
        case Aggregation::min: return a.mn;
        case Aggregation::max: return a.mx;
    }
    throw std::logic_error("unreachable");
}

// Accumulators live in first-touch order; contributions must arrive in
// ascending source order so chunked and unchunked runs add in the same order.
template <typename Acc>
struct HexAccMap {
    std::unordered_map<HexId, size_t> slots;
    std::vector<std::pair<HexId, Acc>> accs;

    Acc& at(const HexId& h) {
        auto [it, inserted] = slots.try_emplace(h, accs.size());
        if (inserted) accs.push_back({h, Acc{}});
        return accs[it->second].second;
    }
};

HexFrame frame_shell(int res, const GridSpec& g, std::vector<std::string> variables) {
    HexFrame frame;
    frame.res = res;
    frame.base_edge_s0 = g.base_edge_s0;
    frame.rotation_sign = g.rotation_sign;
    frame.variables = std::move(variables);
    return frame;
}

void centroid_add(CentroidAcc& acc, double v) {
    acc.sum += v;
    acc.mn = std::min(acc.mn, v);
    acc.mx = std::max(acc.mx, v);
    acc.count += 1;
}

HexFrame centroid_finalize(HexAccMap<CentroidAcc>& map, Aggregation agg, int res, const GridSpec& g,
                           const std::string& variable, const std::string& period) {
    HexFrame frame = frame_shell(res, g, {variable});
    for (const auto& [hex, acc] : map.accs) {
        frame.rows.push_back({hex, period, {centroid_value(acc, agg)}});
    }
    frame.sort_canonical();
    return frame;
}

struct OverlayAcc {
    double num = 0.0;  // intensive numerator
    double den = 0.0;  // intensive denominator
    double cov = 0.0;
    double sum = 0.0;  // extensive
    bool any = false;
    std::map<std::string, double> category_area;
};

void overlay_add(OverlayAcc& acc, const OverlayRecord& rec, double v, Semantics sem) {
    if (std::isnan(v)) return;
    switch (sem) {
        case Semantics::intensive:
            acc.num += rec.fragment_area * v;
            acc.den += rec.fragment_area;
            acc.cov += rec.frac_of_hex;
            break;
        case Semantics::extensive:
            acc.sum += v * rec.frac_of_source;
            acc.any = true;
            break;
        case Semantics::categorical:
            throw std::logic_error("categorical handled separately");
    }
}

void overlay_add_label(OverlayAcc& acc, const OverlayRecord& rec, const std::string& label) {
    if (label.empty()) return;
    acc.category_area[label] += rec.fragment_area;
    acc.any = true;
}

double winning_label_value(const OverlayAcc& acc) {
    const std::string* best = nullptr;
    double best_area = -1.0;
    for (const auto& [label, area] : acc.category_area) {
        // std::map iterates labels in ascending text order, so a strict
        // comparison leaves the lexicographically smallest winner on ties.
        if (area > best_area) {
            best_area = area;
            best = &label;
        }
    }
    if (!best) throw std::logic_error("no categories accumulated");
    try {
        return parse_double(*best);
    } catch (const std::invalid_argument&) {
        throw std::invalid_argument("categorical label is not numeric-coded: '" + *best + "'");
    }
}

HexFrame overlay_finalize(HexAccMap<OverlayAcc>& map, Semantics sem, int res, const GridSpec& g,
                          const std::string& variable, const std::string& period) {
    const bool with_coverage = sem == Semantics::intensive;
    HexFrame frame = frame_shell(res, g,
                                 with_coverage ? std::vector<std::string>{variable, variable + "_coverage"}
                                               : std::vector<std::string>{variable});
    for (const auto& [hex, acc] : map.accs) {
        switch (sem) {
            case Semantics::intensive:
                if (acc.cov < kCoverageThreshold) continue;
                frame.rows.push_back({hex, period, {acc.num / acc.den, acc.cov}});
                break;
            case Semantics::extensive:
                if (!acc.any) continue;
                frame.rows.push_back({hex, period, {acc.sum}});
                break;
            case Semantics::categorical:
                if (!acc.any) continue;
                frame.rows.push_back({hex, period, {winning_label_value(acc)}});
                break;
        }
    }
    frame.sort_canonical();
    return frame;
}

}  // namespace

HexFrame centroid_aggregate(const RasterGrid& src, int res, const GridSpec& g, Aggregation agg,
                            const std::string& variable, const std::string& period) {
    HexAccMap<CentroidAcc> acc;
    bool any = false;
    for (int row = 0; row < src.nrows; ++row) {
        for (int col = 0; col < src.ncols; ++col) {
            const double v = src.at(row, col);
            if (src.is_nodata(v)) continue;
            any = true;
            centroid_add(acc.at(point_to_cell(pixel_center(src, row, col), res, g)), v);
        }
    }
    if (!any) throw std::invalid_argument("empty source: no valid pixels");
    return centroid_finalize(acc, agg, res, g, variable, period);
}

HexFrame centroid_aggregate(const Table& points, const std::string& x_col, const std::string& y_col,
                            const std::string& value_col, int res, const GridSpec& g, Aggregation agg,
                            const std::string& variable, const std::string& period) {
    const int xi = points.require_column(x_col);
    const int yi = points.require_column(y_col);
    const int vi = points.require_column(value_col);
    if (points.columns[xi].kind != ColumnKind::number || points.columns[yi].kind != ColumnKind::number ||
        points.columns[vi].kind != ColumnKind::number) {
        throw std::invalid_argument("x, y, and value columns must be numeric");
    }
    HexAccMap<CentroidAcc> acc;
    bool any = false;
    for (const auto& row : points.rows) {
        if (row[xi].missing || row[yi].missing || row[vi].missing) continue;
        any = true;
        centroid_add(acc.at(point_to_cell({row[xi].number, row[yi].number}, res, g)), row[vi].number);
    }
    if (!any) throw std::invalid_argument("empty source: no usable points");
    return centroid_finalize(acc, agg, res, g, variable, period);
}

HexFrame polyfill_assign(const FeatureSet& features, const std::string& value_field, int res,
                         const GridSpec& g, const std::string& variable, const std::string& period) {
    const int vi = features.props.require_column(value_field);
    if (features.props.columns[vi].kind != ColumnKind::number) {
        throw std::invalid_argument("value field must be numeric: " + value_field);
    }
    std::unordered_map<HexId, double> assigned;
    for (size_t f = 0; f < features.size(); ++f) {
        const Cell& cell = features.props.rows[f][vi];
        if (cell.missing) continue;
        for (const Polygon& poly : features.geoms[f]) {
            for (const HexId& h : polyfill(poly, res, g)) {
                assigned[h] = cell.number;  // later features overwrite earlier ones
            }
        }
    }
    HexFrame frame = frame_shell(res, g, {variable});
    frame.rows.reserve(assigned.size());
    for (const auto& [hex, v] : assigned) frame.rows.push_back({hex, period, {v}});
    frame.sort_canonical();
    return frame;
}

std::string raster_checksum(const RasterGrid& src) {
    std::ostringstream ss;
    ss << "raster;" << src.ncols << ';' << src.nrows << ';' << format_double(src.xll) << ';'
       << format_double(src.yll) << ';' << format_double(src.cellsize) << ';'
       << format_double(src.nodata) << ';';
    for (double v : src.values) ss << format_double(v) << ',';
    return sha256_hex(ss.str());
}

std::string features_checksum(const FeatureSet& features) {
    std::ostringstream ss;
    for (size_t f = 0; f < features.size(); ++f) {
        ss << 'F' << f << ';';
        for (const Polygon& poly : features.geoms[f]) {
            ss << "P;";
            for (const Point& p : poly.exterior) ss << format_double(p.x) << ',' << format_double(p.y) << ';';
            for (const auto& hole : poly.holes) {
                ss << "H;";
                for (const Point& p : hole) ss << format_double(p.x) << ',' << format_double(p.y) << ';';
            }
        }
    }
    return sha256_hex(ss.str());
}

namespace {

void overlay_records_for_pixel(const RasterGrid& src, int row, int col, std::int64_t index, int res,
                               const GridSpec& g, double cell_area, std::vector<HexId>& scratch,
                               std::vector<OverlayRecord>& out) {
    const Polygon pix = pixel_polygon(src, row, col);
    const double source_area = polygon_area(pix);
    if (source_area <= 0) return;
    cells_covering_bbox(expand(polygon_bbox(pix), g.edge(res)), res, g, scratch);
    for (const HexId& h : scratch) {
        const double frag = intersection_area(pix, cell_boundary(h, g));
        if (frag > cell_area * kFragmentNoiseFloor)
            out.push_back({index, h, frag, frag / source_area, frag / cell_area});
    }
}

void overlay_records_for_feature(const std::vector<Polygon>& polys, std::int64_t index, int res,
                                 const GridSpec& g, double cell_area, std::vector<HexId>& scratch,
                                 std::vector<OverlayRecord>& out) {
    double source_area = 0.0;
    for (const Polygon& poly : polys) source_area += polygon_area(poly);
    if (source_area <= 0) return;
    cells_covering_bbox(expand(feature_bbox(polys), g.edge(res)), res, g, scratch);
    for (const HexId& h : scratch) {
        const auto ring = cell_boundary(h, g);
        double frag = 0.0;
        for (const Polygon& poly : polys) frag += intersection_area(poly, ring);
        if (frag > cell_area * kFragmentNoiseFloor)
            out.push_back({index, h, frag, frag / source_area, frag / cell_area});
    }
}

void sort_records(std::vector<OverlayRecord>& records) {
    std::sort(records.begin(), records.end(), [](const OverlayRecord& a, const OverlayRecord& b) {
        if (a.source_index != b.source_index) return a.source_index < b.source_index;
        return a.hex < b.hex;
    });
}

}  // namespace

GridSpec grid_from_fingerprint(const std::string& fp) {
    GridSpec g;
    if (std::sscanf(fp.c_str(), "hexgrid:%lf,%lf;%lf;%d;%d", &g.origin.x, &g.origin.y,
                    &g.base_edge_s0, &g.rotation_sign, &g.max_resolution) != 5) {
        throw std::invalid_argument("unparseable grid fingerprint: " + fp);
    }
    return g;
}

OverlayMap build_overlay_map(const RasterGrid& src, int res, const GridSpec& g) {
    OverlayMap map{g.fingerprint(), raster_checksum(src), res, {}};
    const double carea = g.cell_area(res);
    std::vector<HexId> scratch;
    for (int row = 0; row < src.nrows; ++row) {
        for (int col = 0; col < src.ncols; ++col) {
            const std::int64_t index = static_cast<std::int64_t>(row) * src.ncols + col;
            overlay_records_for_pixel(src, row, col, index, res, g, carea, scratch, map.records);
        }
    }
    sort_records(map.records);
    return map;
}

OverlayMap build_overlay_map(const FeatureSet& features, int res, const GridSpec& g) {
    OverlayMap map{g.fingerprint(), features_checksum(features), res, {}};
    const double carea = g.cell_area(res);
    std::vector<HexId> scratch;
    for (size_t f = 0; f < features.size(); ++f) {
        overlay_records_for_feature(features.geoms[f], static_cast<std::int64_t>(f), res, g, carea,
                                    scratch, map.records);
    }
    sort_records(map.records);
    return map;
}

void check_overlay_grid(const OverlayMap& map, const GridSpec& g, int res) {
    if (map.grid_fingerprint != g.fingerprint() || map.res != res) {
        throw std::invalid_argument("overlay map grid mismatch: map is " + map.grid_fingerprint +
                                    " res=" + std::to_string(map.res));
    }
}

std::vector<double> raster_values(const RasterGrid& src) {
    std::vector<double> out;
    out.reserve(src.values.size());
    for (double v : src.values) out.push_back(src.is_nodata(v) ? std::nan("") : v);
    return out;
}

std::vector<double> feature_values(const FeatureSet& features, const std::string& value_field) {
    const int vi = features.props.require_column(value_field);
    if (features.props.columns[vi].kind != ColumnKind::number) {
        throw std::invalid_argument("value field must be numeric: " + value_field);
    }
    std::vector<double> out;
    out.reserve(features.size());
    for (const auto& row : features.props.rows) {
        out.push_back(row[vi].missing ? std::nan("") : row[vi].number);
    }
    return out;
}

HexFrame apply_overlay(const OverlayMap& map, const std::vector<double>& values, Semantics sem,
                       const std::string& variable, const std::string& period) {
    if (sem == Semantics::categorical) {
        throw std::invalid_argument("categorical semantics needs labeled values; use apply_overlay_categorical");
    }
    HexAccMap<OverlayAcc> acc;
    for (const OverlayRecord& rec : map.records) {
        if (rec.source_index < 0 || static_cast<size_t>(rec.source_index) >= values.size()) {
            throw std::invalid_argument("values do not cover source index " +
                                        std::to_string(rec.source_index));
        }
        overlay_add(acc.at(rec.hex), rec, values[rec.source_index], sem);
    }
    return overlay_finalize(acc, sem, map.res, grid_from_fingerprint(map.grid_fingerprint), variable,
                            period);
}

HexFrame apply_overlay_categorical(const OverlayMap& map, const std::vector<std::string>& labels,
                                   const std::string& variable, const std::string& period) {
    HexAccMap<OverlayAcc> acc;
    for (const OverlayRecord& rec : map.records) {
        if (rec.source_index < 0 || static_cast<size_t>(rec.source_index) >= labels.size()) {
            throw std::invalid_argument("labels do not cover source index " +
                                        std::to_string(rec.source_index));
        }
        overlay_add_label(acc.at(rec.hex), rec, labels[rec.source_index]);
    }
    return overlay_finalize(acc, Semantics::categorical, map.res,
                            grid_from_fingerprint(map.grid_fingerprint), variable, period);
}

double max_source_diameter(const RasterGrid& src) {
    return src.cellsize * std::sqrt(2.0);
}

double max_source_diameter(const FeatureSet& features) {
    double best = 0.0;
    for (const auto& polys : features.geoms) {
        const BBox b = feature_bbox(polys);
        best = std::max(best, std::hypot(b.xmax - b.xmin, b.ymax - b.ymin));
    }
    return best;
}

double required_halo(ConvertStrategy::Kind kind, double circumradius, double max_diameter) {
    switch (kind) {
        case ConvertStrategy::Kind::centroid: return circumradius;
        case ConvertStrategy::Kind::polyfill: return 0.0;
        case ConvertStrategy::Kind::overlay: return circumradius + max_diameter;
    }
    throw std::logic_error("unreachable");
}

namespace {

struct ChunkKey {
    std::int64_t ix = 0;
    std::int64_t iy = 0;
    friend bool operator==(const ChunkKey&, const ChunkKey&) = default;
};

// Half-open intervals anchored at the grid origin: a hex center exactly on a
// boundary lands in exactly one chunk.
ChunkKey chunk_of(const Point& p, const GridSpec& g, double width) {
    return {static_cast<std::int64_t>(std::floor((p.x - g.origin.x) / width)),
            static_cast<std::int64_t>(std::floor((p.y - g.origin.y) / width))};
}

BBox chunk_bbox(const ChunkKey& key, const GridSpec& g, double width) {
    return {g.origin.x + key.ix * width, g.origin.y + key.iy * width,
            g.origin.x + (key.ix + 1) * width, g.origin.y + (key.iy + 1) * width};
}

std::vector<ChunkKey> chunk_range(const BBox& covered, const GridSpec& g, double width) {
    const ChunkKey lo = chunk_of({covered.xmin, covered.ymin}, g, width);
    const ChunkKey hi = chunk_of({covered.xmax, covered.ymax}, g, width);
    std::vector<ChunkKey> keys;
    for (std::int64_t ix = lo.ix; ix <= hi.ix; ++ix) {
        for (std::int64_t iy = lo.iy; iy <= hi.iy; ++iy) keys.push_back({ix, iy});
    }
    return keys;
}

void validate_chunk_spec(const ChunkSpec& spec, ConvertStrategy::Kind kind, double circumradius,
                         double max_diameter) {
    if (spec.chunk_width <= 0) throw std::invalid_argument("chunk_width must be positive");
    const double need = required_halo(kind, circumradius, max_diameter);
    if (spec.halo < need) {
        throw std::invalid_argument("halo " + format_double(spec.halo) + " km is below the required minimum " +
                                    format_double(need) + " km for this strategy");
    }
}

// Rows for the hexes centered in one chunk. Contributions are accumulated in
// ascending source order, which makes the result bit-identical to the
// unchunked computation.
std::vector<HexFrame::Row> chunk_rows_raster(const RasterGrid& src, int res, const GridSpec& g,
                                             const ConvertStrategy& strat, const ChunkSpec& spec,
                                             const ChunkKey& key) {
    const BBox window = expand(chunk_bbox(key, g, spec.chunk_width), spec.halo);
    const double carea = g.cell_area(res);

    const double ytop = src.yll + src.nrows * src.cellsize;
    const int col_lo = std::max(0, static_cast<int>(std::floor((window.xmin - src.xll) / src.cellsize)) - 1);
    const int col_hi = std::min(src.ncols - 1, static_cast<int>(std::ceil((window.xmax - src.xll) / src.cellsize)));
    const int row_lo = std::max(0, static_cast<int>(std::floor((ytop - window.ymax) / src.cellsize)) - 1);
    const int row_hi = std::min(src.nrows - 1, static_cast<int>(std::ceil((ytop - window.ymin) / src.cellsize)));

    if (strat.kind == ConvertStrategy::Kind::centroid) {
        HexAccMap<CentroidAcc> acc;
        for (int row = row_lo; row <= row_hi; ++row) {
            for (int col = col_lo; col <= col_hi; ++col) {
                const double v = src.at(row, col);
                if (src.is_nodata(v)) continue;
                const Point c = pixel_center(src, row, col);
                if (c.x < window.xmin || c.x > window.xmax || c.y < window.ymin || c.y > window.ymax) continue;
                const HexId h = point_to_cell(c, res, g);
                if (!(chunk_of(cell_center(h, g), g, spec.chunk_width) == key)) continue;
                centroid_add(acc.at(h), v);
            }
        }
        HexFrame f = centroid_finalize(acc, strat.agg, res, g, strat.variable, strat.period);
        return std::move(f.rows);
    }

    if (strat.kind == ConvertStrategy::Kind::overlay) {
        HexAccMap<OverlayAcc> acc;
        std::vector<HexId> scratch;
        std::vector<OverlayRecord> recs;
        for (int row = row_lo; row <= row_hi; ++row) {
            for (int col = col_lo; col <= col_hi; ++col) {
                const std::int64_t index = static_cast<std::int64_t>(row) * src.ncols + col;
                const Polygon pix = pixel_polygon(src, row, col);
                if (!bbox_intersects(polygon_bbox(pix), window)) continue;
                recs.clear();
                overlay_records_for_pixel(src, row, col, index, res, g, carea, scratch, recs);
                const double v = src.is_nodata(src.at(row, col)) ? std::nan("") : src.at(row, col);
                for (const OverlayRecord& rec : recs) {
                    if (!(chunk_of(cell_center(rec.hex, g), g, spec.chunk_width) == key)) continue;
                    if (strat.sem == Semantics::categorical) {
                        overlay_add_label(acc.at(rec.hex), rec, std::isnan(v) ? "" : format_double(v));
                    } else {
                        overlay_add(acc.at(rec.hex), rec, v, strat.sem);
                    }
                }
            }
        }
        HexFrame f = overlay_finalize(acc, strat.sem, res, g, strat.variable, strat.period);
        return std::move(f.rows);
    }

    throw std::invalid_argument("raster sources support centroid and overlay strategies");
}

std::vector<HexFrame::Row> chunk_rows_features(const FeatureSet& src, int res, const GridSpec& g,
                                               const ConvertStrategy& strat, const ChunkSpec& spec,
                                               const ChunkKey& key, const std::vector<double>& values) {
    const BBox chunk = chunk_bbox(key, g, spec.chunk_width);
    const BBox window = expand(chunk, spec.halo);
    const double carea = g.cell_area(res);
    const double pad = g.edge(res);

    if (strat.kind == ConvertStrategy::Kind::polyfill) {
        std::unordered_map<HexId, double> assigned;
        std::vector<HexId> scratch;
        for (size_t f = 0; f < src.size(); ++f) {
            if (std::isnan(values[f])) continue;
            for (const Polygon& poly : src.geoms[f]) {
                BBox b = polygon_bbox(poly);
                if (!bbox_intersects(b, window)) continue;
                // Only centers inside both the feature and this chunk matter.
                BBox scan{std::max(b.xmin - pad, chunk.xmin - pad), std::max(b.ymin - pad, chunk.ymin - pad),
                          std::min(b.xmax + pad, chunk.xmax + pad), std::min(b.ymax + pad, chunk.ymax + pad)};
                if (scan.xmin > scan.xmax || scan.ymin > scan.ymax) continue;
                cells_covering_bbox(scan, res, g, scratch);
                for (const HexId& h : scratch) {
                    const Point c = cell_center(h, g);
                    if (!(chunk_of(c, g, spec.chunk_width) == key)) continue;
                    if (point_in_polygon(c, poly)) assigned[h] = values[f];
                }
            }
        }
        std::vector<HexFrame::Row> rows;
        rows.reserve(assigned.size());
        for (const auto& [hex, v] : assigned) rows.push_back({hex, strat.period, {v}});
        return rows;
    }

    if (strat.kind == ConvertStrategy::Kind::overlay) {
        HexAccMap<OverlayAcc> acc;
        std::vector<HexId> scratch;
        for (size_t f = 0; f < src.size(); ++f) {
            const BBox fb = feature_bbox(src.geoms[f]);
            if (!bbox_intersects(fb, window)) continue;
            double source_area = 0.0;
            for (const Polygon& poly : src.geoms[f]) source_area += polygon_area(poly);
            if (source_area <= 0) continue;
            BBox scan{std::max(fb.xmin - pad, chunk.xmin - pad), std::max(fb.ymin - pad, chunk.ymin - pad),
                      std::min(fb.xmax + pad, chunk.xmax + pad), std::min(fb.ymax + pad, chunk.ymax + pad)};
            if (scan.xmin > scan.xmax || scan.ymin > scan.ymax) continue;
            cells_covering_bbox(scan, res, g, scratch);
            const double v = values[f];
            for (const HexId& h : scratch) {
                if (!(chunk_of(cell_center(h, g), g, spec.chunk_width) == key)) continue;
                const auto ring = cell_boundary(h, g);
                double frag = 0.0;
                for (const Polygon& poly : src.geoms[f]) frag += intersection_area(poly, ring);
                if (!(frag > carea * kFragmentNoiseFloor)) continue;
                const OverlayRecord rec{static_cast<std::int64_t>(f), h, frag, frag / source_area,
                                        frag / carea};
                if (strat.sem == Semantics::categorical) {
                    overlay_add_label(acc.at(h), rec, std::isnan(v) ? "" : format_double(v));
                } else {
                    overlay_add(acc.at(h), rec, v, strat.sem);
                }
            }
        }
        HexFrame fr = overlay_finalize(acc, strat.sem, res, g, strat.variable, strat.period);
        return std::move(fr.rows);
    }

    throw std::invalid_argument("feature sources support polyfill and overlay strategies");
}

template <typename ChunkFn>
HexFrame run_chunks(const std::vector<ChunkKey>& keys, int res, const GridSpec& g,
                    const ConvertStrategy& strat, int threads, ChunkFn&& chunk_fn) {
    std::vector<std::vector<HexFrame::Row>> results(keys.size());
    const int n = std::min<int>(resolve_threads(threads), static_cast<int>(keys.size()));
    if (n <= 1) {
        for (size_t i = 0; i < keys.size(); ++i) results[i] = chunk_fn(keys[i]);
    } else {
        std::atomic<size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(n);
        for (int t = 0; t < n; ++t) {
            pool.emplace_back([&] {
                for (size_t i = next.fetch_add(1); i < keys.size(); i = next.fetch_add(1)) {
                    results[i] = chunk_fn(keys[i]);
                }
            });
        }
        for (auto& th : pool) th.join();
    }

    const bool with_coverage =
        strat.kind == ConvertStrategy::Kind::overlay && strat.sem == Semantics::intensive;
    HexFrame frame = frame_shell(res, g,
                                 with_coverage
                                     ? std::vector<std::string>{strat.variable, strat.variable + "_coverage"}
                                     : std::vector<std::string>{strat.variable});
    for (auto& rows : results) {
        frame.rows.insert(frame.rows.end(), std::make_move_iterator(rows.begin()),
                          std::make_move_iterator(rows.end()));
    }
    frame.sort_canonical();
    return frame;
}

}  // namespace

HexFrame chunked_convert(const RasterGrid& src, int res, const GridSpec& g,
                         const ConvertStrategy& strat, const ChunkSpec& spec, int threads) {
    if (strat.kind == ConvertStrategy::Kind::polyfill) {
        throw std::invalid_argument("raster sources support centroid and overlay strategies");
    }
    validate_chunk_spec(spec, strat.kind, g.edge(res), max_source_diameter(src));
    if (strat.kind == ConvertStrategy::Kind::centroid) {
        bool any = false;
        for (double v : src.values) {
            if (!src.is_nodata(v)) {
                any = true;
                break;
            }
        }
        if (!any) throw std::invalid_argument("empty source: no valid pixels");
    }
    const auto keys = chunk_range(expand(raster_bbox(src), g.edge(res)), g, spec.chunk_width);
    return run_chunks(keys, res, g, strat, threads,
                      [&](const ChunkKey& key) { return chunk_rows_raster(src, res, g, strat, spec, key); });
}

HexFrame chunked_convert(const FeatureSet& src, int res, const GridSpec& g,
                         const ConvertStrategy& strat, const ChunkSpec& spec, int threads) {
    if (strat.kind == ConvertStrategy::Kind::centroid) {
        throw std::invalid_argument("feature sources support polyfill and overlay strategies");
    }
    if (src.size() == 0) {
        HexFrame empty = frame_shell(res, g, {strat.variable});
        return empty;
    }
    validate_chunk_spec(spec, strat.kind, g.edge(res), max_source_diameter(src));
    const std::vector<double> values = feature_values(src, strat.value_field);
    const auto keys = chunk_range(expand(features_bbox(src), g.edge(res)), g, spec.chunk_width);
    return run_chunks(keys, res, g, strat, threads, [&](const ChunkKey& key) {
        return chunk_rows_features(src, res, g, strat, spec, key, values);
    });
}

void write_overlay_map(const OverlayMap& map, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << "#grid " << map.grid_fingerprint << " res=" << map.res << '\n';
    out << "#source sha256=" << map.source_checksum << '\n';
    out << "source_index,hex_id,fragment_area,frac_of_source,frac_of_hex\n";
    for (const OverlayRecord& rec : map.records) {
        out << rec.source_index << ',' << encode_hexid(rec.hex) << ',' << format_double(rec.fragment_area)
            << ',' << format_double(rec.frac_of_source) << ',' << format_double(rec.frac_of_hex) << '\n';
    }
}

OverlayMap read_overlay_map(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    OverlayMap map;
    std::string line;
    size_t lineno = 0;
    bool grid_seen = false, source_seen = false, header_seen = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (line.rfind("#grid ", 0) == 0) {
                const auto res_pos = line.rfind(" res=");
                if (res_pos == std::string::npos) {
                    throw std::invalid_argument(path + ": #grid line missing res=");
                }
                map.grid_fingerprint = line.substr(6, res_pos - 6);
                map.res = std::stoi(line.substr(res_pos + 5));
                grid_seen = true;
            } else if (line.rfind("#source sha256=", 0) == 0) {
                map.source_checksum = line.substr(15);
                source_seen = true;
            }
            continue;
        }
        if (!header_seen) {
            if (line != "source_index,hex_id,fragment_area,frac_of_source,frac_of_hex") {
                throw std::invalid_argument(path + ": unexpected header: " + line);
            }
            header_seen = true;
            continue;
        }
        std::istringstream ss(line);
        std::string tok;
        std::vector<std::string> fields;
        while (std::getline(ss, tok, ',')) fields.push_back(tok);
        if (fields.size() != 5) {
            throw std::invalid_argument(path + ": line " + std::to_string(lineno) + ": expected 5 fields");
        }
        OverlayRecord rec;
        rec.source_index = std::stoll(fields[0]);
        rec.hex = decode_hexid(fields[1]);
        rec.fragment_area = parse_double(fields[2]);
        rec.frac_of_source = parse_double(fields[3]);
        rec.frac_of_hex = parse_double(fields[4]);
        if (rec.frac_of_source < 0 || rec.frac_of_source > 1 + 1e-9 || rec.frac_of_hex < 0 ||
            rec.frac_of_hex > 1 + 1e-9) {
            throw std::invalid_argument(path + ": line " + std::to_string(lineno) + ": fraction out of range");
        }
        map.records.push_back(rec);
    }
    if (!grid_seen || !source_seen || !header_seen) {
        throw std::invalid_argument(path + ": missing #grid, #source, or column header");
    }
    sort_records(map.records);
    return map;
}

}  // namespace hexposome
