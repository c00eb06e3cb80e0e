#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "hexposome/analytics.hpp"
#include "hexposome/catalog.hpp"
#include "hexposome/convert.hpp"
#include "hexposome/expometrics.hpp"
#include "hexposome/hexgrid.hpp"
#include "hexposome/linkage.hpp"
#include "hexposome/render.hpp"

namespace py = pybind11;
using namespace hexposome;

namespace {

using FrameRow = std::tuple<std::string, std::string, std::vector<double>>;

std::vector<FrameRow> frame_rows(const HexFrame& f) {
    std::vector<FrameRow> out;
    out.reserve(f.rows.size());
    for (const auto& r : f.rows) out.emplace_back(encode_hexid(r.hex), r.period, r.values);
    return out;
}

HexFrame make_frame(const std::vector<std::string>& variables, const std::vector<FrameRow>& rows,
                    int res, double s0, int rotation) {
    HexFrame f;
    f.res = res;
    f.base_edge_s0 = s0;
    f.rotation_sign = rotation;
    f.variables = variables;
    for (const auto& [hex, period, values] : rows) {
        if (values.size() != variables.size()) {
            throw std::invalid_argument("row for " + hex + " has " + std::to_string(values.size()) +
                                        " values for " + std::to_string(variables.size()) +
                                        " variables");
        }
        f.rows.push_back({decode_hexid(hex), period, values});
    }
    f.sort_canonical();
    f.check_keys();
    return f;
}

ConvertStrategy make_strategy(const std::string& strategy, const std::string& semantics,
                              const std::string& agg, const std::string& value_field,
                              const std::string& variable, const std::string& period) {
    ConvertStrategy s;
    if (strategy == "centroid") {
        s.kind = ConvertStrategy::Kind::centroid;
    } else if (strategy == "polyfill") {
        s.kind = ConvertStrategy::Kind::polyfill;
    } else if (strategy == "overlay") {
        s.kind = ConvertStrategy::Kind::overlay;
    } else {
        throw std::invalid_argument("unknown strategy: " + strategy);
    }
    s.sem = parse_semantics(semantics);
    s.agg = parse_aggregation(agg);
    s.value_field = value_field;
    s.variable = variable;
    s.period = period;
    return s;
}

py::object cell_value(const Cell& c, ColumnKind kind) {
    if (c.missing) return py::none();
    if (kind == ColumnKind::number) return py::float_(c.number);
    return py::str(c.text);
}

py::list table_records(const Table& t) {
    py::list out;
    for (const auto& row : t.rows) {
        py::dict d;
        for (std::size_t j = 0; j < t.columns.size(); ++j) {
            d[py::str(t.columns[j].name)] = cell_value(row[j], t.columns[j].kind);
        }
        out.append(d);
    }
    return out;
}

DatasetRecord record_from_dict(const py::dict& d) {
    DatasetRecord r;
    const auto text = [&](const char* key) {
        return d.contains(key) ? d[key].cast<std::string>() : std::string();
    };
    r.id = text("id");
    r.name = text("name");
    r.data_type = text("data_type");
    r.format = text("format");
    if (d.contains("spatial_extent")) {
        const auto v = d["spatial_extent"].cast<std::vector<double>>();
        if (v.size() != 4) throw std::invalid_argument("spatial_extent needs 4 numbers");
        r.spatial_extent = {v[0], v[1], v[2], v[3]};
    }
    if (d.contains("temporal_extent")) {
        const auto v = d["temporal_extent"].cast<std::vector<std::string>>();
        if (v.size() != 2) throw std::invalid_argument("temporal_extent needs 2 strings");
        r.temporal_extent = {v[0], v[1]};
    }
    r.native_resolution = text("native_resolution");
    r.source_url = text("source_url");
    r.license = text("license");
    r.ingestion_code_ref = text("ingestion_code_ref");
    r.checksum = text("checksum");
    r.created = text("created");
    return r;
}

py::dict record_to_dict(const DatasetRecord& r) {
    py::dict d;
    d["id"] = r.id;
    d["name"] = r.name;
    d["data_type"] = r.data_type;
    d["format"] = r.format;
    d["spatial_extent"] = std::vector<double>(r.spatial_extent.begin(), r.spatial_extent.end());
    d["temporal_extent"] = std::vector<std::string>{r.temporal_extent[0], r.temporal_extent[1]};
    d["native_resolution"] = r.native_resolution;
    d["source_url"] = r.source_url;
    d["license"] = r.license;
    d["ingestion_code_ref"] = r.ingestion_code_ref;
    d["checksum"] = r.checksum;
    d["created"] = r.created;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "exposure data on a shared hexagonal grid";

    py::class_<GridSpec>(m, "Grid")
        .def(py::init([](double origin_x, double origin_y, double s0, int rotation, int max_res) {
                 GridSpec g;
                 g.origin = {origin_x, origin_y};
                 g.base_edge_s0 = s0;
                 g.rotation_sign = rotation;
                 g.max_resolution = max_res;
                 return g;
             }),
             py::arg("origin_x") = 0.0, py::arg("origin_y") = 0.0,
             py::arg("s0") = 0.532575 * 2401.0, py::arg("rotation") = -1, py::arg("max_res") = 15)
        .def_property_readonly("origin", [](const GridSpec& g) {
            return std::make_pair(g.origin.x, g.origin.y);
        })
        .def_readonly("s0", &GridSpec::base_edge_s0)
        .def_readonly("rotation", &GridSpec::rotation_sign)
        .def_readonly("max_res", &GridSpec::max_resolution)
        .def("edge", &GridSpec::edge, py::arg("res"))
        .def("cell_area", &GridSpec::cell_area, py::arg("res"))
        .def("fingerprint", &GridSpec::fingerprint)
        .def("__repr__", [](const GridSpec& g) { return "<Grid " + g.fingerprint() + ">"; });

    m.def(
        "point_to_cell",
        [](double x, double y, int res, const GridSpec& g) {
            return encode_hexid(point_to_cell({x, y}, res, g));
        },
        py::arg("x"), py::arg("y"), py::arg("res"), py::arg("grid"));
    m.def(
        "cell_center",
        [](const std::string& h, const GridSpec& g) {
            const Point p = cell_center(decode_hexid(h), g);
            return std::make_pair(p.x, p.y);
        },
        py::arg("hex"), py::arg("grid"));
    m.def(
        "cell_boundary",
        [](const std::string& h, const GridSpec& g) {
            std::vector<std::pair<double, double>> out;
            for (const Point& p : cell_boundary(decode_hexid(h), g)) out.emplace_back(p.x, p.y);
            return out;
        },
        py::arg("hex"), py::arg("grid"));
    m.def(
        "parent",
        [](const std::string& h, const GridSpec& g) { return encode_hexid(parent(decode_hexid(h), g)); },
        py::arg("hex"), py::arg("grid"));
    m.def(
        "children",
        [](const std::string& h, const GridSpec& g) {
            std::vector<std::string> out;
            for (const HexId& c : children(decode_hexid(h), g)) out.push_back(encode_hexid(c));
            return out;
        },
        py::arg("hex"), py::arg("grid"));
    m.def(
        "k_ring",
        [](const std::string& h, int k) {
            std::vector<std::string> out;
            for (const HexId& c : k_ring(decode_hexid(h), k)) out.push_back(encode_hexid(c));
            return out;
        },
        py::arg("hex"), py::arg("k"));
    m.def(
        "hex_distance",
        [](const std::string& a, const std::string& b) {
            return hex_distance(decode_hexid(a), decode_hexid(b));
        },
        py::arg("a"), py::arg("b"));

    py::class_<HexFrame>(m, "Frame")
        .def(py::init(&make_frame), py::arg("variables"), py::arg("rows"), py::arg("res") = 8,
             py::arg("s0") = 0.532575 * 2401.0, py::arg("rotation") = -1)
        .def_readonly("res", &HexFrame::res)
        .def_readonly("s0", &HexFrame::base_edge_s0)
        .def_readonly("rotation", &HexFrame::rotation_sign)
        .def_readonly("variables", &HexFrame::variables)
        .def("rows", &frame_rows, "list of (hex, period, values) tuples in canonical order")
        .def("__len__", [](const HexFrame& f) { return f.rows.size(); })
        .def("__repr__", [](const HexFrame& f) {
            return "<Frame res=" + std::to_string(f.res) + " rows=" + std::to_string(f.rows.size()) +
                   " vars=" + std::to_string(f.variables.size()) + ">";
        });

    m.def("read_frame", [](const std::string& path) { return read_hexframe(path); }, py::arg("path"));
    m.def(
        "read_frame",
        [](const std::string& path, const GridSpec& g) { return read_hexframe(path, g); },
        py::arg("path"), py::arg("grid"));
    m.def("write_frame", &write_hexframe, py::arg("frame"), py::arg("path"));

    m.def(
        "hexify_raster",
        [](const std::string& path, int res, const GridSpec& g, const std::string& strategy,
           const std::string& semantics, const std::string& agg, const std::string& variable,
           const std::string& period) {
            const RasterGrid src = read_ascii_grid(path);
            const ConvertStrategy s = make_strategy(strategy, semantics, agg, "", variable, period);
            if (s.kind == ConvertStrategy::Kind::centroid) {
                return centroid_aggregate(src, res, g, s.agg, variable, period);
            }
            if (s.kind != ConvertStrategy::Kind::overlay) {
                throw std::invalid_argument("raster sources support centroid and overlay");
            }
            const OverlayMap map = build_overlay_map(src, res, g);
            return apply_overlay(map, raster_values(src), s.sem, variable, period);
        },
        py::arg("path"), py::arg("res"), py::arg("grid"), py::arg("strategy") = "overlay",
        py::arg("semantics") = "intensive", py::arg("agg") = "mean", py::arg("variable") = "value",
        py::arg("period") = "-");
    m.def(
        "hexify_features",
        [](const std::string& path, const std::string& value_field, int res, const GridSpec& g,
           const std::string& strategy, const std::string& semantics, const std::string& variable,
           const std::string& period) {
            const FeatureSet src = read_geojson_polygons(path);
            const ConvertStrategy s =
                make_strategy(strategy, semantics, "mean", value_field, variable, period);
            if (s.kind == ConvertStrategy::Kind::polyfill) {
                return polyfill_assign(src, value_field, res, g, variable, period);
            }
            if (s.kind != ConvertStrategy::Kind::overlay) {
                throw std::invalid_argument("vector sources support polyfill and overlay");
            }
            const OverlayMap map = build_overlay_map(src, res, g);
            return apply_overlay(map, feature_values(src, value_field), s.sem, variable, period);
        },
        py::arg("path"), py::arg("value_field"), py::arg("res"), py::arg("grid"),
        py::arg("strategy") = "overlay", py::arg("semantics") = "intensive",
        py::arg("variable") = "value", py::arg("period") = "-");

    m.def(
        "ceem",
        [](const HexFrame& frame, const std::string& limits_path, const std::string& predicate) {
            Table limits;
            try {
                limits = read_csv(limits_path, {{"cas", ColumnKind::text},
                                                {"limit", ColumnKind::number},
                                                {"group", ColumnKind::text},
                                                {"sites", ColumnKind::text}});
            } catch (const std::invalid_argument&) {
                limits = read_csv(limits_path, {{"cas", ColumnKind::text},
                                                {"limit", ColumnKind::number},
                                                {"group", ColumnKind::text}});
            }
            const CeemMapResult r = ceem_map(frame, limits, predicate);
            return std::make_pair(r.frame, r.warnings);
        },
        py::arg("frame"), py::arg("limits_path"), py::arg("predicate") = "all",
        "returns (frame with ceem and ceem_n variables, warning count)");
    m.def("population_mask", &population_mask, py::arg("frame"), py::arg("population"),
          py::arg("threshold") = 1.0);
    m.def(
        "classify_aqi", [](double v) { return static_cast<int>(classify_aqi(v)); }, py::arg("value"));
    m.def(
        "aqi_label", [](int c) { return std::string(aqi_label(static_cast<AqiClass>(c))); },
        py::arg("cls"));
    m.def("attainment", &attainment, py::arg("annual_mean"), py::arg("standard") = 12.0);

    m.def(
        "cluster",
        [](const HexFrame& frame, const std::vector<std::string>& variables, int min_cluster_size,
           int min_samples, bool standardize_first, bool grid_search) {
            const MatrixView mv = matrix_from_frame(frame, variables);
            Matrix x = mv.x;
            if (standardize_first) x = standardize(x).first;
            ClusterModel model;
            int mcs = min_cluster_size, ms = min_samples;
            if (grid_search) {
                const GridSearchResult best = grid_search_hdbscan(x);
                model = best.model;
                mcs = best.min_cluster_size;
                ms = best.min_samples;
            } else {
                model = hdbscan_fit(x, min_cluster_size, min_samples);
            }
            py::dict out;
            out["labels"] = labels_frame(frame, mv.source_rows, model.labels);
            out["n_clusters"] = model.n_clusters;
            out["min_cluster_size"] = mcs;
            out["min_samples"] = ms;
            const auto s = silhouette(x, model.labels);
            out["silhouette"] = s ? py::object(py::float_(*s)) : py::object(py::none());
            return out;
        },
        py::arg("frame"), py::arg("variables") = std::vector<std::string>{},
        py::arg("min_cluster_size") = 5, py::arg("min_samples") = 5, py::arg("standardize") = true,
        py::arg("grid_search") = false);
    m.def(
        "pca_scores",
        [](const HexFrame& frame, const std::vector<std::string>& variables, int k, double threshold,
           bool standardize_first) {
            const MatrixView mv = matrix_from_frame(frame, variables);
            Matrix x = mv.x;
            if (standardize_first) x = standardize(x).first;
            const PCAModel model = pca_fit(x);
            const std::size_t keep = k > 0 ? static_cast<std::size_t>(k)
                                           : pca_select_threshold(model.explained_variance_ratio,
                                                                  threshold);
            const Matrix scores = pca_transform(model, x, keep);
            HexFrame out;
            out.res = frame.res;
            out.base_edge_s0 = frame.base_edge_s0;
            out.rotation_sign = frame.rotation_sign;
            out.variables = scores.columns;
            for (std::size_t i = 0; i < scores.n(); ++i) {
                const auto& src = frame.rows[mv.source_rows[i]];
                out.rows.push_back({src.hex, src.period, scores.rows[i]});
            }
            out.sort_canonical();
            return std::make_pair(out, model.explained_variance_ratio);
        },
        py::arg("frame"), py::arg("variables") = std::vector<std::string>{}, py::arg("k") = 0,
        py::arg("threshold") = 0.9, py::arg("standardize") = true,
        "returns (scores frame, explained variance ratios)");

    py::class_<Crosswalk>(m, "Crosswalk")
        .def_readonly("grid_fingerprint", &Crosswalk::grid_fingerprint)
        .def_readonly("res", &Crosswalk::res)
        .def("records",
             [](const Crosswalk& xw) {
                 std::vector<std::tuple<std::string, std::string, double>> out;
                 out.reserve(xw.records.size());
                 for (const auto& r : xw.records) {
                     out.emplace_back(encode_hexid(r.hex), r.zone, r.frac_of_hex);
                 }
                 return out;
             })
        .def("__len__", [](const Crosswalk& xw) { return xw.records.size(); });

    m.def(
        "build_crosswalk",
        [](const std::string& zones_path, const std::string& zone_field, int res, const GridSpec& g) {
            return build_crosswalk(read_geojson_polygons(zones_path), zone_field, res, g);
        },
        py::arg("zones_path"), py::arg("zone_field"), py::arg("res"), py::arg("grid"));
    m.def("read_crosswalk", &read_crosswalk, py::arg("path"));
    m.def("write_crosswalk", &write_crosswalk, py::arg("crosswalk"), py::arg("path"));
    m.def(
        "aggregate",
        [](const HexFrame& frame, const Crosswalk& xw, const std::vector<std::string>& stats,
           bool dominant) {
            return table_records(aggregate_to_zone(
                frame, xw, stats, dominant ? ZoneWeighting::dominant : ZoneWeighting::weighted));
        },
        py::arg("frame"), py::arg("crosswalk"),
        py::arg("stats") = std::vector<std::string>{"mean", "std"}, py::arg("dominant") = false,
        "zone rows as dicts; cells split by area share unless dominant");
    m.def(
        "locate",
        [](double x, double y, const HexFrame& frame, const GridSpec& g, const std::string& from,
           const std::string& to) {
            std::vector<FrameRow> out;
            for (const auto& r : locate(Point{x, y}, frame, g, from, to)) {
                out.emplace_back(encode_hexid(r.hex), r.period, r.values);
            }
            return out;
        },
        py::arg("x"), py::arg("y"), py::arg("frame"), py::arg("grid"), py::arg("from_period") = "",
        py::arg("to_period") = "", "cell rows covering a point; ids and values only");

    m.def(
        "register_dataset",
        [](const py::dict& record, const std::string& manifest_path) {
            return register_dataset(record_from_dict(record), manifest_path);
        },
        py::arg("record"), py::arg("manifest_path"));
    m.def(
        "validate_record",
        [](const py::dict& record, const std::string& data_path) {
            return validate(record_from_dict(record), data_path);
        },
        py::arg("record"), py::arg("data_path") = "");
    m.def(
        "query_catalog",
        [](const std::string& manifest_path, const std::string& id, const std::string& data_type,
           const std::string& name_contains, std::optional<std::vector<double>> bbox,
           const std::string& period) {
            CatalogFilter f;
            f.id = id;
            f.data_type = data_type;
            f.name_contains = name_contains;
            f.period = period;
            if (bbox) {
                if (bbox->size() != 4) throw std::invalid_argument("bbox needs 4 numbers");
                f.bbox = {{(*bbox)[0], (*bbox)[1], (*bbox)[2], (*bbox)[3]}};
            }
            py::list out;
            for (const auto& rec : query(manifest_path, f)) out.append(record_to_dict(rec));
            return out;
        },
        py::arg("manifest_path"), py::arg("id") = "", py::arg("data_type") = "",
        py::arg("name_contains") = "", py::arg("bbox") = py::none(), py::arg("period") = "");

    m.def(
        "render_map",
        [](const HexFrame& frame, const GridSpec& g, const std::string& variable,
           const std::string& classing, int classes, const std::string& variable2,
           const std::string& period, const std::vector<std::string>& palette) {
            RenderOptions opt;
            if (classing == "quantile") {
                opt.classing = Classing::quantile;
            } else if (classing == "bivariate") {
                opt.classing = Classing::bivariate;
            } else if (classing == "ceem-threshold") {
                opt.classing = Classing::ceem_threshold;
            } else {
                throw std::invalid_argument("unknown classing: " + classing);
            }
            opt.variable = variable;
            opt.variable2 = variable2;
            opt.period = period;
            opt.classes = classes;
            opt.palette = palette;
            return render_svg(frame, g, opt);
        },
        py::arg("frame"), py::arg("grid"), py::arg("variable"), py::arg("classing") = "quantile",
        py::arg("classes") = 5, py::arg("variable2") = "", py::arg("period") = "",
        py::arg("palette") = std::vector<std::string>{}, "deterministic svg choropleth");
}
