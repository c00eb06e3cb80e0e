#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hexposome/analytics.hpp"
#include "hexposome/catalog.hpp"
#include "hexposome/convert.hpp"
#include "hexposome/expometrics.hpp"
#include "hexposome/linkage.hpp"
#include "hexposome/render.hpp"
#include "hexposome/util.hpp"

using namespace hexposome;

namespace {

struct GridOpts {
    int res = 8;
    double s0 = 0.532575 * 2401.0;
    int rotation = -1;
    double origin_x = 0.0;
    double origin_y = 0.0;
    int max_res = 15;

    GridSpec make() const {
        GridSpec g;
        g.origin = {origin_x, origin_y};
        g.base_edge_s0 = s0;
        g.rotation_sign = rotation;
        g.max_resolution = max_res;
        return g;
    }
};

enum class SourceKind { raster, features, points };

SourceKind source_kind(const std::string& path) {
    const std::string ext = std::filesystem::path(path).extension().string();
    if (ext == ".asc") return SourceKind::raster;
    if (ext == ".geojson" || ext == ".json") return SourceKind::features;
    if (ext == ".csv") return SourceKind::points;
    throw CLI::ValidationError("input", "unrecognized input extension: " + path);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

void write_text(const std::string& text, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << text;
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<std::string> numeric_labels(const std::vector<double>& values) {
    std::vector<std::string> labels;
    labels.reserve(values.size());
    for (const double v : values) labels.push_back(std::isnan(v) ? "" : format_double(v));
    return labels;
}

Table read_limits(const std::string& path) {
    const std::vector<Table::Column> with_sites = {{"cas", ColumnKind::text},
                                                   {"limit", ColumnKind::number},
                                                   {"group", ColumnKind::text},
                                                   {"sites", ColumnKind::text}};
    try {
        return read_csv(path, with_sites);
    } catch (const std::invalid_argument&) {
        return read_csv(path, {with_sites.begin(), with_sites.end() - 1});
    }
}

// Scores matrix back onto the frame keys it came from.
HexFrame matrix_as_frame(const HexFrame& source, const std::vector<std::size_t>& source_rows,
                         const Matrix& m) {
    HexFrame out;
    out.res = source.res;
    out.base_edge_s0 = source.base_edge_s0;
    out.rotation_sign = source.rotation_sign;
    out.variables = m.columns;
    for (std::size_t i = 0; i < m.n(); ++i) {
        const auto& src = source.rows[source_rows[i]];
        out.rows.push_back({src.hex, src.period, m.rows[i]});
    }
    out.sort_canonical();
    return out;
}

int run(int argc, char** argv) {
    CLI::App app{"hexposome: exposure data on a shared hexagonal grid"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "flat key=value configuration; flags override file values");
    app.allow_config_extras(false);
    app.set_version_flag("--version", "0.1.0");

    GridOpts grid;
    int threads = 0;
    app.add_option("--res", grid.res, "grid resolution")->capture_default_str();
    app.add_option("--s0", grid.s0, "base edge length at resolution 0, km")->capture_default_str();
    app.add_option("--rotation", grid.rotation, "lattice rotation sign, -1 or +1")
        ->check(CLI::IsMember({-1, 1}))
        ->capture_default_str();
    app.add_option("--origin-x", grid.origin_x, "grid origin x, km")->capture_default_str();
    app.add_option("--origin-y", grid.origin_y, "grid origin y, km")->capture_default_str();
    app.add_option("--max-res", grid.max_res, "finest representable resolution")->capture_default_str();
    app.add_option("--threads", threads, "worker threads; 0 consults HEXPOSOME_THREADS, then hardware")
        ->capture_default_str();

    // hexify
    struct {
        std::string input, output;
        std::string strategy = "overlay";
        std::string semantics = "intensive";
        std::string agg = "mean";
        std::string value_field, variable, period = "-";
        std::string x_field = "x", y_field = "y";
        bool chunked = false;
        double chunk_width = 10.0;
        double halo = 0.0;
    } hx;
    auto* hexify = app.add_subcommand("hexify", "convert a source dataset onto the grid");
    hexify->add_option("input", hx.input, "source (.asc raster, .geojson polygons, .csv points)")
        ->required();
    hexify->add_option("output", hx.output, "output frame csv")->required();
    hexify->add_option("--strategy", hx.strategy, "centroid | polyfill | overlay")
        ->check(CLI::IsMember({"centroid", "polyfill", "overlay"}))
        ->capture_default_str();
    hexify->add_option("--semantics", hx.semantics, "intensive | extensive | categorical")
        ->check(CLI::IsMember({"intensive", "extensive", "categorical"}))
        ->capture_default_str();
    hexify->add_option("--agg", hx.agg, "centroid aggregation: mean | sum | count | min | max")
        ->check(CLI::IsMember({"mean", "sum", "count", "min", "max"}))
        ->capture_default_str();
    hexify->add_option("--value-field", hx.value_field, "value property (vector and point sources)");
    hexify->add_option("--variable", hx.variable, "output variable name (default: value field)");
    hexify->add_option("--period", hx.period, "period key for the output rows")->capture_default_str();
    hexify->add_option("--x-field", hx.x_field, "x column for point csv")->capture_default_str();
    hexify->add_option("--y-field", hx.y_field, "y column for point csv")->capture_default_str();
    hexify->add_flag("--chunked", hx.chunked, "stream the source in spatial chunks");
    hexify->add_option("--chunk-width", hx.chunk_width, "chunk width, km")->capture_default_str();
    hexify->add_option("--halo", hx.halo, "chunk halo, km; 0 picks the strategy minimum")
        ->capture_default_str();
    hexify->callback([&] {
        const GridSpec g = grid.make();
        const SourceKind kind = source_kind(hx.input);
        const std::string variable =
            !hx.variable.empty() ? hx.variable : (!hx.value_field.empty() ? hx.value_field : "value");

        ConvertStrategy strat;
        strat.kind = hx.strategy == "centroid"   ? ConvertStrategy::Kind::centroid
                     : hx.strategy == "polyfill" ? ConvertStrategy::Kind::polyfill
                                                 : ConvertStrategy::Kind::overlay;
        strat.agg = parse_aggregation(hx.agg);
        strat.sem = parse_semantics(hx.semantics);
        strat.value_field = hx.value_field;
        strat.variable = variable;
        strat.period = hx.period;

        HexFrame frame;
        if (kind == SourceKind::points) {
            if (strat.kind != ConvertStrategy::Kind::centroid) {
                throw CLI::ValidationError("--strategy", "point csv sources support centroid only");
            }
            if (hx.value_field.empty()) {
                throw CLI::ValidationError("--value-field", "point csv sources need a value field");
            }
            const Table points = read_csv(hx.input, {{hx.x_field, ColumnKind::number},
                                                     {hx.y_field, ColumnKind::number},
                                                     {hx.value_field, ColumnKind::number}});
            frame = centroid_aggregate(points, hx.x_field, hx.y_field, hx.value_field, grid.res, g,
                                       strat.agg, variable, hx.period);
        } else if (kind == SourceKind::raster) {
            const RasterGrid src = read_ascii_grid(hx.input);
            if (hx.chunked) {
                ChunkSpec spec{hx.chunk_width, hx.halo};
                if (spec.halo <= 0.0) {
                    spec.halo = required_halo(strat.kind, g.edge(grid.res), max_source_diameter(src));
                }
                frame = chunked_convert(src, grid.res, g, strat, spec, threads);
            } else if (strat.kind == ConvertStrategy::Kind::centroid) {
                frame = centroid_aggregate(src, grid.res, g, strat.agg, variable, hx.period);
            } else if (strat.kind == ConvertStrategy::Kind::overlay) {
                const OverlayMap map = build_overlay_map(src, grid.res, g);
                if (strat.sem == Semantics::categorical) {
                    frame = apply_overlay_categorical(map, numeric_labels(raster_values(src)), variable,
                                                      hx.period);
                } else {
                    frame = apply_overlay(map, raster_values(src), strat.sem, variable, hx.period);
                }
            } else {
                throw CLI::ValidationError("--strategy", "raster sources support centroid and overlay");
            }
        } else {
            const FeatureSet src = read_geojson_polygons(hx.input);
            if (hx.value_field.empty()) {
                throw CLI::ValidationError("--value-field", "vector sources need a value field");
            }
            if (strat.kind == ConvertStrategy::Kind::centroid) {
                throw CLI::ValidationError("--strategy", "vector sources support polyfill and overlay");
            }
            if (hx.chunked) {
                ChunkSpec spec{hx.chunk_width, hx.halo};
                if (spec.halo <= 0.0) {
                    spec.halo = required_halo(strat.kind, g.edge(grid.res), max_source_diameter(src));
                }
                frame = chunked_convert(src, grid.res, g, strat, spec, threads);
            } else if (strat.kind == ConvertStrategy::Kind::polyfill) {
                frame = polyfill_assign(src, hx.value_field, grid.res, g, variable, hx.period);
            } else {
                const OverlayMap map = build_overlay_map(src, grid.res, g);
                const std::vector<double> values = feature_values(src, hx.value_field);
                if (strat.sem == Semantics::categorical) {
                    frame = apply_overlay_categorical(map, numeric_labels(values), variable, hx.period);
                } else {
                    frame = apply_overlay(map, values, strat.sem, variable, hx.period);
                }
            }
        }
        write_hexframe(frame, hx.output);
        std::cerr << "hexify: " << frame.rows.size() << " cells -> " << hx.output << "\n";
    });

    // overlay-map
    struct {
        std::string input, output;
    } om;
    auto* overlay_map = app.add_subcommand("overlay-map", "precompute source/cell intersections");
    overlay_map->add_option("input", om.input, "source (.asc or .geojson)")->required();
    overlay_map->add_option("output", om.output, "overlay map csv")->required();
    overlay_map->callback([&] {
        const GridSpec g = grid.make();
        OverlayMap map;
        if (source_kind(om.input) == SourceKind::raster) {
            map = build_overlay_map(read_ascii_grid(om.input), grid.res, g);
        } else {
            map = build_overlay_map(read_geojson_polygons(om.input), grid.res, g);
        }
        write_overlay_map(map, om.output);
        std::cerr << "overlay-map: " << map.records.size() << " records -> " << om.output << "\n";
    });

    // apply
    struct {
        std::string input, output, map;
        std::string semantics = "intensive";
        std::string value_field, variable, period = "-";
    } ap;
    auto* apply = app.add_subcommand("apply", "apply a precomputed overlay map to source values");
    apply->add_option("input", ap.input, "source the map was built from")->required();
    apply->add_option("output", ap.output, "output frame csv")->required();
    apply->add_option("--map", ap.map, "overlay map csv")->required();
    apply->add_option("--semantics", ap.semantics, "intensive | extensive | categorical")
        ->check(CLI::IsMember({"intensive", "extensive", "categorical"}))
        ->capture_default_str();
    apply->add_option("--value-field", ap.value_field, "value property (vector sources)");
    apply->add_option("--variable", ap.variable, "output variable name");
    apply->add_option("--period", ap.period, "period key")->capture_default_str();
    apply->callback([&] {
        const GridSpec g = grid.make();
        const OverlayMap map = read_overlay_map(ap.map);
        check_overlay_grid(map, g, map.res);
        std::vector<double> values;
        std::string checksum;
        if (source_kind(ap.input) == SourceKind::raster) {
            const RasterGrid src = read_ascii_grid(ap.input);
            values = raster_values(src);
            checksum = raster_checksum(src);
        } else {
            const FeatureSet src = read_geojson_polygons(ap.input);
            if (ap.value_field.empty()) {
                throw CLI::ValidationError("--value-field", "vector sources need a value field");
            }
            values = feature_values(src, ap.value_field);
            checksum = features_checksum(src);
        }
        if (checksum != map.source_checksum) {
            throw std::runtime_error("source checksum mismatch: map built from " + map.source_checksum +
                                     ", input hashes to " + checksum);
        }
        const std::string variable =
            !ap.variable.empty() ? ap.variable : (!ap.value_field.empty() ? ap.value_field : "value");
        const Semantics sem = parse_semantics(ap.semantics);
        HexFrame frame;
        if (sem == Semantics::categorical) {
            frame = apply_overlay_categorical(map, numeric_labels(values), variable, ap.period);
        } else {
            frame = apply_overlay(map, values, sem, variable, ap.period);
        }
        write_hexframe(frame, ap.output);
        std::cerr << "apply: " << frame.rows.size() << " cells -> " << ap.output << "\n";
    });

    // ceem
    struct {
        std::string input, limits, output;
        std::string filter = "all";
    } ce;
    auto* ceem_cmd = app.add_subcommand("ceem", "mixture exceedance score per cell");
    ceem_cmd->add_option("input", ce.input, "chemical frame csv (variables are cas ids)")->required();
    ceem_cmd->add_option("limits", ce.limits, "limits csv: cas,limit,group[,sites]")->required();
    ceem_cmd->add_option("output", ce.output, "output frame csv")->required();
    ceem_cmd->add_option("--filter", ce.filter, "all | group in {..} | site has <tag>")
        ->capture_default_str();
    ceem_cmd->callback([&] {
        const HexFrame frame = read_hexframe(ce.input);
        const Table limits = read_limits(ce.limits);
        const CeemMapResult result = ceem_map(frame, limits, ce.filter);
        write_hexframe(result.frame, ce.output);
        std::cerr << "ceem: " << result.frame.rows.size() << " cells, " << result.warnings
                  << " warnings -> " << ce.output << "\n";
    });

    // mask
    struct {
        std::string input, pop, output;
        double threshold = 1.0;
    } mk;
    auto* mask = app.add_subcommand("mask", "drop cells below a population threshold");
    mask->add_option("input", mk.input, "frame csv")->required();
    mask->add_option("population", mk.pop, "population frame csv")->required();
    mask->add_option("output", mk.output, "output frame csv")->required();
    mask->add_option("--threshold", mk.threshold, "minimum population")->capture_default_str();
    mask->callback([&] {
        const HexFrame frame = read_hexframe(mk.input);
        const HexFrame pop = read_hexframe(mk.pop);
        const HexFrame kept = population_mask(frame, pop, mk.threshold);
        write_hexframe(kept, mk.output);
        std::cerr << "mask: kept " << kept.rows.size() << " of " << frame.rows.size() << " rows -> "
                  << mk.output << "\n";
    });

    // classify
    struct {
        std::string input, output;
        std::string kind = "aqi";
        std::string var, var2;
        double standard = 12.0;
    } cl;
    auto* classify = app.add_subcommand("classify", "air-quality classes or attainment flags");
    classify->add_option("input", cl.input, "frame csv")->required();
    classify->add_option("output", cl.output, "output frame csv")->required();
    classify->add_option("--kind", cl.kind, "aqi | bivariate | attainment")
        ->check(CLI::IsMember({"aqi", "bivariate", "attainment"}))
        ->capture_default_str();
    classify->add_option("--var", cl.var, "variable to classify")->required();
    classify->add_option("--var2", cl.var2, "second variable (bivariate)");
    classify->add_option("--standard", cl.standard, "attainment standard")->capture_default_str();
    classify->callback([&] {
        const HexFrame frame = read_hexframe(cl.input);
        const int vi = frame.variable_index(cl.var);
        if (vi < 0) throw std::invalid_argument("no variable named " + cl.var);

        HexFrame out;
        out.res = frame.res;
        out.base_edge_s0 = frame.base_edge_s0;
        out.rotation_sign = frame.rotation_sign;
        const double nan = std::nan("");
        if (cl.kind == "aqi") {
            out.variables = {cl.var + "_class"};
            for (const auto& row : frame.rows) {
                const double v = row.values[vi];
                out.rows.push_back(
                    {row.hex, row.period,
                     {std::isnan(v) ? nan : static_cast<double>(static_cast<int>(classify_aqi(v)))}});
            }
        } else if (cl.kind == "attainment") {
            out.variables = {cl.var + "_attain"};
            for (const auto& row : frame.rows) {
                const double v = row.values[vi];
                out.rows.push_back({row.hex, row.period,
                                    {std::isnan(v) ? nan : (attainment(v, cl.standard) ? 1.0 : 0.0)}});
            }
        } else {
            if (cl.var2.empty()) throw CLI::ValidationError("--var2", "bivariate needs two variables");
            const int vj = frame.variable_index(cl.var2);
            if (vj < 0) throw std::invalid_argument("no variable named " + cl.var2);
            out.variables = {cl.var + "_class", cl.var2 + "_class", "bivariate_class"};
            for (const auto& row : frame.rows) {
                const double a = row.values[vi], b = row.values[vj];
                if (std::isnan(a) || std::isnan(b)) {
                    out.rows.push_back({row.hex, row.period, {nan, nan, nan}});
                } else {
                    const auto [ca, cb] = bivariate_aqi(a, b);
                    const double ia = static_cast<double>(static_cast<int>(ca));
                    const double ib = static_cast<double>(static_cast<int>(cb));
                    out.rows.push_back({row.hex, row.period, {ia, ib, 4.0 * ia + ib}});
                }
            }
        }
        out.sort_canonical();
        write_hexframe(out, cl.output);
        std::cerr << "classify: " << out.rows.size() << " rows -> " << cl.output << "\n";
    });

    // cluster
    struct {
        std::string input, output;
        std::string vars;
        std::string summary, tree;
        std::string lattice;
        int mcs = 5, ms = 5;
        bool search = false;
        bool no_standardize = false;
    } cu;
    auto* cluster = app.add_subcommand("cluster", "density clustering of cells in exposure space");
    cluster->add_option("input", cu.input, "frame csv")->required();
    cluster->add_option("output", cu.output, "labels frame csv")->required();
    cluster->add_option("--vars", cu.vars, "comma-separated variables (default: all)");
    cluster->add_option("--mcs", cu.mcs, "min cluster size")->capture_default_str();
    cluster->add_option("--ms", cu.ms, "min samples")->capture_default_str();
    cluster->add_flag("--grid-search", cu.search, "pick mcs/ms by silhouette over a lattice");
    cluster->add_option("--lattice", cu.lattice, "grid-search lattice, e.g. 5,10,15");
    cluster->add_flag("--no-standardize", cu.no_standardize, "cluster raw values");
    cluster->add_option("--summary", cu.summary, "write per-cluster five-number summaries here");
    cluster->add_option("--tree", cu.tree, "write the condensed tree csv here");
    cluster->callback([&] {
        const HexFrame frame = read_hexframe(cu.input);
        const MatrixView mv = matrix_from_frame(frame, split_list(cu.vars));
        Matrix x = mv.x;
        if (!cu.no_standardize) x = standardize(x).first;

        ClusterModel model;
        if (cu.search) {
            std::vector<int> lattice;
            for (const auto& tok : split_list(cu.lattice)) lattice.push_back(std::stoi(tok));
            const GridSearchResult best =
                lattice.empty() ? grid_search_hdbscan(x) : grid_search_hdbscan(x, lattice);
            model = best.model;
            std::cerr << "cluster: grid search chose mcs=" << best.min_cluster_size
                      << " ms=" << best.min_samples << " silhouette=" << format_double(best.score)
                      << "\n";
        } else {
            model = hdbscan_fit(x, cu.mcs, cu.ms);
        }

        int noise = 0;
        for (const int l : model.labels) noise += l < 0;
        std::cerr << "cluster: " << model.n_clusters << " clusters, " << noise << " noise points of "
                  << model.labels.size() << "\n";
        if (const auto s = silhouette(x, model.labels)) {
            std::cerr << "cluster: silhouette " << format_double(*s) << "\n";
        }

        write_hexframe(labels_frame(frame, mv.source_rows, model.labels), cu.output);

        if (!cu.summary.empty()) {
            const auto summaries = cluster_summary(frame, [&] {
                // labels aligned to the full frame: rows dropped from the matrix are noise
                std::vector<int> full(frame.rows.size(), -1);
                for (std::size_t i = 0; i < mv.source_rows.size(); ++i) {
                    full[mv.source_rows[i]] = model.labels[i];
                }
                return full;
            }());
            Table t;
            t.columns = {{"cluster", ColumnKind::number}, {"size", ColumnKind::number}};
            for (const auto& var : frame.variables) {
                for (const char* stat : {"min_", "q1_", "median_", "q3_", "max_"}) {
                    t.columns.push_back({stat + var, ColumnKind::number});
                }
            }
            for (const auto& s : summaries) {
                std::vector<Cell> row = {Cell::num(s.cluster), Cell::num(static_cast<double>(s.size))};
                for (const auto& fn : s.per_variable) {
                    for (const double v : {fn.min, fn.q1, fn.median, fn.q3, fn.max}) {
                        row.push_back(std::isnan(v) ? Cell::na() : Cell::num(v));
                    }
                }
                t.rows.push_back(std::move(row));
            }
            write_csv(t, cu.summary);
        }
        if (!cu.tree.empty()) write_text(condensed_tree_csv(model), cu.tree);
    });

    // pca
    struct {
        std::string input, output;
        std::string vars;
        int k = 0;
        double threshold = 0.0;
        bool elbow = false;
        bool no_standardize = false;
    } pc;
    auto* pca = app.add_subcommand("pca", "principal component scores per cell");
    pca->add_option("input", pc.input, "frame csv")->required();
    pca->add_option("output", pc.output, "scores frame csv")->required();
    pca->add_option("--vars", pc.vars, "comma-separated variables (default: all)");
    auto* kopt = pca->add_option("--k", pc.k, "keep exactly k components");
    auto* topt = pca->add_option("--threshold", pc.threshold, "keep the smallest k reaching this ratio");
    auto* eopt = pca->add_flag("--elbow", pc.elbow, "keep the components before the scree knee");
    kopt->excludes(topt)->excludes(eopt);
    topt->excludes(eopt);
    pca->add_flag("--no-standardize", pc.no_standardize, "fit raw covariance");
    pca->callback([&] {
        const HexFrame frame = read_hexframe(pc.input);
        const MatrixView mv = matrix_from_frame(frame, split_list(pc.vars));
        Matrix x = mv.x;
        if (!pc.no_standardize) x = standardize(x).first;
        const PCAModel model = pca_fit(x);

        std::size_t k;
        if (pc.k > 0) {
            k = static_cast<std::size_t>(pc.k);
        } else if (pc.elbow) {
            k = pca_select_elbow(model.explained_variance_ratio);
        } else {
            k = pca_select_threshold(model.explained_variance_ratio,
                                     pc.threshold > 0.0 ? pc.threshold : 0.9);
        }

        std::string ratios;
        for (const double r : model.explained_variance_ratio) {
            if (!ratios.empty()) ratios += ", ";
            ratios += format_double(r);
        }
        std::cerr << "pca: explained variance ratios " << ratios << "; keeping " << k << "\n";

        write_hexframe(matrix_as_frame(frame, mv.source_rows, pca_transform(model, x, k)), pc.output);
    });

    // crosswalk
    struct {
        std::string zones, output;
        std::string zone_field = "zone_id";
    } cw;
    auto* crosswalk = app.add_subcommand("crosswalk", "area shares between cells and zones");
    crosswalk->add_option("zones", cw.zones, "zone polygons geojson")->required();
    crosswalk->add_option("output", cw.output, "crosswalk csv")->required();
    crosswalk->add_option("--zone-field", cw.zone_field, "zone id property")->capture_default_str();
    crosswalk->callback([&] {
        const GridSpec g = grid.make();
        const Crosswalk xw = build_crosswalk(read_geojson_polygons(cw.zones), cw.zone_field, grid.res, g);
        write_crosswalk(xw, cw.output);
        std::cerr << "crosswalk: " << xw.records.size() << " records -> " << cw.output << "\n";
    });

    // aggregate
    struct {
        std::string input, xwalk, output;
        std::string stats = "mean,std";
        bool dominant = false;
    } ag;
    auto* aggregate = app.add_subcommand("aggregate", "zone-level stats from a cell frame");
    aggregate->add_option("input", ag.input, "frame csv")->required();
    aggregate->add_option("crosswalk", ag.xwalk, "crosswalk csv")->required();
    aggregate->add_option("output", ag.output, "zone table csv")->required();
    aggregate->add_option("--stats", ag.stats, "comma list from {mean,std}")->capture_default_str();
    aggregate->add_flag("--dominant", ag.dominant, "assign each cell wholly to its largest zone");
    aggregate->callback([&] {
        const GridSpec g = grid.make();
        const Crosswalk xw = read_crosswalk(ag.xwalk);
        if (xw.grid_fingerprint != g.fingerprint()) {
            throw std::runtime_error("grid fingerprint mismatch: crosswalk " + xw.grid_fingerprint +
                                     ", configured grid " + g.fingerprint());
        }
        const HexFrame frame = read_hexframe(ag.input, g);
        const Table t = aggregate_to_zone(frame, xw, split_list(ag.stats),
                                          ag.dominant ? ZoneWeighting::dominant : ZoneWeighting::weighted);
        write_csv(t, ag.output);
        std::cerr << "aggregate: " << t.rows.size() << " zone rows -> " << ag.output << "\n";
    });

    // catalog
    auto* catalog = app.add_subcommand("catalog", "dataset manifest operations");
    catalog->require_subcommand(1);
    std::string manifest_path;
    catalog->add_option("--manifest", manifest_path, "manifest jsonl path")->required();

    struct {
        DatasetRecord rec;
        std::vector<double> bbox;
        std::string start = "-", end = "-";
        std::string data_file;
    } reg;
    auto* creg = catalog->add_subcommand("register", "validate and append one dataset record");
    creg->add_option("--id", reg.rec.id, "unique slug")->required();
    creg->add_option("--name", reg.rec.name, "human-readable name")->required();
    creg->add_option("--data-type", reg.rec.data_type,
                     "raster | vector | tabular | model | ingestion-code")
        ->required();
    creg->add_option("--format", reg.rec.format, "file format");
    creg->add_option("--bbox", reg.bbox, "spatial extent: xmin ymin xmax ymax, km")->expected(4);
    creg->add_option("--start", reg.start, "temporal start (date or '-')")->capture_default_str();
    creg->add_option("--end", reg.end, "temporal end (date or '-')")->capture_default_str();
    creg->add_option("--resolution", reg.rec.native_resolution, "native resolution");
    creg->add_option("--url", reg.rec.source_url, "source url");
    creg->add_option("--license", reg.rec.license, "license")->required();
    creg->add_option("--code-ref", reg.rec.ingestion_code_ref, "ingestion code reference");
    creg->add_option("--checksum", reg.rec.checksum, "sha-256 hex digest");
    creg->add_option("--data", reg.data_file, "data file; fills and verifies the checksum");
    creg->callback([&] {
        if (reg.bbox.size() == 4) {
            reg.rec.spatial_extent = {reg.bbox[0], reg.bbox[1], reg.bbox[2], reg.bbox[3]};
        }
        reg.rec.temporal_extent = {reg.start, reg.end};
        if (!reg.data_file.empty()) {
            std::ifstream in(reg.data_file, std::ios::binary);
            if (!in) throw std::runtime_error("cannot read file: " + reg.data_file);
            std::stringstream ss;
            ss << in.rdbuf();
            const std::string digest = sha256_hex(ss.str());
            if (reg.rec.checksum.empty()) {
                reg.rec.checksum = digest;
            } else if (reg.rec.checksum != digest) {
                throw std::runtime_error("checksum mismatch: given " + reg.rec.checksum + ", file " +
                                         digest);
            }
        }
        const std::string id = register_dataset(reg.rec, manifest_path);
        std::cerr << "catalog: registered " << id << "\n";
    });

    struct {
        std::string output;
        CatalogFilter filter;
        std::vector<double> bbox;
    } cq;
    auto* cquery = catalog->add_subcommand("query", "filter the manifest");
    cquery->add_option("output", cq.output, "matching records, jsonl")->required();
    cquery->add_option("--id", cq.filter.id, "id equality");
    cquery->add_option("--data-type", cq.filter.data_type, "data type equality");
    cquery->add_option("--name-contains", cq.filter.name_contains, "name substring");
    cquery->add_option("--bbox", cq.bbox, "intersects: xmin ymin xmax ymax")->expected(4);
    cquery->add_option("--period", cq.filter.period, "temporal overlap (date or year)");
    cquery->callback([&] {
        if (cq.bbox.size() == 4) cq.filter.bbox = {{cq.bbox[0], cq.bbox[1], cq.bbox[2], cq.bbox[3]}};
        const auto hits = query(manifest_path, cq.filter);
        std::string out;
        for (const auto& rec : hits) out += serialize_record(rec) + "\n";
        write_text(out, cq.output);
        std::cerr << "catalog: " << hits.size() << " records -> " << cq.output << "\n";
    });

    struct {
        std::string id;
        std::string data_file;
    } cv;
    auto* cvalidate = catalog->add_subcommand("validate", "re-check one record's invariants");
    cvalidate->add_option("--id", cv.id, "record id")->required();
    cvalidate->add_option("--data", cv.data_file, "data file to hash against the stored checksum");
    cvalidate->callback([&] {
        for (const auto& rec : read_manifest(manifest_path)) {
            if (rec.id != cv.id) continue;
            const auto violations = validate(rec, cv.data_file);
            if (violations.empty()) {
                std::cerr << "catalog: " << cv.id << " ok\n";
                return;
            }
            std::string msg = cv.id + " has violations:";
            for (const auto& v : violations) msg += "\n  " + v;
            throw std::runtime_error(msg);
        }
        throw std::runtime_error("no record with id " + cv.id);
    });

    // render
    struct {
        std::string input, output;
        std::string var, var2, period;
        std::string classing = "quantile";
        std::string palette;
        int classes = 5;
    } rd;
    auto* render = app.add_subcommand("render", "svg choropleth of one variable");
    render->add_option("input", rd.input, "frame csv")->required();
    render->add_option("output", rd.output, "output svg")->required();
    render->add_option("--var", rd.var, "variable to map")->required();
    render->add_option("--var2", rd.var2, "second variable (bivariate)");
    render->add_option("--classing", rd.classing, "quantile | bivariate | ceem-threshold")
        ->check(CLI::IsMember({"quantile", "bivariate", "ceem-threshold"}))
        ->capture_default_str();
    render->add_option("--classes", rd.classes, "quantile class count")->capture_default_str();
    render->add_option("--period", rd.period, "render this period only");
    render->add_option("--palette", rd.palette, "comma list of #rrggbb fills");
    render->callback([&] {
        const GridSpec g = grid.make();
        const HexFrame frame = read_hexframe(rd.input, g);
        RenderOptions opt;
        opt.classing = rd.classing == "bivariate"        ? Classing::bivariate
                       : rd.classing == "ceem-threshold" ? Classing::ceem_threshold
                                                         : Classing::quantile;
        opt.variable = rd.var;
        opt.variable2 = rd.var2;
        opt.period = rd.period;
        opt.classes = rd.classes;
        opt.palette = split_list(rd.palette);
        write_text(render_svg(frame, g, opt), rd.output);
        std::cerr << "render: " << frame.rows.size() << " rows -> " << rd.output << "\n";
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
