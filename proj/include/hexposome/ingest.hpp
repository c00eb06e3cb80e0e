#pragma once

#include <string>
#include <vector>

#include "hexposome/geom.hpp"
#include "hexposome/hexgrid.hpp"

namespace hexposome {

enum class ColumnKind { text, number };

struct Cell {
    bool missing = true;
    double number = 0.0;
    std::string text;

    static Cell na() { return {}; }
    static Cell num(double v) { return {false, v, {}}; }
    static Cell str(std::string s) { return {false, 0.0, std::move(s)}; }
};

struct Table {
    struct Column {
        std::string name;
        ColumnKind kind = ColumnKind::text;
    };
    std::vector<Column> columns;
    std::vector<std::vector<Cell>> rows;

    int column_index(const std::string& name) const;
    int require_column(const std::string& name) const;  // throws if absent
};

// Each feature owns one or more polygons (MultiPolygon flattens to several),
// with one properties row per feature in props.
struct FeatureSet {
    std::vector<std::vector<Polygon>> geoms;
    Table props;

    size_t size() const { return geoms.size(); }
};

// The hexified dataset. Rows keyed by (hex, period); values are numeric with
// NaN for missing. Period is an ISO date, a 4-digit year, or "-" for static.
struct HexFrame {
    int res = 8;
    double base_edge_s0 = 0.532575 * 2401.0;
    int rotation_sign = -1;
    std::vector<std::string> variables;

    struct Row {
        HexId hex;
        std::string period = "-";
        std::vector<double> values;
    };
    std::vector<Row> rows;

    int variable_index(const std::string& name) const;
    void sort_canonical();  // by (hex id text, period)
    void check_keys() const;  // uniqueness + single resolution
    bool grid_matches(const GridSpec& g) const;
};

RasterGrid read_ascii_grid(const std::string& path);
void write_ascii_grid(const RasterGrid& grid, const std::string& path);

FeatureSet read_geojson_polygons(const std::string& path);

Table read_csv(const std::string& path, const std::vector<Table::Column>& schema);
void write_csv(const Table& table, const std::string& path);

// RFC-4180 style field handling, shared by every CSV-shaped format.
std::vector<std::string> parse_csv_line(const std::string& line, size_t lineno, const std::string& path);
std::string csv_quote(const std::string& s);

HexFrame read_hexframe(const std::string& path);
HexFrame read_hexframe(const std::string& path, const GridSpec& expected);
void write_hexframe(const HexFrame& frame, const std::string& path);

}  // namespace hexposome
