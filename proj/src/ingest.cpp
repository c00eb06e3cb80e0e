#include "hexposome/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "hexposome/util.hpp"
#include "json.hpp"

namespace hexposome {

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::string cur;
    for (char c : text) {
        if (c == '\n') {
            if (!cur.empty() && cur.back() == '\r') cur.pop_back();
            lines.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) lines.push_back(cur);
    return lines;
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) out.push_back(tok);
    return out;
}

}  // namespace

int Table::column_index(const std::string& name) const {
    for (size_t i = 0; i < columns.size(); ++i) {
        if (columns[i].name == name) return static_cast<int>(i);
    }
    return -1;
}

int Table::require_column(const std::string& name) const {
    const int i = column_index(name);
    if (i < 0) throw std::invalid_argument("missing column: " + name);
    return i;
}

RasterGrid read_ascii_grid(const std::string& path) {
    const auto lines = split_lines(read_file(path));
    if (lines.size() < 6) throw std::invalid_argument(path + ": truncated ascii grid header");

    std::map<std::string, double> header;
    for (int i = 0; i < 6; ++i) {
        const auto toks = split_ws(lines[i]);
        if (toks.size() != 2) {
            throw std::invalid_argument(path + ": line " + std::to_string(i + 1) + ": bad header line");
        }
        try {
            header[lower(toks[0])] = parse_double(toks[1]);
        } catch (const std::invalid_argument&) {
            throw std::invalid_argument(path + ": line " + std::to_string(i + 1) +
                                        ": non-numeric header value '" + toks[1] + "'");
        }
    }
    for (const char* key : {"ncols", "nrows", "xllcorner", "yllcorner", "cellsize", "nodata_value"}) {
        if (!header.count(key)) throw std::invalid_argument(path + ": missing header key " + key);
    }

    RasterGrid grid;
    grid.ncols = static_cast<int>(header["ncols"]);
    grid.nrows = static_cast<int>(header["nrows"]);
    grid.xll = header["xllcorner"];
    grid.yll = header["yllcorner"];
    grid.cellsize = header["cellsize"];
    grid.nodata = header["nodata_value"];
    if (grid.ncols < 1 || grid.nrows < 1) throw std::invalid_argument(path + ": ncols/nrows must be >= 1");
    if (grid.cellsize <= 0) throw std::invalid_argument(path + ": cellsize must be positive");

    if (lines.size() < 6 + static_cast<size_t>(grid.nrows)) {
        throw std::invalid_argument(path + ": expected " + std::to_string(grid.nrows) + " data rows");
    }
    grid.values.reserve(static_cast<size_t>(grid.ncols) * grid.nrows);
    for (int r = 0; r < grid.nrows; ++r) {
        const auto toks = split_ws(lines[6 + r]);
        if (static_cast<int>(toks.size()) != grid.ncols) {
            throw std::invalid_argument(path + ": line " + std::to_string(7 + r) + ": expected " +
                                        std::to_string(grid.ncols) + " values, got " +
                                        std::to_string(toks.size()));
        }
        for (const auto& tok : toks) {
            try {
                grid.values.push_back(parse_double(tok));
            } catch (const std::invalid_argument&) {
                throw std::invalid_argument(path + ": line " + std::to_string(7 + r) +
                                            ": non-numeric cell '" + tok + "'");
            }
        }
    }
    return grid;
}

void write_ascii_grid(const RasterGrid& grid, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << "ncols " << grid.ncols << "\n"
        << "nrows " << grid.nrows << "\n"
        << "xllcorner " << format_double(grid.xll) << "\n"
        << "yllcorner " << format_double(grid.yll) << "\n"
        << "cellsize " << format_double(grid.cellsize) << "\n"
        << "NODATA_value " << format_double(grid.nodata) << "\n";
    for (int r = 0; r < grid.nrows; ++r) {
        for (int c = 0; c < grid.ncols; ++c) {
            if (c) out << ' ';
            out << format_double(grid.at(r, c));
        }
        out << '\n';
    }
}

namespace {

using nlohmann::json;

std::vector<Point> json_ring(const json& arr) {
    std::vector<Point> ring;
    for (const auto& coord : arr) {
        if (!coord.is_array() || coord.size() < 2) throw std::invalid_argument("bad coordinate");
        ring.push_back({coord[0].get<double>(), coord[1].get<double>()});
    }
    if (ring.size() >= 2 && ring.front() == ring.back()) ring.pop_back();
    return ring;
}

Polygon json_polygon(const json& rings) {
    Polygon poly;
    bool first = true;
    for (const auto& r : rings) {
        auto ring = json_ring(r);
        if (ring.size() < 3) throw std::invalid_argument("ring with fewer than 3 distinct vertices");
        const double signed_area = signed_ring_area(ring);
        if (first) {
            if (signed_area < 0) std::reverse(ring.begin(), ring.end());
            poly.exterior = std::move(ring);
            first = false;
        } else {
            if (signed_area > 0) std::reverse(ring.begin(), ring.end());
            poly.holes.push_back(std::move(ring));
        }
    }
    return poly;
}

}  // namespace

FeatureSet read_geojson_polygons(const std::string& path) {
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(path + ": malformed JSON: " + e.what());
    }
    if (!doc.is_object() || doc.value("type", "") != "FeatureCollection") {
        throw std::invalid_argument(path + ": not a FeatureCollection");
    }

    FeatureSet fs;
    std::vector<json> prop_objects;
    std::vector<std::string> key_order;
    std::set<std::string> keys_seen;

    size_t index = 0;
    for (const auto& feature : doc.value("features", json::array())) {
        const json& geom = feature.at("geometry");
        const std::string type = geom.value("type", "");
        std::vector<Polygon> polys;
        if (type == "Polygon") {
            polys.push_back(json_polygon(geom.at("coordinates")));
        } else if (type == "MultiPolygon") {
            for (const auto& rings : geom.at("coordinates")) polys.push_back(json_polygon(rings));
        } else {
            throw std::invalid_argument(path + ": feature " + std::to_string(index) +
                                        ": unsupported geometry type '" + type + "'");
        }
        fs.geoms.push_back(std::move(polys));

        json props = feature.value("properties", json::object());
        if (!props.is_object()) props = json::object();
        for (const auto& [key, value] : props.items()) {
            if (keys_seen.insert(key).second) key_order.push_back(key);
            (void)value;
        }
        prop_objects.push_back(std::move(props));
        ++index;
    }

    // Column kind: number only when every present value is numeric.
    for (const auto& key : key_order) {
        bool numeric = true;
        for (const auto& props : prop_objects) {
            if (!props.contains(key) || props[key].is_null()) continue;
            if (!props[key].is_number()) numeric = false;
        }
        fs.props.columns.push_back({key, numeric ? ColumnKind::number : ColumnKind::text});
    }
    for (const auto& props : prop_objects) {
        std::vector<Cell> row;
        for (const auto& col : fs.props.columns) {
            if (!props.contains(col.name) || props[col.name].is_null()) {
                row.push_back(Cell::na());
            } else if (col.kind == ColumnKind::number) {
                row.push_back(Cell::num(props[col.name].get<double>()));
            } else if (props[col.name].is_string()) {
                row.push_back(Cell::str(props[col.name].get<std::string>()));
            } else if (props[col.name].is_boolean()) {
                row.push_back(Cell::str(props[col.name].get<bool>() ? "true" : "false"));
            } else if (props[col.name].is_number()) {
                row.push_back(Cell::str(format_double(props[col.name].get<double>())));
            } else {
                row.push_back(Cell::str(props[col.name].dump()));
            }
        }
        fs.props.rows.push_back(std::move(row));
    }
    return fs;
}

std::vector<std::string> parse_csv_line(const std::string& line, size_t lineno, const std::string& path) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    size_t i = 0;
    const size_t n = line.size();
    bool in_field_quotes = false;
    while (i <= n) {
        if (i == n) {
            fields.push_back(cur);
            break;
        }
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < n && line[i + 1] == '"') {
                    cur.push_back('"');
                    i += 2;
                } else {
                    quoted = false;
                    ++i;
                }
            } else {
                cur.push_back(c);
                ++i;
            }
        } else if (c == '"' && cur.empty() && !in_field_quotes) {
            quoted = true;
            in_field_quotes = true;
            ++i;
        } else if (c == ',') {
            fields.push_back(cur);
            cur.clear();
            in_field_quotes = false;
            ++i;
        } else {
            cur.push_back(c);
            ++i;
        }
    }
    if (quoted) {
        throw std::invalid_argument(path + ": line " + std::to_string(lineno) + ": unterminated quote");
    }
    return fields;
}

std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out.push_back('"');
    return out;
}

Table read_csv(const std::string& path, const std::vector<Table::Column>& schema) {
    const auto lines = split_lines(read_file(path));
    if (lines.empty()) throw std::invalid_argument(path + ": empty file");

    const auto header = parse_csv_line(lines[0], 1, path);
    Table table;
    for (const auto& name : header) {
        ColumnKind kind = ColumnKind::text;
        if (!schema.empty()) {
            bool found = false;
            for (const auto& col : schema) {
                if (col.name == name) {
                    kind = col.kind;
                    found = true;
                    break;
                }
            }
            if (!found) throw std::invalid_argument(path + ": column '" + name + "' not in schema");
        }
        if (table.column_index(name) >= 0) throw std::invalid_argument(path + ": duplicate column '" + name + "'");
        table.columns.push_back({name, kind});
    }
    for (const auto& col : schema) {
        if (table.column_index(col.name) < 0) {
            throw std::invalid_argument(path + ": schema column '" + col.name + "' missing from header");
        }
    }

    for (size_t li = 1; li < lines.size(); ++li) {
        const auto fields = parse_csv_line(lines[li], li + 1, path);
        if (fields.size() != table.columns.size()) {
            throw std::invalid_argument(path + ": line " + std::to_string(li + 1) + ": expected " +
                                        std::to_string(table.columns.size()) + " fields, got " +
                                        std::to_string(fields.size()));
        }
        std::vector<Cell> row;
        row.reserve(fields.size());
        for (size_t c = 0; c < fields.size(); ++c) {
            const std::string& f = fields[c];
            if (f.empty() || f == "NA") {
                row.push_back(Cell::na());
            } else if (table.columns[c].kind == ColumnKind::number) {
                try {
                    row.push_back(Cell::num(parse_double(f)));
                } catch (const std::invalid_argument&) {
                    throw std::invalid_argument(path + ": line " + std::to_string(li + 1) +
                                                ": non-numeric value '" + f + "' in numeric column '" +
                                                table.columns[c].name + "'");
                }
            } else {
                row.push_back(Cell::str(f));
            }
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

void write_csv(const Table& table, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    for (size_t c = 0; c < table.columns.size(); ++c) {
        if (c) out << ',';
        out << csv_quote(table.columns[c].name);
    }
    out << '\n';
    for (const auto& row : table.rows) {
        for (size_t c = 0; c < row.size(); ++c) {
            if (c) out << ',';
            if (row[c].missing) continue;
            if (table.columns[c].kind == ColumnKind::number) out << format_double(row[c].number);
            else out << csv_quote(row[c].text);
        }
        out << '\n';
    }
}

int HexFrame::variable_index(const std::string& name) const {
    for (size_t i = 0; i < variables.size(); ++i) {
        if (variables[i] == name) return static_cast<int>(i);
    }
    return -1;
}

void HexFrame::sort_canonical() {
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
        const std::string ka = encode_hexid(a.hex), kb = encode_hexid(b.hex);
        if (ka != kb) return ka < kb;
        return a.period < b.period;
    });
}

void HexFrame::check_keys() const {
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& row : rows) {
        if (row.hex.res != res) {
            throw std::invalid_argument("hex " + encode_hexid(row.hex) + " does not match frame resolution " +
                                        std::to_string(res));
        }
        if (row.values.size() != variables.size()) {
            throw std::invalid_argument("row " + encode_hexid(row.hex) + " has wrong value count");
        }
        if (!seen.insert({encode_hexid(row.hex), row.period}).second) {
            throw std::invalid_argument("duplicate key (" + encode_hexid(row.hex) + ", " + row.period + ")");
        }
    }
}

bool HexFrame::grid_matches(const GridSpec& g) const {
    return base_edge_s0 == g.base_edge_s0 && rotation_sign == g.rotation_sign && res <= g.max_resolution;
}

void write_hexframe(const HexFrame& frame, const std::string& path) {
    HexFrame copy = frame;
    copy.check_keys();
    copy.sort_canonical();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    char gridline[128];
    std::snprintf(gridline, sizeof gridline, "#grid res=%d s0=%s rot=%+d\n", copy.res,
                  format_double(copy.base_edge_s0).c_str(), copy.rotation_sign);
    out << gridline;
    out << "hex_id,period";
    for (const auto& v : copy.variables) out << ',' << csv_quote(v);
    out << '\n';
    for (const auto& row : copy.rows) {
        out << encode_hexid(row.hex) << ',' << csv_quote(row.period);
        for (double v : row.values) out << ',' << format_value(v);
        out << '\n';
    }
}

HexFrame read_hexframe(const std::string& path) {
    const auto lines = split_lines(read_file(path));
    HexFrame frame;
    size_t li = 0;
    bool grid_seen = false;
    for (; li < lines.size() && !lines[li].empty() && lines[li][0] == '#'; ++li) {
        const std::string& line = lines[li];
        if (line.rfind("#grid ", 0) != 0) continue;
        int rot = 0, res = 0;
        char s0buf[64] = {0};
        if (std::sscanf(line.c_str(), "#grid res=%d s0=%63s rot=%d", &res, s0buf, &rot) != 3) {
            throw std::invalid_argument(path + ": malformed #grid header: " + line);
        }
        std::string s0str(s0buf);
        // sscanf %s grabs through any trailing token; strip a glued " rot=" if present.
        if (auto pos = s0str.find(" rot="); pos != std::string::npos) s0str.resize(pos);
        frame.res = res;
        frame.base_edge_s0 = parse_double(s0str);
        frame.rotation_sign = rot;
        grid_seen = true;
    }
    if (!grid_seen) throw std::invalid_argument(path + ": missing #grid header");
    if (frame.rotation_sign != 1 && frame.rotation_sign != -1) {
        throw std::invalid_argument(path + ": rot must be +1 or -1");
    }
    if (li >= lines.size()) throw std::invalid_argument(path + ": missing column header");

    const auto header = parse_csv_line(lines[li], li + 1, path);
    if (header.size() < 2 || header[0] != "hex_id" || header[1] != "period") {
        throw std::invalid_argument(path + ": first two columns must be hex_id,period");
    }
    frame.variables.assign(header.begin() + 2, header.end());
    ++li;
    for (; li < lines.size(); ++li) {
        const auto fields = parse_csv_line(lines[li], li + 1, path);
        if (fields.size() != header.size()) {
            throw std::invalid_argument(path + ": line " + std::to_string(li + 1) + ": expected " +
                                        std::to_string(header.size()) + " fields, got " +
                                        std::to_string(fields.size()));
        }
        HexFrame::Row row;
        row.hex = decode_hexid(fields[0]);
        row.period = fields[1];
        for (size_t c = 2; c < fields.size(); ++c) {
            row.values.push_back(fields[c].empty() ? std::nan("") : parse_double(fields[c]));
        }
        frame.rows.push_back(std::move(row));
    }
    frame.check_keys();
    return frame;
}

HexFrame read_hexframe(const std::string& path, const GridSpec& expected) {
    HexFrame frame = read_hexframe(path);
    if (!frame.grid_matches(expected)) {
        throw std::invalid_argument(path + ": grid fingerprint mismatch (file s0=" +
                                    format_double(frame.base_edge_s0) + " rot=" +
                                    std::to_string(frame.rotation_sign) + ")");
    }
    return frame;
}

}  // namespace hexposome
