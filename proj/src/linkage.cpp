#include "hexposome/linkage.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "hexposome/convert.hpp"
#include "hexposome/util.hpp"

namespace hexposome {

namespace {

constexpr double kShareSumTol = 1e-9;

std::string zone_id_text(const Cell& c, size_t feature) {
    if (c.missing) {
        throw std::invalid_argument("feature " + std::to_string(feature) + ": zone id is missing");
    }
    return c.text.empty() ? format_double(c.number) : c.text;
}

void sort_crosswalk(std::vector<CrosswalkRecord>& records) {
    std::sort(records.begin(), records.end(), [](const CrosswalkRecord& a, const CrosswalkRecord& b) {
        const std::string ka = encode_hexid(a.hex);
        const std::string kb = encode_hexid(b.hex);
        if (ka != kb) return ka < kb;
        return a.zone < b.zone;
    });
}

void check_share_sums(const std::vector<CrosswalkRecord>& records) {
    std::unordered_map<HexId, double> sums;
    for (const auto& rec : records) sums[rec.hex] += rec.frac_of_hex;
    for (const auto& [hex, sum] : sums) {
        if (sum > 1.0 + kShareSumTol) {
            throw std::invalid_argument("zones overlap: shares of " + encode_hexid(hex) + " sum to " +
                                        format_double(sum));
        }
    }
}

bool in_period_range(const std::string& period, const std::string& from, const std::string& to) {
    if (!from.empty() && period < from) return false;
    if (!to.empty() && period > to) return false;
    return true;
}

void check_range(const std::string& from, const std::string& to) {
    if (!from.empty() && !to.empty() && from > to) {
        throw std::invalid_argument("empty period range: " + from + " > " + to);
    }
}

std::vector<HexFrame::Row> rows_for_hex(const HexId& h, const HexFrame& frame,
                                        const std::string& from, const std::string& to) {
    check_range(from, to);
    std::vector<HexFrame::Row> out;
    for (const auto& row : frame.rows) {
        if (row.hex == h && in_period_range(row.period, from, to)) out.push_back(row);
    }
    return out;
}

}  // namespace

Crosswalk build_crosswalk(const FeatureSet& zones, const std::string& zone_field, int res,
                          const GridSpec& g) {
    if (zones.size() == 0) throw std::invalid_argument("no zones to build a crosswalk from");
    const int zcol = zones.props.require_column(zone_field);

    Crosswalk xw{g.fingerprint(), res, {}};
    const double carea = g.cell_area(res);
    const double pad = g.edge(res);

    std::unordered_set<std::string> seen;
    for (size_t f = 0; f < zones.size(); ++f) {
        const std::string zone = zone_id_text(zones.props.rows[f][zcol], f);
        if (!seen.insert(zone).second) throw std::invalid_argument("duplicate zone id: " + zone);

        std::unordered_map<HexId, double> frags;
        for (const Polygon& poly : zones.geoms[f]) {
            if (poly.empty()) continue;
            Point lo = poly.exterior[0], hi = poly.exterior[0];
            for (const Point& p : poly.exterior) {
                lo.x = std::min(lo.x, p.x);
                lo.y = std::min(lo.y, p.y);
                hi.x = std::max(hi.x, p.x);
                hi.y = std::max(hi.y, p.y);
            }
            for (const HexId& h : cells_in_box({lo.x - pad, lo.y - pad}, {hi.x + pad, hi.y + pad}, res, g)) {
                const double a = intersection_area(poly, cell_boundary(h, g));
                if (a > 0.0) frags[h] += a;
            }
        }
        for (const auto& [h, a] : frags) {
            if (a > carea * kFragmentNoiseFloor) {
                xw.records.push_back({h, zone, std::min(1.0, a / carea)});
            }
        }
    }
    sort_crosswalk(xw.records);
    check_share_sums(xw.records);
    return xw;
}

void write_crosswalk(const Crosswalk& xw, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << "#grid " << xw.grid_fingerprint << " res=" << xw.res << '\n';
    out << "hex_id,zone_id,frac_of_hex\n";
    for (const auto& rec : xw.records) {
        out << encode_hexid(rec.hex) << ',' << csv_quote(rec.zone) << ','
            << format_double(rec.frac_of_hex) << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

Crosswalk read_crosswalk(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read file: " + path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("#grid ", 0) != 0) {
        throw std::invalid_argument(path + ": missing #grid header");
    }
    const size_t res_pos = line.rfind(" res=");
    if (res_pos == std::string::npos) throw std::invalid_argument(path + ": malformed #grid header");
    Crosswalk xw;
    xw.grid_fingerprint = line.substr(6, res_pos - 6);
    xw.res = std::stoi(line.substr(res_pos + 5));
    grid_from_fingerprint(xw.grid_fingerprint);  // validates early

    if (!std::getline(in, line) || line != "hex_id,zone_id,frac_of_hex") {
        throw std::invalid_argument(path + ": expected header hex_id,zone_id,frac_of_hex");
    }
    size_t lineno = 2;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto fields = parse_csv_line(line, lineno, path);
        if (fields.size() != 3) {
            throw std::invalid_argument(path + ": line " + std::to_string(lineno) + ": expected 3 fields");
        }
        const double frac = parse_double(fields[2]);
        if (!(frac > 0.0) || frac > 1.0) {
            throw std::invalid_argument(path + ": line " + std::to_string(lineno) +
                                        ": frac_of_hex out of (0, 1]: " + fields[2]);
        }
        xw.records.push_back({decode_hexid(fields[0]), fields[1], frac});
    }
    sort_crosswalk(xw.records);
    check_share_sums(xw.records);
    return xw;
}

Table aggregate_to_zone(const HexFrame& frame, const Crosswalk& xw,
                        const std::vector<std::string>& stats, ZoneWeighting mode) {
    if (stats.empty()) throw std::invalid_argument("no stats requested");
    bool want_mean = false, want_std = false;
    for (const auto& s : stats) {
        if (s == "mean") want_mean = true;
        else if (s == "std") want_std = true;
        else throw std::invalid_argument("unknown stat: " + s);
    }
    frame.check_keys();

    const GridSpec xg = grid_from_fingerprint(xw.grid_fingerprint);
    if (frame.res != xw.res || frame.base_edge_s0 != xg.base_edge_s0 ||
        frame.rotation_sign != xg.rotation_sign) {
        throw std::invalid_argument("crosswalk grid mismatch: crosswalk is " + xw.grid_fingerprint +
                                    " res=" + std::to_string(xw.res) + ", frame res=" +
                                    std::to_string(frame.res));
    }

    std::vector<CrosswalkRecord> records = xw.records;
    if (mode == ZoneWeighting::dominant) {
        // Records are sorted by (hex, zone), so the first maximum per hex is
        // already the lexicographically smallest zone at that share.
        std::vector<CrosswalkRecord> best;
        for (const auto& rec : records) {
            if (!best.empty() && best.back().hex == rec.hex) {
                if (rec.frac_of_hex > best.back().frac_of_hex) best.back() = rec;
            } else {
                best.push_back(rec);
            }
        }
        for (auto& rec : best) rec.frac_of_hex = 1.0;
        records = std::move(best);
    }

    std::unordered_map<HexId, std::vector<size_t>> by_hex;
    for (size_t i = 0; i < frame.rows.size(); ++i) by_hex[frame.rows[i].hex].push_back(i);

    const size_t nvar = frame.variables.size();
    struct Samples {
        std::vector<std::vector<std::pair<double, double>>> wv;  // per variable: (weight, value)
    };
    std::map<std::pair<std::string, std::string>, Samples> groups;
    for (const auto& rec : records) {
        const auto it = by_hex.find(rec.hex);
        if (it == by_hex.end()) continue;
        for (const size_t ri : it->second) {
            const auto& row = frame.rows[ri];
            auto& grp = groups[{rec.zone, row.period}];
            if (grp.wv.empty()) grp.wv.resize(nvar);
            for (size_t v = 0; v < nvar; ++v) {
                if (!std::isnan(row.values[v])) grp.wv[v].push_back({rec.frac_of_hex, row.values[v]});
            }
        }
    }
    if (groups.empty()) throw std::invalid_argument("frame and crosswalk share no cells");

    Table out;
    out.columns.push_back({"zone_id", ColumnKind::text});
    out.columns.push_back({"period", ColumnKind::text});
    for (const auto& var : frame.variables) {
        if (want_mean) out.columns.push_back({"mean_" + var, ColumnKind::number});
        if (want_std) out.columns.push_back({"std_" + var, ColumnKind::number});
    }
    for (const auto& [key, grp] : groups) {
        std::vector<Cell> row;
        row.push_back(Cell::str(key.first));
        row.push_back(Cell::str(key.second));
        for (size_t v = 0; v < nvar; ++v) {
            const auto& wv = grp.wv[v];
            double wsum = 0.0, wvsum = 0.0;
            for (const auto& [w, val] : wv) {
                wsum += w;
                wvsum += w * val;
            }
            if (wsum <= 0.0) {
                if (want_mean) row.push_back(Cell::na());
                if (want_std) row.push_back(Cell::na());
                continue;
            }
            const double mean = wvsum / wsum;
            if (want_mean) row.push_back(Cell::num(mean));
            if (want_std) {
                double acc = 0.0;
                for (const auto& [w, val] : wv) acc += w * (val - mean) * (val - mean);
                row.push_back(Cell::num(std::sqrt(acc / wsum)));
            }
        }
        out.rows.push_back(std::move(row));
    }
    return out;
}

std::vector<HexFrame::Row> locate(const Point& p, const HexFrame& frame, const GridSpec& g,
                                  const std::string& from, const std::string& to) {
    if (!frame.grid_matches(g)) throw std::invalid_argument("frame grid does not match the given grid");
    return rows_for_hex(point_to_cell(p, frame.res, g), frame, from, to);
}

std::vector<HexFrame::Row> locate(const HexId& h, const HexFrame& frame, const std::string& from,
                                  const std::string& to) {
    if (h.res != frame.res) {
        throw std::invalid_argument("cell resolution " + std::to_string(h.res) +
                                    " does not match frame resolution " + std::to_string(frame.res));
    }
    return rows_for_hex(h, frame, from, to);
}

Table locate_zone(const std::string& zone_id, const Table& zone_table, const std::string& from,
                  const std::string& to) {
    check_range(from, to);
    const int zcol = zone_table.require_column("zone_id");
    const int pcol = zone_table.require_column("period");
    Table out;
    out.columns = zone_table.columns;
    bool known = false;
    for (const auto& row : zone_table.rows) {
        if (row[zcol].missing || row[zcol].text != zone_id) continue;
        known = true;
        if (!row[pcol].missing && in_period_range(row[pcol].text, from, to)) out.rows.push_back(row);
    }
    if (!known) throw std::invalid_argument("unknown zone: " + zone_id);
    return out;
}

}  // namespace hexposome
