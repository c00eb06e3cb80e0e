#pragma once

#include <string>
#include <vector>

#include "hexposome/hexgrid.hpp"
#include "hexposome/ingest.hpp"

namespace hexposome {

// Area share of one cell lying inside one zone. frac_of_hex is in (0, 1];
// the shares of a cell across all zones sum to at most 1 + 1e-9.
struct CrosswalkRecord {
    HexId hex;
    std::string zone;
    double frac_of_hex = 0.0;
};

struct Crosswalk {
    std::string grid_fingerprint;
    int res = 8;
    std::vector<CrosswalkRecord> records;  // sorted by (hex id text, zone id)
};

// Intersects every zone polygon with the resolution-res lattice. Fractions are
// intersection area over cell area; fragments below the overlay noise floor
// are dropped. Zone ids come from the zone_field property and must be unique.
Crosswalk build_crosswalk(const FeatureSet& zones, const std::string& zone_field, int res,
                          const GridSpec& g);

void write_crosswalk(const Crosswalk& xw, const std::string& path);
Crosswalk read_crosswalk(const std::string& path);

// weighted: a cell contributes to every overlapping zone at weight frac_of_hex.
// dominant: a cell counts wholly toward its largest-share zone (ties go to the
// lexicographically smaller zone id).
enum class ZoneWeighting { weighted, dominant };

// One row per (zone_id, period), columns mean_<var> / std_<var> per requested
// stat in frame variable order. std is the weighted population form
// sqrt(sum w*(v-mean)^2 / sum w). Cells missing a variable drop out of that
// variable's sums together with their weight.
Table aggregate_to_zone(const HexFrame& frame, const Crosswalk& xw,
                        const std::vector<std::string>& stats = {"mean", "std"},
                        ZoneWeighting mode = ZoneWeighting::weighted);

// Exposure series lookups. Results carry cell and zone ids only; coordinates
// never come back out. Periods filter to the closed range [from, to], with ""
// leaving that end open.
std::vector<HexFrame::Row> locate(const Point& p, const HexFrame& frame, const GridSpec& g,
                                  const std::string& from = "", const std::string& to = "");
std::vector<HexFrame::Row> locate(const HexId& h, const HexFrame& frame,
                                  const std::string& from = "", const std::string& to = "");
Table locate_zone(const std::string& zone_id, const Table& zone_table,
                  const std::string& from = "", const std::string& to = "");

}  // namespace hexposome
