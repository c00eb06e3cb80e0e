#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hexposome/geom.hpp"
#include "hexposome/hexgrid.hpp"
#include "hexposome/ingest.hpp"

namespace hexposome {

enum class Aggregation { mean, sum, count, min, max };
enum class Semantics { intensive, extensive, categorical };

Aggregation parse_aggregation(const std::string& name);
Semantics parse_semantics(const std::string& name);

struct OverlayRecord {
    std::int64_t source_index = 0;
    HexId hex;
    double fragment_area = 0.0;
    double frac_of_source = 0.0;
    double frac_of_hex = 0.0;
};

// Reusable intersection map between one source geometry set and the hex grid.
// Records sorted by (source_index, hex). Bound to its grid and source by
// fingerprint and checksum so a stale map cannot be applied silently.
struct OverlayMap {
    std::string grid_fingerprint;
    std::string source_checksum;
    int res = 8;
    std::vector<OverlayRecord> records;
};

struct ChunkSpec {
    double chunk_width = 10.0;  // km
    double halo = 0.0;          // km
};

struct ConvertStrategy {
    enum class Kind { centroid, polyfill, overlay };
    Kind kind = Kind::centroid;
    Aggregation agg = Aggregation::mean;   // centroid only
    Semantics sem = Semantics::intensive;  // overlay only
    std::string value_field;               // feature sources
    std::string variable = "value";
    std::string period = "-";
};

// Hexes with less included area fraction than this are dropped from output.
inline constexpr double kCoverageThreshold = 1e-9;

// Fragments below this fraction of a cell are coordinate rounding noise, not
// geometry: clipping two far-from-origin rings that share an edge leaves
// slivers proportional to the coordinate ulp, which can exceed the absolute
// sliver cutoff. Overlay maps skip them.
inline constexpr double kFragmentNoiseFloor = 1e-12;

HexFrame centroid_aggregate(const RasterGrid& src, int res, const GridSpec& g, Aggregation agg,
                            const std::string& variable, const std::string& period = "-");
HexFrame centroid_aggregate(const Table& points, const std::string& x_col, const std::string& y_col,
                            const std::string& value_col, int res, const GridSpec& g, Aggregation agg,
                            const std::string& variable, const std::string& period = "-");

HexFrame polyfill_assign(const FeatureSet& features, const std::string& value_field, int res,
                         const GridSpec& g, const std::string& variable, const std::string& period = "-");

OverlayMap build_overlay_map(const RasterGrid& src, int res, const GridSpec& g);
OverlayMap build_overlay_map(const FeatureSet& features, int res, const GridSpec& g);

void check_overlay_grid(const OverlayMap& map, const GridSpec& g, int res);

// values / labels are indexed by source_index; NaN (or an empty label) means
// missing and never contributes. Categorical labels must parse as numbers so
// the result fits a numeric frame; ties break on the smaller label text.
HexFrame apply_overlay(const OverlayMap& map, const std::vector<double>& values, Semantics sem,
                       const std::string& variable, const std::string& period = "-");
HexFrame apply_overlay_categorical(const OverlayMap& map, const std::vector<std::string>& labels,
                                   const std::string& variable, const std::string& period = "-");

// Per-source values for overlay application.
std::vector<double> raster_values(const RasterGrid& src);
std::vector<double> feature_values(const FeatureSet& features, const std::string& value_field);

double max_source_diameter(const RasterGrid& src);
double max_source_diameter(const FeatureSet& features);
double required_halo(ConvertStrategy::Kind kind, double circumradius, double max_diameter);

HexFrame chunked_convert(const RasterGrid& src, int res, const GridSpec& g,
                         const ConvertStrategy& strat, const ChunkSpec& spec, int threads = 1);
HexFrame chunked_convert(const FeatureSet& src, int res, const GridSpec& g,
                         const ConvertStrategy& strat, const ChunkSpec& spec, int threads = 1);

void write_overlay_map(const OverlayMap& map, const std::string& path);
OverlayMap read_overlay_map(const std::string& path);

std::string raster_checksum(const RasterGrid& src);
std::string features_checksum(const FeatureSet& features);

GridSpec grid_from_fingerprint(const std::string& fp);

}  // namespace hexposome
