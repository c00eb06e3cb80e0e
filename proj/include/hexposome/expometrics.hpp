#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <hexposome/ingest.hpp>

namespace hexposome {

// One chemical mixture at one place: concentrations paired with exposure
// limits in the same units. Group labels and site tags are optional and, when
// present, aligned with the concentration vector.
struct CeemInput {
    std::vector<double> concentration;
    std::vector<double> limit;
    std::vector<std::string> cas;
    std::vector<std::string> group;
    std::vector<std::string> sites;
};

// Sum of concentration/limit ratios. A score above 1 means the mixture as a
// whole exceeds its limits even when every individual chemical is below its
// own.
double ceem(const CeemInput& input);
double ceem(const std::vector<double>& concentration, const std::vector<double>& limit);

enum class AqiClass { Good, Moderate, Unhealthy, VeryUnhealthyOrHazardous };

const char* aqi_label(AqiClass c);

// Breaks at 50/100/200, closed on the lower class.
AqiClass classify_aqi(double v);
std::pair<AqiClass, AqiClass> bivariate_aqi(double smoke, double total);

bool attainment(double annual_mean, double standard = 12.0);

// Predicate over a chemical table. Text forms:
//   "all"
//   "group in {1,2A,2B}"
//   "site has lung"
struct ChemicalFilter {
    enum class Kind { all, group_in, site_has } kind = Kind::all;
    std::vector<std::string> groups;
    std::string tag;
};

ChemicalFilter parse_chemical_filter(const std::string& text);

// CAS ids of rows matching the predicate, in table order. The table needs
// cas and group columns; sites is optional and holds semicolon-separated tags.
std::vector<std::string> filter_carcinogens(const Table& chems, const std::string& predicate);

struct CeemMapResult {
    HexFrame frame;
    // One warning when the filter selects no chemicals, one per row dropped
    // because every selected chemical was missing there.
    std::size_t warnings = 0;
};

// Per-row CEEM over the frame's chemical columns (variable name = CAS id).
// Limits table columns: cas, limit, group, sites. Missing concentrations are
// excluded from the sum, not imputed as zero; the ceem_n column counts the
// chemicals that contributed.
CeemMapResult ceem_map(const HexFrame& frame, const Table& limits, const std::string& predicate);

// Keeps rows whose hex has population >= threshold in pop's first variable.
// Hexes absent from pop are dropped.
HexFrame population_mask(const HexFrame& frame, const HexFrame& pop, double threshold = 1.0);

// Per feature across clusters: x -> 10*(x-min)/(max-min); a constant feature
// maps to 5 everywhere. Outer index clusters, inner features.
std::vector<std::vector<double>> radar_normalize(const std::vector<std::vector<double>>& summary);

}  // namespace hexposome
