#include <hexposome/expometrics.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace hexposome {

namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

}  // namespace

double ceem(const std::vector<double>& concentration, const std::vector<double>& limit) {
    if (concentration.size() != limit.size())
        throw std::invalid_argument("concentration and limit lengths differ");
    if (concentration.empty()) throw std::invalid_argument("ceem needs at least one chemical");
    double score = 0.0;
    for (size_t i = 0; i < concentration.size(); ++i) {
        if (!(limit[i] > 0.0)) throw std::invalid_argument("exposure limit must be positive");
        if (concentration[i] < 0.0) throw std::invalid_argument("concentration must be non-negative");
        score += concentration[i] / limit[i];
    }
    return score;
}

double ceem(const CeemInput& input) { return ceem(input.concentration, input.limit); }

const char* aqi_label(AqiClass c) {
    switch (c) {
        case AqiClass::Good: return "Good";
        case AqiClass::Moderate: return "Moderate";
        case AqiClass::Unhealthy: return "Unhealthy";
        default: return "VeryUnhealthyOrHazardous";
    }
}

AqiClass classify_aqi(double v) {
    if (!(v >= 0.0)) throw std::invalid_argument("AQI value must be non-negative");
    if (v <= 50.0) return AqiClass::Good;
    if (v <= 100.0) return AqiClass::Moderate;
    if (v <= 200.0) return AqiClass::Unhealthy;
    return AqiClass::VeryUnhealthyOrHazardous;
}

std::pair<AqiClass, AqiClass> bivariate_aqi(double smoke, double total) {
    return {classify_aqi(smoke), classify_aqi(total)};
}

bool attainment(double annual_mean, double standard) {
    if (!(annual_mean >= 0.0)) throw std::invalid_argument("annual mean must be non-negative");
    return annual_mean <= standard;
}

ChemicalFilter parse_chemical_filter(const std::string& text) {
    const std::string t = trim(text);
    if (t.empty()) throw std::invalid_argument("empty filter predicate");
    ChemicalFilter f;
    if (t == "all") {
        f.kind = ChemicalFilter::Kind::all;
        return f;
    }
    if (t.rfind("group in {", 0) == 0 && t.back() == '}') {
        f.kind = ChemicalFilter::Kind::group_in;
        const std::string inner = t.substr(10, t.size() - 11);
        size_t start = 0;
        while (start <= inner.size()) {
            size_t comma = inner.find(',', start);
            if (comma == std::string::npos) comma = inner.size();
            const std::string g = trim(inner.substr(start, comma - start));
            if (!g.empty()) f.groups.push_back(g);
            start = comma + 1;
        }
        if (f.groups.empty()) throw std::invalid_argument("malformed filter predicate: " + text);
        return f;
    }
    if (t.rfind("site has ", 0) == 0) {
        f.kind = ChemicalFilter::Kind::site_has;
        f.tag = trim(t.substr(9));
        if (f.tag.empty()) throw std::invalid_argument("malformed filter predicate: " + text);
        return f;
    }
    throw std::invalid_argument("malformed filter predicate: " + text);
}

namespace {

bool sites_contain(const std::string& sites, const std::string& tag) {
    size_t start = 0;
    while (start <= sites.size()) {
        size_t semi = sites.find(';', start);
        if (semi == std::string::npos) semi = sites.size();
        std::string piece = sites.substr(start, semi - start);
        size_t b = piece.find_first_not_of(" \t");
        size_t e = piece.find_last_not_of(" \t");
        if (b != std::string::npos && piece.substr(b, e - b + 1) == tag) return true;
        start = semi + 1;
    }
    return false;
}

bool matches(const ChemicalFilter& f, const Cell& group, const Cell& sites) {
    switch (f.kind) {
        case ChemicalFilter::Kind::all:
            return true;
        case ChemicalFilter::Kind::group_in:
            return !group.missing &&
                   std::find(f.groups.begin(), f.groups.end(), group.text) != f.groups.end();
        case ChemicalFilter::Kind::site_has:
            return !sites.missing && sites_contain(sites.text, f.tag);
    }
    return false;
}

}  // namespace

std::vector<std::string> filter_carcinogens(const Table& chems, const std::string& predicate) {
    const ChemicalFilter f = parse_chemical_filter(predicate);
    const int cas_col = chems.require_column("cas");
    const int group_col = chems.require_column("group");
    const int sites_col = chems.column_index("sites");
    std::vector<std::string> out;
    for (const auto& row : chems.rows) {
        const Cell sites = sites_col < 0 ? Cell{} : row[sites_col];
        if (matches(f, row[group_col], sites)) out.push_back(row[cas_col].text);
    }
    return out;
}

CeemMapResult ceem_map(const HexFrame& frame, const Table& limits, const std::string& predicate) {
    const ChemicalFilter f = parse_chemical_filter(predicate);
    const int cas_col = limits.require_column("cas");
    const int limit_col = limits.require_column("limit");
    const int group_col = limits.require_column("group");
    const int sites_col = limits.column_index("sites");

    struct LimitRow {
        double limit;
        bool selected;
    };
    std::unordered_map<std::string, LimitRow> by_cas;
    for (const auto& row : limits.rows) {
        const Cell sites = sites_col < 0 ? Cell{} : row[sites_col];
        const bool sel = matches(f, row[group_col], sites);
        double lim = std::nan("");
        if (!row[limit_col].missing) lim = row[limit_col].number;
        by_cas[row[cas_col].text] = {lim, sel};
    }

    // Column index -> limit for the chemicals that pass the filter.
    std::vector<std::pair<size_t, double>> selected;
    for (size_t c = 0; c < frame.variables.size(); ++c) {
        const auto it = by_cas.find(frame.variables[c]);
        if (f.kind == ChemicalFilter::Kind::all && it == by_cas.end())
            throw std::invalid_argument("chemical without limit after filtering: " + frame.variables[c]);
        if (it == by_cas.end() || !it->second.selected) continue;
        if (!(it->second.limit > 0.0))
            throw std::invalid_argument("chemical without limit after filtering: " + frame.variables[c]);
        selected.push_back({c, it->second.limit});
    }

    CeemMapResult result;
    result.frame.res = frame.res;
    result.frame.base_edge_s0 = frame.base_edge_s0;
    result.frame.rotation_sign = frame.rotation_sign;
    result.frame.variables = {"ceem", "ceem_n"};
    if (selected.empty()) {
        result.warnings += 1;
        return result;
    }

    for (const auto& row : frame.rows) {
        double score = 0.0;
        double contributing = 0.0;
        for (const auto& [c, lim] : selected) {
            const double v = row.values[c];
            if (std::isnan(v)) continue;
            if (v < 0.0) throw std::invalid_argument("concentration must be non-negative");
            score += v / lim;
            contributing += 1.0;
        }
        if (contributing == 0.0) {
            result.warnings += 1;
            continue;
        }
        result.frame.rows.push_back({row.hex, row.period, {score, contributing}});
    }
    result.frame.sort_canonical();
    return result;
}

HexFrame population_mask(const HexFrame& frame, const HexFrame& pop, double threshold) {
    if (frame.res != pop.res || frame.base_edge_s0 != pop.base_edge_s0 ||
        frame.rotation_sign != pop.rotation_sign)
        throw std::invalid_argument("population frame is on a different grid");
    std::unordered_map<HexId, double> people;
    for (const auto& row : pop.rows) people.emplace(row.hex, row.values.empty() ? std::nan("") : row.values[0]);
    HexFrame out = frame;
    out.rows.clear();
    for (const auto& row : frame.rows) {
        const auto it = people.find(row.hex);
        if (it == people.end() || std::isnan(it->second) || it->second < threshold) continue;
        out.rows.push_back(row);
    }
    return out;
}

std::vector<std::vector<double>> radar_normalize(const std::vector<std::vector<double>>& summary) {
    if (summary.empty()) throw std::invalid_argument("radar_normalize needs at least one cluster");
    const size_t d = summary[0].size();
    for (const auto& row : summary)
        if (row.size() != d) throw std::invalid_argument("ragged cluster summary");
    std::vector<std::vector<double>> out(summary.size(), std::vector<double>(d));
    for (size_t j = 0; j < d; ++j) {
        double lo = summary[0][j], hi = summary[0][j];
        for (const auto& row : summary) {
            lo = std::min(lo, row[j]);
            hi = std::max(hi, row[j]);
        }
        // Dividing before scaling keeps the result inside [0, 10] exactly.
        for (size_t i = 0; i < summary.size(); ++i)
            out[i][j] = hi > lo ? 10.0 * ((summary[i][j] - lo) / (hi - lo)) : 5.0;
    }
    return out;
}

}  // namespace hexposome
