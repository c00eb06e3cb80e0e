#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace hexposome {

// One catalogued dataset. Serialized as a single JSON line with these field
// names; spatial_extent is [xmin, ymin, xmax, ymax] in km, temporal_extent is
// [start, end] as ISO dates (or bare years) with "-" for an open end.
struct DatasetRecord {
    std::string id;         // unique slug
    std::string name;
    std::string data_type;  // raster | vector | tabular | model | ingestion-code
    std::string format;
    std::array<double, 4> spatial_extent{0.0, 0.0, 0.0, 0.0};
    std::array<std::string, 2> temporal_extent{"-", "-"};
    std::string native_resolution;
    std::string source_url;
    std::string license;
    std::string ingestion_code_ref;
    std::string checksum;  // sha-256 hex; required except for model datasets
    std::string created;
};

// Violations are values, not exceptions: every failed invariant is listed.
// With a data_path, the file's digest is recomputed and compared.
std::vector<std::string> validate(const DatasetRecord& rec, const std::string& data_path = "");

std::string serialize_record(const DatasetRecord& rec);
DatasetRecord parse_record(const std::string& line);

std::vector<DatasetRecord> read_manifest(const std::string& path);
void write_manifest(const std::vector<DatasetRecord>& records, const std::string& path);

// Appends under an advisory lock, rewriting the manifest atomically (temp
// file, then rename). A missing manifest is created. Readers never block.
// Throws on validation failure, duplicate id, or a held lock; the manifest
// is untouched in every failure case.
std::string register_dataset(const DatasetRecord& rec, const std::string& manifest_path);

// Test seam: runs after the temp manifest is written, before the rename.
extern std::function<void()> manifest_commit_hook;

// All set predicates must hold (AND). A bare-year period expands to the whole
// year, so "2018" overlaps a record running 2006 to 2019.
struct CatalogFilter {
    std::string id;             // equality
    std::string data_type;      // equality
    std::string name_contains;  // substring
    std::optional<std::array<double, 4>> bbox;  // spatial intersection
    std::string period;         // temporal overlap
};

std::vector<DatasetRecord> query(const std::string& manifest_path, const CatalogFilter& filter);

}  // namespace hexposome
