#include "hexposome/catalog.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cctype>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "hexposome/util.hpp"
#include "json.hpp"

namespace hexposome {

std::function<void()> manifest_commit_hook;

namespace {

using ordered_json = nlohmann::ordered_json;

const std::unordered_set<std::string>& known_types() {
    static const std::unordered_set<std::string> kinds = {"raster", "vector", "tabular", "model",
                                                          "ingestion-code"};
    return kinds;
}

bool is_slug(const std::string& s) {
    if (s.empty()) return false;
    for (const char c : s) {
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_' && c != '.') {
            return false;
        }
    }
    return true;
}

// "-" (open), a bare year, or an ISO date.
bool is_period_endpoint(const std::string& s) {
    if (s == "-") return true;
    if (s.size() != 4 && s.size() != 10) return false;
    for (size_t i = 0; i < s.size(); ++i) {
        if (i == 4 || i == 7) {
            if (s[i] != '-') return false;
        } else if (!std::isdigit(static_cast<unsigned char>(s[i]))) {
            return false;
        }
    }
    return true;
}

bool is_hex_digest(const std::string& s) {
    if (s.empty()) return false;
    for (const char c : s) {
        const bool ok = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
        if (!ok) return false;
    }
    return true;
}

std::string file_sha256(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return sha256_hex(ss.str());
}

std::string now_utc() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string get_string(const ordered_json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_string()) {
        throw std::invalid_argument(std::string("missing or non-string field '") + key + "'");
    }
    return j[key].get<std::string>();
}

// Holds <path>.lock for the lifetime of the object. Creation is O_EXCL, so a
// second writer fails fast instead of queueing.
class LockFile {
public:
    explicit LockFile(const std::string& manifest_path) : path_(manifest_path + ".lock") {
        fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
        if (fd_ < 0) {
            throw std::runtime_error("manifest is locked by another writer: " + path_);
        }
    }
    ~LockFile() {
        if (fd_ >= 0) {
            ::close(fd_);
            ::unlink(path_.c_str());
        }
    }
    LockFile(const LockFile&) = delete;
    LockFile& operator=(const LockFile&) = delete;

private:
    std::string path_;
    int fd_ = -1;
};

bool file_exists(const std::string& path) { return ::access(path.c_str(), F_OK) == 0; }

// Bare years widen to the whole year so that range overlap tests work by
// plain string comparison against ISO dates.
std::pair<std::string, std::string> widen_period(const std::string& p) {
    if (p.size() == 4) return {p, p + "-12-31"};
    return {p, p};
}

bool periods_overlap(const std::array<std::string, 2>& record, const std::string& q) {
    const auto [qlo, qhi] = widen_period(q);
    std::string rlo = record[0], rhi = record[1];
    if (rlo != "-" && rlo.size() == 4) rlo = widen_period(rlo).first;
    if (rhi != "-" && rhi.size() == 4) rhi = widen_period(rhi).second;
    if (rlo != "-" && qhi < rlo) return false;
    if (rhi != "-" && rhi < qlo) return false;
    return true;
}

bool bbox_overlap(const std::array<double, 4>& a, const std::array<double, 4>& b) {
    return a[0] <= b[2] && b[0] <= a[2] && a[1] <= b[3] && b[1] <= a[3];
}

}  // namespace

std::vector<std::string> validate(const DatasetRecord& rec, const std::string& data_path) {
    std::vector<std::string> out;
    if (rec.id.empty()) {
        out.push_back("id empty");
    } else if (!is_slug(rec.id)) {
        out.push_back("id is not a slug: " + rec.id);
    }
    if (rec.name.empty()) out.push_back("name empty");
    if (!known_types().count(rec.data_type)) out.push_back("unknown data_type: " + rec.data_type);
    for (const double v : rec.spatial_extent) {
        if (!std::isfinite(v)) {
            out.push_back("spatial_extent has a non-finite bound");
            break;
        }
    }
    if (rec.spatial_extent[0] > rec.spatial_extent[2] || rec.spatial_extent[1] > rec.spatial_extent[3]) {
        out.push_back("spatial_extent min exceeds max");
    }
    for (const auto& end : rec.temporal_extent) {
        if (!is_period_endpoint(end)) out.push_back("temporal_extent endpoint not a date: " + end);
    }
    if (rec.temporal_extent[0] != "-" && rec.temporal_extent[1] != "-" &&
        is_period_endpoint(rec.temporal_extent[0]) && is_period_endpoint(rec.temporal_extent[1]) &&
        widen_period(rec.temporal_extent[0]).first > widen_period(rec.temporal_extent[1]).second) {
        out.push_back("temporal_extent start after end");
    }
    if (rec.license.empty()) out.push_back("license empty");

    // A model may live behind a DOI or an API; everything else is a file and
    // must carry its digest.
    const bool file_backed = rec.data_type != "model" && known_types().count(rec.data_type);
    if (rec.checksum.empty()) {
        if (file_backed) out.push_back("checksum missing for file-backed data_type " + rec.data_type);
    } else if (!is_hex_digest(rec.checksum)) {
        out.push_back("checksum is not a lowercase hex digest");
    }
    if (!data_path.empty()) {
        try {
            const std::string actual = file_sha256(data_path);
            if (actual != rec.checksum) {
                out.push_back("checksum mismatch: record " +
                              (rec.checksum.empty() ? std::string("(empty)") : rec.checksum) +
                              ", file " + actual);
            }
        } catch (const std::exception& e) {
            out.push_back(std::string("data file unreadable: ") + e.what());
        }
    }
    return out;
}

std::string serialize_record(const DatasetRecord& rec) {
    ordered_json j;
    j["id"] = rec.id;
    j["name"] = rec.name;
    j["data_type"] = rec.data_type;
    j["format"] = rec.format;
    j["spatial_extent"] = rec.spatial_extent;
    j["temporal_extent"] = rec.temporal_extent;
    j["native_resolution"] = rec.native_resolution;
    j["source_url"] = rec.source_url;
    j["license"] = rec.license;
    j["ingestion_code_ref"] = rec.ingestion_code_ref;
    j["checksum"] = rec.checksum;
    j["created"] = rec.created;
    return j.dump();
}

DatasetRecord parse_record(const std::string& line) {
    ordered_json j;
    try {
        j = ordered_json::parse(line);
    } catch (const std::exception& e) {
        throw std::invalid_argument(std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw std::invalid_argument("record is not a JSON object");
    DatasetRecord rec;
    rec.id = get_string(j, "id");
    rec.name = get_string(j, "name");
    rec.data_type = get_string(j, "data_type");
    rec.format = get_string(j, "format");
    if (!j.contains("spatial_extent") || !j["spatial_extent"].is_array() ||
        j["spatial_extent"].size() != 4) {
        throw std::invalid_argument("spatial_extent must be an array of 4 numbers");
    }
    for (size_t i = 0; i < 4; ++i) {
        if (!j["spatial_extent"][i].is_number()) {
            throw std::invalid_argument("spatial_extent must be an array of 4 numbers");
        }
        rec.spatial_extent[i] = j["spatial_extent"][i].get<double>();
    }
    if (!j.contains("temporal_extent") || !j["temporal_extent"].is_array() ||
        j["temporal_extent"].size() != 2 || !j["temporal_extent"][0].is_string() ||
        !j["temporal_extent"][1].is_string()) {
        throw std::invalid_argument("temporal_extent must be an array of 2 strings");
    }
    rec.temporal_extent[0] = j["temporal_extent"][0].get<std::string>();
    rec.temporal_extent[1] = j["temporal_extent"][1].get<std::string>();
    rec.native_resolution = get_string(j, "native_resolution");
    rec.source_url = get_string(j, "source_url");
    rec.license = get_string(j, "license");
    rec.ingestion_code_ref = get_string(j, "ingestion_code_ref");
    rec.checksum = get_string(j, "checksum");
    rec.created = get_string(j, "created");
    return rec;
}

std::vector<DatasetRecord> read_manifest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read manifest: " + path);
    std::vector<DatasetRecord> out;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            out.push_back(parse_record(line));
        } catch (const std::exception& e) {
            throw std::runtime_error(path + ": line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

void write_manifest(const std::vector<DatasetRecord>& records, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write manifest: " + path);
    for (const auto& rec : records) out << serialize_record(rec) << '\n';
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::string register_dataset(const DatasetRecord& rec, const std::string& manifest_path) {
    const auto violations = validate(rec);
    if (!violations.empty()) {
        std::string msg = "record does not validate:";
        for (const auto& v : violations) msg += " [" + v + "]";
        throw std::invalid_argument(msg);
    }

    LockFile lock(manifest_path);

    std::vector<DatasetRecord> records;
    if (file_exists(manifest_path)) records = read_manifest(manifest_path);
    for (const auto& existing : records) {
        if (existing.id == rec.id) throw std::invalid_argument("duplicate dataset id: " + rec.id);
    }
    DatasetRecord stamped = rec;
    if (stamped.created.empty()) stamped.created = now_utc();
    records.push_back(stamped);

    const std::string tmp = manifest_path + ".tmp";
    try {
        write_manifest(records, tmp);
        if (manifest_commit_hook) manifest_commit_hook();
        if (::rename(tmp.c_str(), manifest_path.c_str()) != 0) {
            throw std::runtime_error("rename failed: " + tmp + " -> " + manifest_path);
        }
    } catch (...) {
        ::unlink(tmp.c_str());
        throw;
    }
    return stamped.id;
}

std::vector<DatasetRecord> query(const std::string& manifest_path, const CatalogFilter& filter) {
    if (!filter.period.empty() && !is_period_endpoint(filter.period)) {
        throw std::invalid_argument("period filter is not a date: " + filter.period);
    }
    std::vector<DatasetRecord> out;
    for (const auto& rec : read_manifest(manifest_path)) {
        if (!filter.id.empty() && rec.id != filter.id) continue;
        if (!filter.data_type.empty() && rec.data_type != filter.data_type) continue;
        if (!filter.name_contains.empty() && rec.name.find(filter.name_contains) == std::string::npos) {
            continue;
        }
        if (filter.bbox && !bbox_overlap(rec.spatial_extent, *filter.bbox)) continue;
        if (!filter.period.empty() && !periods_overlap(rec.temporal_extent, filter.period)) continue;
        out.push_back(rec);
    }
    return out;
}

}  // namespace hexposome
