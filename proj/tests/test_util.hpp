#pragma once

#include <unistd.h>

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "hexposome/geom.hpp"

namespace testutil {

// Unique scratch directory under the system temp root, removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("hexposome_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    std::string file(const std::string& name) const { return (path_ / name).string(); }
    void write(const std::string& name, const std::string& content) const {
        std::ofstream out(file(name), std::ios::binary);
        out << content;
    }

private:
    std::filesystem::path path_;
};

// Stratified Monte-Carlo area estimate: one jittered sample per stratum on an
// n x n lattice over the bounding box. At n=1000 this is a 10^6-sample
// estimate with error well under the 1e-3 tolerances used by callers.
inline double mc_area(const std::function<bool(double, double)>& inside, double xmin, double ymin,
                      double xmax, double ymax, int n = 1000, std::uint32_t seed = 20260817) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double dx = (xmax - xmin) / n;
    const double dy = (ymax - ymin) / n;
    std::int64_t hits = 0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double x = xmin + (i + u(rng)) * dx;
            const double y = ymin + (j + u(rng)) * dy;
            if (inside(x, y)) ++hits;
        }
    }
    return (xmax - xmin) * (ymax - ymin) * static_cast<double>(hits) /
           (static_cast<double>(n) * n);
}

// Winding number containment, the independent cross-check for the even-odd
// implementation. Positive or negative winding counts as inside.
inline int ring_winding(const hexposome::Point& p, const std::vector<hexposome::Point>& ring) {
    int wn = 0;
    const size_t n = ring.size();
    for (size_t i = 0, j = n - 1; i < n; j = i++) {
        const auto& a = ring[j];
        const auto& b = ring[i];
        const double cross = (b.x - a.x) * (p.y - a.y) - (p.x - a.x) * (b.y - a.y);
        if (a.y <= p.y) {
            if (b.y > p.y && cross > 0) ++wn;
        } else {
            if (b.y <= p.y && cross < 0) --wn;
        }
    }
    return wn;
}

inline bool winding_inside(const hexposome::Point& p, const hexposome::Polygon& poly) {
    int wn = ring_winding(p, poly.exterior);
    for (const auto& h : poly.holes) wn += ring_winding(p, h);
    return wn != 0;
}

// Deterministic normal deviates; std::normal_distribution is
// implementation-defined, Box-Muller from fixed uniforms is not.
class NormalSource {
public:
    explicit NormalSource(std::uint32_t seed) : rng_(seed) {}
    double operator()() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        std::uniform_real_distribution<double> u(0.0, 1.0);
        double u1 = 0.0;
        do {
            u1 = u(rng_);
        } while (u1 <= 1e-300);
        const double u2 = u(rng_);
        const double mag = std::sqrt(-2.0 * std::log(u1));
        spare_ = mag * std::sin(2.0 * M_PI * u2);
        have_spare_ = true;
        return mag * std::cos(2.0 * M_PI * u2);
    }

private:
    std::mt19937 rng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// Adjusted Rand index via pair counting.
inline double ari(const std::vector<int>& a, const std::vector<int>& b) {
    const auto choose2 = [](double m) { return m * (m - 1.0) / 2.0; };
    std::map<std::pair<int, int>, double> joint;
    std::map<int, double> ca, cb;
    for (std::size_t i = 0; i < a.size(); ++i) {
        joint[{a[i], b[i]}] += 1.0;
        ca[a[i]] += 1.0;
        cb[b[i]] += 1.0;
    }
    double sum_joint = 0.0, sum_a = 0.0, sum_b = 0.0;
    for (const auto& [k, v] : joint) sum_joint += choose2(v);
    for (const auto& [k, v] : ca) sum_a += choose2(v);
    for (const auto& [k, v] : cb) sum_b += choose2(v);
    const double expected = sum_a * sum_b / choose2(static_cast<double>(a.size()));
    const double max_index = (sum_a + sum_b) / 2.0;
    return (sum_joint - expected) / (max_index - expected);
}

}  // namespace testutil
