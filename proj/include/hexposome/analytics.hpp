#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <hexposome/ingest.hpp>

namespace hexposome {

// Dense observation matrix. No missing values allowed; callers drop or impute
// first (matrix_from_frame drops).
struct Matrix {
    std::vector<std::string> columns;
    std::vector<std::string> row_keys;
    std::vector<std::vector<double>> rows;

    std::size_t n() const { return rows.size(); }
    std::size_t d() const { return columns.size(); }
};

struct MatrixView {
    Matrix x;
    std::vector<std::size_t> source_rows;  // indices into the frame it came from
};

// Pulls the named variables (all when empty) out of a frame, dropping rows
// with any missing value among them.
MatrixView matrix_from_frame(const HexFrame& frame, const std::vector<std::string>& variables = {});

struct ColumnStats {
    std::vector<double> mean;
    std::vector<double> std;  // population convention (divide by n)
};

// (x - mean) / std per column; zero-variance columns become all zeros.
std::pair<Matrix, ColumnStats> standardize(const Matrix& x);

struct PCAModel {
    std::vector<double> means;                    // d
    std::vector<std::vector<double>> components;  // d rows, each a unit d-vector
    std::vector<double> eigenvalues;              // descending
    std::vector<double> explained_variance_ratio;
};

// Eigendecomposition of the sample covariance (divide by n-1). Components are
// sorted by descending eigenvalue and sign-fixed so each one's
// largest-magnitude entry is positive.
PCAModel pca_fit(const Matrix& x);
Matrix pca_transform(const PCAModel& m, const Matrix& x, std::size_t k);

// Smallest k whose cumulative ratio reaches t; t = 1 gives all components.
std::size_t pca_select_threshold(const std::vector<double>& ratios, double t);
// Components strictly before the scree knee, where the knee maximizes the
// perpendicular distance from (i, ratio_i) to the chord (1, ratio_1)-(d, ratio_d).
std::size_t pca_select_elbow(const std::vector<double>& ratios);

// Distance to the min_samples-th nearest neighbor, the point itself counting
// as neighbor 1.
std::vector<double> core_distances(const Matrix& x, int min_samples);

struct MstEdge {
    int a;
    int b;
    double weight;
};

// Prim over the complete graph with d_mr(a,b) = max(core(a), core(b), dist(a,b)).
// Ties broken by (weight, min vertex, max vertex).
std::vector<MstEdge> mutual_reachability_mst(const Matrix& x, int min_samples);

struct CondensedEdge {
    int parent;
    int child;   // < n: a point; >= n: a cluster
    double lambda;
    int size;
};

struct ClusterModel {
    std::vector<int> labels;  // -1 = noise
    int min_cluster_size = 0;
    int min_samples = 0;
    int n_clusters = 0;
    std::vector<double> stabilities;       // per final cluster id
    std::vector<CondensedEdge> condensed;  // root has id n
};

ClusterModel hdbscan_fit(const Matrix& x, int min_cluster_size, int min_samples);

// Mean over non-noise points of (b-a)/max(a,b); noise rows are excluded.
// Empty when fewer than two clusters remain.
std::optional<double> silhouette(const Matrix& x, const std::vector<int>& labels);

struct GridSearchResult {
    int min_cluster_size = 0;
    int min_samples = 0;
    double score = 0.0;
    ClusterModel model;
};

// Evaluates every (min_cluster_size, min_samples) pair on the lattice and
// keeps the best silhouette. Ties prefer smaller min_cluster_size, then
// smaller min_samples. Default lattice: 5,10,...,100.
GridSearchResult grid_search_hdbscan(const Matrix& x,
                                     const std::vector<int>& lattice = {5, 10, 15, 20, 25, 30, 35, 40,
                                                                        45, 50, 55, 60, 65, 70, 75, 80,
                                                                        85, 90, 95, 100});

struct FiveNumber {
    double min, q1, median, q3, max;
};

struct ClusterSummary {
    int cluster;  // -1 = noise, listed last
    std::size_t size;
    std::vector<FiveNumber> per_variable;
};

// Quartiles by linear interpolation between order statistics; missing values
// are skipped per variable.
std::vector<ClusterSummary> cluster_summary(const HexFrame& frame, const std::vector<int>& labels);

// Interpolated quantile of a sorted copy of values, p in [0,1].
double quantile(std::vector<double> values, double p);
// k-1 interior quantile breaks splitting values into k classes.
std::vector<double> quantile_breaks(const std::vector<double>& values, int k);

// Labels as a one-column frame ("cluster"), keyed like the source rows.
HexFrame labels_frame(const HexFrame& source, const std::vector<std::size_t>& source_rows,
                      const std::vector<int>& labels);

// parent,child,lambda,size rows in condensed order.
std::string condensed_tree_csv(const ClusterModel& model);

}  // namespace hexposome
