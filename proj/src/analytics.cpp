#include <hexposome/analytics.hpp>

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <hexposome/util.hpp>

namespace hexposome {

namespace {

void require_clean(const Matrix& x, const char* op) {
    if (x.n() == 0 || x.d() == 0) throw std::invalid_argument(std::string(op) + ": empty matrix");
    for (const auto& row : x.rows) {
        if (row.size() != x.d()) throw std::invalid_argument(std::string(op) + ": ragged matrix");
        for (double v : row)
            if (std::isnan(v)) throw std::invalid_argument(std::string(op) + ": missing values in matrix");
    }
}

double dist(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (size_t j = 0; j < a.size(); ++j) {
        const double diff = a[j] - b[j];
        s += diff * diff;
    }
    return std::sqrt(s);
}

}  // namespace

MatrixView matrix_from_frame(const HexFrame& frame, const std::vector<std::string>& variables) {
    const std::vector<std::string>& vars = variables.empty() ? frame.variables : variables;
    std::vector<int> cols;
    for (const auto& name : vars) {
        const int c = frame.variable_index(name);
        if (c < 0) throw std::invalid_argument("frame has no variable " + name);
        cols.push_back(c);
    }
    MatrixView view;
    view.x.columns = vars;
    for (size_t i = 0; i < frame.rows.size(); ++i) {
        const auto& row = frame.rows[i];
        std::vector<double> vals;
        vals.reserve(cols.size());
        bool any_missing = false;
        for (int c : cols) {
            const double v = row.values[c];
            if (std::isnan(v)) {
                any_missing = true;
                break;
            }
            vals.push_back(v);
        }
        if (any_missing) continue;
        std::string key = encode_hexid(row.hex);
        if (row.period != "-") key += "|" + row.period;
        view.x.row_keys.push_back(std::move(key));
        view.x.rows.push_back(std::move(vals));
        view.source_rows.push_back(i);
    }
    return view;
}

std::pair<Matrix, ColumnStats> standardize(const Matrix& x) {
    require_clean(x, "standardize");
    if (x.n() < 2) throw std::invalid_argument("standardize needs at least 2 rows");
    const size_t n = x.n(), d = x.d();
    ColumnStats stats;
    stats.mean.assign(d, 0.0);
    stats.std.assign(d, 0.0);
    for (const auto& row : x.rows)
        for (size_t j = 0; j < d; ++j) stats.mean[j] += row[j];
    for (size_t j = 0; j < d; ++j) stats.mean[j] /= static_cast<double>(n);
    for (const auto& row : x.rows)
        for (size_t j = 0; j < d; ++j) {
            const double c = row[j] - stats.mean[j];
            stats.std[j] += c * c;
        }
    for (size_t j = 0; j < d; ++j) stats.std[j] = std::sqrt(stats.std[j] / static_cast<double>(n));

    Matrix out = x;
    for (auto& row : out.rows)
        for (size_t j = 0; j < d; ++j)
            row[j] = stats.std[j] > 0.0 ? (row[j] - stats.mean[j]) / stats.std[j] : 0.0;
    return {std::move(out), std::move(stats)};
}

namespace {

// Cyclic Jacobi on a symmetric matrix. Returns eigenvalues on the diagonal of
// a and accumulates the rotations into v (eigenvector j = column j of v).
void jacobi_eigen(std::vector<std::vector<double>>& a, std::vector<std::vector<double>>& v) {
    const size_t d = a.size();
    v.assign(d, std::vector<double>(d, 0.0));
    for (size_t j = 0; j < d; ++j) v[j][j] = 1.0;
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off_sq = 0.0, frob_sq = 0.0;
        for (size_t p = 0; p < d; ++p)
            for (size_t q = 0; q < d; ++q) {
                frob_sq += a[p][q] * a[p][q];
                if (q > p) off_sq += a[p][q] * a[p][q];
            }
        if (off_sq <= 1e-30 * (frob_sq + 1e-300)) break;
        for (size_t p = 0; p + 1 < d; ++p) {
            for (size_t q = p + 1; q < d; ++q) {
                const double apq = a[p][q];
                if (apq == 0.0) continue;
                const double theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                double t = 1.0 / (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                if (theta < 0.0) t = -t;
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                const double app = a[p][p], aqq = a[q][q];
                for (size_t r = 0; r < d; ++r) {
                    if (r == p || r == q) continue;
                    const double arp = a[r][p], arq = a[r][q];
                    a[r][p] = a[p][r] = c * arp - s * arq;
                    a[r][q] = a[q][r] = s * arp + c * arq;
                }
                a[p][p] = c * c * app - 2.0 * s * c * apq + s * s * aqq;
                a[q][q] = s * s * app + 2.0 * s * c * apq + c * c * aqq;
                a[p][q] = a[q][p] = 0.0;
                for (size_t r = 0; r < d; ++r) {
                    const double vrp = v[r][p], vrq = v[r][q];
                    v[r][p] = c * vrp - s * vrq;
                    v[r][q] = s * vrp + c * vrq;
                }
            }
        }
    }
}

}  // namespace

PCAModel pca_fit(const Matrix& x) {
    require_clean(x, "pca_fit");
    if (x.n() < 2) throw std::invalid_argument("pca_fit needs at least 2 rows");
    const size_t n = x.n(), d = x.d();

    PCAModel m;
    m.means.assign(d, 0.0);
    for (const auto& row : x.rows)
        for (size_t j = 0; j < d; ++j) m.means[j] += row[j];
    for (size_t j = 0; j < d; ++j) m.means[j] /= static_cast<double>(n);

    std::vector<std::vector<double>> cov(d, std::vector<double>(d, 0.0));
    for (const auto& row : x.rows)
        for (size_t j = 0; j < d; ++j) {
            const double cj = row[j] - m.means[j];
            for (size_t k = j; k < d; ++k) cov[j][k] += cj * (row[k] - m.means[k]);
        }
    for (size_t j = 0; j < d; ++j)
        for (size_t k = j; k < d; ++k) cov[k][j] = cov[j][k] /= static_cast<double>(n - 1);

    std::vector<std::vector<double>> v;
    jacobi_eigen(cov, v);

    std::vector<size_t> order(d);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t i, size_t j) { return cov[i][i] > cov[j][j]; });

    double total = 0.0;
    for (size_t j = 0; j < d; ++j) total += std::max(cov[j][j], 0.0);
    m.components.assign(d, std::vector<double>(d));
    m.eigenvalues.resize(d);
    m.explained_variance_ratio.resize(d);
    for (size_t k = 0; k < d; ++k) {
        const size_t src = order[k];
        m.eigenvalues[k] = cov[src][src];
        m.explained_variance_ratio[k] = total > 0.0 ? std::max(cov[src][src], 0.0) / total : 0.0;
        for (size_t j = 0; j < d; ++j) m.components[k][j] = v[j][src];
        // Deterministic sign: the largest-magnitude entry points positive.
        size_t arg = 0;
        for (size_t j = 1; j < d; ++j)
            if (std::fabs(m.components[k][j]) > std::fabs(m.components[k][arg])) arg = j;
        if (m.components[k][arg] < 0.0)
            for (size_t j = 0; j < d; ++j) m.components[k][j] = -m.components[k][j];
    }
    return m;
}

Matrix pca_transform(const PCAModel& m, const Matrix& x, std::size_t k) {
    require_clean(x, "pca_transform");
    if (k > m.components.size()) throw std::invalid_argument("k exceeds the component count");
    if (x.d() != m.means.size()) throw std::invalid_argument("matrix width differs from the model");
    Matrix out;
    out.row_keys = x.row_keys;
    for (size_t c = 0; c < k; ++c) {
        char name[32];
        std::snprintf(name, sizeof name, "pc%zu", c + 1);
        out.columns.push_back(name);
    }
    out.rows.reserve(x.n());
    for (const auto& row : x.rows) {
        std::vector<double> score(k, 0.0);
        for (size_t c = 0; c < k; ++c)
            for (size_t j = 0; j < x.d(); ++j)
                score[c] += (row[j] - m.means[j]) * m.components[c][j];
        out.rows.push_back(std::move(score));
    }
    return out;
}

std::size_t pca_select_threshold(const std::vector<double>& ratios, double t) {
    if (ratios.empty()) throw std::invalid_argument("empty variance ratios");
    if (!(t > 0.0) || t > 1.0) throw std::invalid_argument("threshold must be in (0, 1]");
    // The summation tolerance absorbs rounding: 0.7 + 0.2 is an ulp below 0.9.
    double cum = 0.0;
    for (size_t k = 0; k < ratios.size(); ++k) {
        cum += ratios[k];
        if (cum >= t - 1e-12) return k + 1;
    }
    return ratios.size();
}

std::size_t pca_select_elbow(const std::vector<double>& ratios) {
    if (ratios.empty()) throw std::invalid_argument("empty variance ratios");
    const size_t d = ratios.size();
    if (d <= 2) return 1;
    // Perpendicular distance from (i, r_i) to the chord (1, r_1)-(d, r_d).
    const double dx = static_cast<double>(d - 1);
    const double dy = ratios[d - 1] - ratios[0];
    const double len = std::sqrt(dx * dx + dy * dy);
    size_t knee = 1;
    double best = -1.0;
    for (size_t i = 1; i + 1 < d; ++i) {
        const double px = static_cast<double>(i);
        const double py = ratios[i] - ratios[0];
        const double distance = std::fabs(dx * py - dy * px) / len;
        if (distance > best) {
            best = distance;
            knee = i + 1;  // 1-based component index
        }
    }
    return std::max<std::size_t>(1, knee - 1);
}

std::vector<double> core_distances(const Matrix& x, int min_samples) {
    require_clean(x, "core_distances");
    const size_t n = x.n();
    if (min_samples < 1) throw std::invalid_argument("min_samples must be at least 1");
    if (static_cast<size_t>(min_samples) > n)
        throw std::invalid_argument("min_samples exceeds the number of points");
    std::vector<double> core(n);
    std::vector<double> row(n);
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = 0; j < n; ++j) row[j] = dist(x.rows[i], x.rows[j]);
        std::nth_element(row.begin(), row.begin() + (min_samples - 1), row.end());
        core[i] = row[min_samples - 1];
    }
    return core;
}

std::vector<MstEdge> mutual_reachability_mst(const Matrix& x, int min_samples) {
    const std::vector<double> core = core_distances(x, min_samples);
    const size_t n = x.n();
    if (n < 2) throw std::invalid_argument("mst needs at least 2 points");

    const auto mr = [&](size_t a, size_t b) {
        return std::max({core[a], core[b], dist(x.rows[a], x.rows[b])});
    };
    // Tuple the tie-break orders on: (weight, min endpoint, max endpoint).
    const auto edge_less = [](double w1, int a1, int b1, double w2, int a2, int b2) {
        if (w1 != w2) return w1 < w2;
        const int lo1 = std::min(a1, b1), hi1 = std::max(a1, b1);
        const int lo2 = std::min(a2, b2), hi2 = std::max(a2, b2);
        if (lo1 != lo2) return lo1 < lo2;
        return hi1 < hi2;
    };

    std::vector<char> in_tree(n, 0);
    std::vector<double> key(n, DBL_MAX);
    std::vector<int> parent(n, 0);
    in_tree[0] = 1;
    for (size_t j = 1; j < n; ++j) key[j] = mr(0, j);

    std::vector<MstEdge> edges;
    edges.reserve(n - 1);
    for (size_t step = 1; step < n; ++step) {
        int pick = -1;
        for (size_t j = 0; j < n; ++j) {
            if (in_tree[j]) continue;
            if (pick < 0 || edge_less(key[j], parent[j], static_cast<int>(j), key[pick],
                                      parent[pick], pick))
                pick = static_cast<int>(j);
        }
        in_tree[pick] = 1;
        edges.push_back({parent[pick], pick, key[pick]});
        for (size_t j = 0; j < n; ++j) {
            if (in_tree[j]) continue;
            const double w = mr(pick, j);
            if (w < key[j] ||
                (w == key[j] && edge_less(w, pick, static_cast<int>(j), key[j], parent[j],
                                          static_cast<int>(j)))) {
                key[j] = w;
                parent[j] = pick;
            }
        }
    }
    return edges;
}

namespace {

struct Dendrogram {
    // Nodes 0..n-1 are points; internal nodes follow in merge order.
    std::vector<int> left, right;      // children of internal nodes, offset by n
    std::vector<double> height;        // merge distance
    std::vector<int> size;
    int n = 0;

    int node_size(int node) const { return node < n ? 1 : size[node - n]; }
};

Dendrogram single_linkage(const std::vector<MstEdge>& mst, int n) {
    std::vector<MstEdge> edges = mst;
    std::sort(edges.begin(), edges.end(), [](const MstEdge& e1, const MstEdge& e2) {
        if (e1.weight != e2.weight) return e1.weight < e2.weight;
        const int lo1 = std::min(e1.a, e1.b), hi1 = std::max(e1.a, e1.b);
        const int lo2 = std::min(e2.a, e2.b), hi2 = std::max(e2.a, e2.b);
        if (lo1 != lo2) return lo1 < lo2;
        return hi1 < hi2;
    });

    Dendrogram d;
    d.n = n;
    std::vector<int> root(n);
    std::iota(root.begin(), root.end(), 0);
    std::vector<int> node_of(n);
    std::iota(node_of.begin(), node_of.end(), 0);
    const auto find = [&](int v) {
        while (root[v] != v) {
            root[v] = root[root[v]];
            v = root[v];
        }
        return v;
    };
    int next = n;
    for (const MstEdge& e : edges) {
        const int ra = find(e.a), rb = find(e.b);
        d.left.push_back(node_of[ra]);
        d.right.push_back(node_of[rb]);
        d.height.push_back(e.weight);
        d.size.push_back(d.node_size(node_of[ra]) + d.node_size(node_of[rb]));
        root[rb] = ra;
        node_of[ra] = next++;
    }
    return d;
}

void collect_points(const Dendrogram& d, int node, std::vector<int>& out) {
    std::vector<int> stack{node};
    while (!stack.empty()) {
        const int cur = stack.back();
        stack.pop_back();
        if (cur < d.n) {
            out.push_back(cur);
        } else {
            stack.push_back(d.left[cur - d.n]);
            stack.push_back(d.right[cur - d.n]);
        }
    }
}

}  // namespace

ClusterModel hdbscan_fit(const Matrix& x, int min_cluster_size, int min_samples) {
    require_clean(x, "hdbscan_fit");
    const int n = static_cast<int>(x.n());
    if (min_cluster_size < 2) throw std::invalid_argument("min_cluster_size must be at least 2");
    if (min_cluster_size > n) throw std::invalid_argument("min_cluster_size exceeds the number of points");
    if (n < 2) throw std::invalid_argument("hdbscan needs at least 2 points");

    const std::vector<MstEdge> mst = mutual_reachability_mst(x, min_samples);
    const Dendrogram dendro = single_linkage(mst, n);

    ClusterModel model;
    model.min_cluster_size = min_cluster_size;
    model.min_samples = min_samples;
    model.labels.assign(n, -1);

    // Condensed tree: clusters get ids n, n+1, ... with the root at n. Points
    // keep their row index.
    std::vector<double> lambda_birth{0.0};
    std::vector<int> parent_cluster{-1};
    std::vector<int> point_parent(n, -1);
    const auto cluster_slot = [&](int cid) { return cid - n; };
    int next_cluster = n + 1;

    struct Task {
        int dendro_node;
        int cid;
    };
    std::vector<Task> stack{{2 * n - 2, n}};
    std::vector<int> scratch;
    while (!stack.empty()) {
        const Task t = stack.back();
        stack.pop_back();
        const int slot = t.dendro_node - n;
        const double h = dendro.height[slot];
        const double lam = h > 0.0 ? 1.0 / h : DBL_MAX;
        const int l = dendro.left[slot], r = dendro.right[slot];
        const int sl = dendro.node_size(l), sr = dendro.node_size(r);

        if (sl >= min_cluster_size && sr >= min_cluster_size) {
            for (int child : {l, r}) {
                const int cid = next_cluster++;
                lambda_birth.push_back(lam);
                parent_cluster.push_back(t.cid);
                model.condensed.push_back({t.cid, cid, lam, dendro.node_size(child)});
            }
            // Processing left-first keeps cluster ids in tree order.
            stack.push_back({r, next_cluster - 1});
            stack.push_back({l, next_cluster - 2});
        } else if (sl < min_cluster_size && sr < min_cluster_size) {
            scratch.clear();
            collect_points(dendro, l, scratch);
            collect_points(dendro, r, scratch);
            for (int p : scratch) {
                model.condensed.push_back({t.cid, p, lam, 1});
                point_parent[p] = t.cid;
            }
        } else {
            const int small = sl < min_cluster_size ? l : r;
            const int big = sl < min_cluster_size ? r : l;
            scratch.clear();
            collect_points(dendro, small, scratch);
            for (int p : scratch) {
                model.condensed.push_back({t.cid, p, lam, 1});
                point_parent[p] = t.cid;
            }
            stack.push_back({big, t.cid});
        }
    }

    const int n_condensed = next_cluster - n;
    std::vector<double> stability(n_condensed, 0.0);
    std::vector<std::vector<int>> child_clusters(n_condensed);
    for (const CondensedEdge& e : model.condensed) {
        stability[cluster_slot(e.parent)] +=
            e.size * (e.lambda - lambda_birth[cluster_slot(e.parent)]);
        if (e.child >= n) child_clusters[cluster_slot(e.parent)].push_back(e.child);
    }

    // Excess of mass, the root competing like any other cluster.
    std::vector<char> selected(n_condensed, 0);
    std::vector<double> subtree(n_condensed, 0.0);
    for (int cid = next_cluster - 1; cid >= n; --cid) {
        const int slot = cluster_slot(cid);
        if (child_clusters[slot].empty()) {
            selected[slot] = 1;
            subtree[slot] = stability[slot];
            continue;
        }
        double s = 0.0;
        for (int child : child_clusters[slot]) s += subtree[cluster_slot(child)];
        if (stability[slot] > s) {
            selected[slot] = 1;
            subtree[slot] = stability[slot];
        } else {
            subtree[slot] = s;
        }
    }
    std::vector<char> shadowed(n_condensed, 0);
    for (int cid = n; cid < next_cluster; ++cid) {
        const int slot = cluster_slot(cid);
        const int par = parent_cluster[slot];
        if (par >= 0)
            shadowed[slot] = shadowed[cluster_slot(par)] || selected[cluster_slot(par)];
    }
    std::vector<char> final_cluster(n_condensed, 0);
    for (int slot = 0; slot < n_condensed; ++slot)
        final_cluster[slot] = selected[slot] && !shadowed[slot];

    // A point belongs to the nearest selected ancestor of its fall-out edge.
    std::vector<int> owner(n, -1);
    std::vector<int> member_count(n_condensed, 0);
    for (int p = 0; p < n; ++p) {
        int cid = point_parent[p];
        while (cid >= 0 && !final_cluster[cluster_slot(cid)]) cid = parent_cluster[cluster_slot(cid)];
        owner[p] = cid;
        if (cid >= 0) ++member_count[cluster_slot(cid)];
    }

    std::vector<int> finals;
    for (int cid = n; cid < next_cluster; ++cid)
        if (final_cluster[cluster_slot(cid)]) finals.push_back(cid);
    std::sort(finals.begin(), finals.end(), [&](int a, int b) {
        if (member_count[cluster_slot(a)] != member_count[cluster_slot(b)])
            return member_count[cluster_slot(a)] > member_count[cluster_slot(b)];
        return a < b;
    });
    std::vector<int> label_of(n_condensed, -1);
    for (size_t i = 0; i < finals.size(); ++i) {
        label_of[cluster_slot(finals[i])] = static_cast<int>(i);
        model.stabilities.push_back(stability[cluster_slot(finals[i])]);
    }
    model.n_clusters = static_cast<int>(finals.size());
    for (int p = 0; p < n; ++p)
        if (owner[p] >= 0) model.labels[p] = label_of[cluster_slot(owner[p])];
    return model;
}

std::optional<double> silhouette(const Matrix& x, const std::vector<int>& labels) {
    require_clean(x, "silhouette");
    const size_t n = x.n();
    if (labels.size() != n) throw std::invalid_argument("labels do not align with the matrix");

    std::map<int, size_t> cluster_sizes;
    for (int l : labels)
        if (l >= 0) ++cluster_sizes[l];
    if (cluster_sizes.size() < 2) return std::nullopt;

    double total = 0.0;
    size_t counted = 0;
    std::map<int, double> sums;
    for (size_t i = 0; i < n; ++i) {
        if (labels[i] < 0) continue;
        sums.clear();
        for (size_t j = 0; j < n; ++j) {
            if (j == i || labels[j] < 0) continue;
            sums[labels[j]] += dist(x.rows[i], x.rows[j]);
        }
        const size_t own = cluster_sizes[labels[i]];
        double si = 0.0;
        if (own > 1) {
            const double a = sums[labels[i]] / static_cast<double>(own - 1);
            double b = DBL_MAX;
            for (const auto& [l, s] : sums) {
                if (l == labels[i]) continue;
                b = std::min(b, s / static_cast<double>(cluster_sizes[l]));
            }
            const double m = std::max(a, b);
            si = m > 0.0 ? (b - a) / m : 0.0;
        }
        total += si;
        ++counted;
    }
    return total / static_cast<double>(counted);
}

GridSearchResult grid_search_hdbscan(const Matrix& x, const std::vector<int>& lattice) {
    require_clean(x, "grid_search_hdbscan");
    if (lattice.empty()) throw std::invalid_argument("empty hyperparameter lattice");
    const int top = *std::max_element(lattice.begin(), lattice.end());
    if (x.n() <= static_cast<size_t>(top))
        throw std::invalid_argument("dataset is not larger than the search lattice maximum");

    GridSearchResult best;
    bool found = false;
    for (int mcs : lattice) {
        for (int ms : lattice) {
            ClusterModel model = hdbscan_fit(x, mcs, ms);
            const auto score = silhouette(x, model.labels);
            if (!score) continue;
            if (!found || *score > best.score) {
                found = true;
                best = {mcs, ms, *score, std::move(model)};
            }
        }
    }
    if (!found) throw std::runtime_error("no valid clustering on the lattice");
    return best;
}

double quantile(std::vector<double> values, double p) {
    if (values.empty()) throw std::invalid_argument("quantile of nothing");
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("quantile probability outside [0, 1]");
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * p;
    const size_t lo = static_cast<size_t>(std::floor(h));
    const size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - std::floor(h)) * (values[hi] - values[lo]);
}

std::vector<double> quantile_breaks(const std::vector<double>& values, int k) {
    if (k < 2) throw std::invalid_argument("need at least 2 classes");
    std::vector<double> breaks;
    for (int i = 1; i < k; ++i) breaks.push_back(quantile(values, static_cast<double>(i) / k));
    return breaks;
}

std::vector<ClusterSummary> cluster_summary(const HexFrame& frame, const std::vector<int>& labels) {
    if (labels.size() != frame.rows.size())
        throw std::invalid_argument("labels do not align with the frame");
    std::map<int, std::vector<size_t>> members;
    for (size_t i = 0; i < labels.size(); ++i) members[labels[i]].push_back(i);

    std::vector<int> order;
    for (const auto& [label, rows] : members)
        if (label >= 0) order.push_back(label);
    if (members.count(-1)) order.push_back(-1);

    std::vector<ClusterSummary> out;
    for (int label : order) {
        const auto& rows = members[label];
        ClusterSummary cs;
        cs.cluster = label;
        cs.size = rows.size();
        for (size_t v = 0; v < frame.variables.size(); ++v) {
            std::vector<double> vals;
            for (size_t i : rows) {
                const double val = frame.rows[i].values[v];
                if (!std::isnan(val)) vals.push_back(val);
            }
            if (vals.empty()) {
                const double nan = std::nan("");
                cs.per_variable.push_back({nan, nan, nan, nan, nan});
                continue;
            }
            std::sort(vals.begin(), vals.end());
            cs.per_variable.push_back({vals.front(), quantile(vals, 0.25), quantile(vals, 0.5),
                                       quantile(vals, 0.75), vals.back()});
        }
        out.push_back(std::move(cs));
    }
    return out;
}

HexFrame labels_frame(const HexFrame& source, const std::vector<std::size_t>& source_rows,
                      const std::vector<int>& labels) {
    if (source_rows.size() != labels.size())
        throw std::invalid_argument("labels do not align with the selected rows");
    HexFrame out;
    out.res = source.res;
    out.base_edge_s0 = source.base_edge_s0;
    out.rotation_sign = source.rotation_sign;
    out.variables = {"cluster"};
    for (size_t i = 0; i < source_rows.size(); ++i) {
        const auto& row = source.rows[source_rows[i]];
        out.rows.push_back({row.hex, row.period, {static_cast<double>(labels[i])}});
    }
    out.sort_canonical();
    return out;
}

std::string condensed_tree_csv(const ClusterModel& model) {
    std::ostringstream out;
    out << "parent,child,lambda,size\n";
    for (const CondensedEdge& e : model.condensed)
        out << e.parent << ',' << e.child << ',' << format_double(e.lambda) << ',' << e.size << '\n';
    return out.str();
}

}  // namespace hexposome
