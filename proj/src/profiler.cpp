#include "retenta/profiler.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <unordered_map>

#include <json.hpp>

#include "report_format.hpp"
#include "retenta/csv.hpp"
#include "retenta/error.hpp"
#include "retenta/random.hpp"

namespace retenta {

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

void check_points(const FeatureMatrix& points, std::size_t k) {
    if (points.n_rows == 0) throw Error(ErrorCode::EmptyInput, "no points to cluster");
    if (k == 0) throw Error(ErrorCode::InvalidConfig, "k must be at least 1");
    if (k > points.n_rows) {
        throw Error(ErrorCode::KTooLarge, "k = " + std::to_string(k) + " exceeds " +
                                              std::to_string(points.n_rows) + " points");
    }
    for (double v : points.values) {
        if (!std::isfinite(v)) throw Error(ErrorCode::OutOfRange, "points contain non-finite values");
    }
}

// Nearest centroid with ties to the lowest index.
std::size_t nearest(std::span<const double> x, std::span<const double> centroids, std::size_t k,
                    std::size_t dims, double* best_out = nullptr) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
        const double d = squared_distance(x, centroids.subspan(c * dims, dims));
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    if (best_out) *best_out = best_d;
    return best;
}

std::vector<double> seed_plus_plus(const FeatureMatrix& points, std::size_t k, Rng& rng) {
    const std::size_t n = points.n_rows, d = points.n_cols;
    std::vector<double> centroids(k * d);
    std::vector<double> d2(n, std::numeric_limits<double>::infinity());
    std::size_t pick = static_cast<std::size_t>(rng.below(n));
    for (std::size_t c = 0; c < k; ++c) {
        std::copy_n(points.row(pick).begin(), d, centroids.begin() + static_cast<std::ptrdiff_t>(c * d));
        if (c + 1 == k) break;
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            d2[i] = std::min(d2[i], squared_distance(points.row(i), points.row(pick)));
            total += d2[i];
        }
        if (total <= 0.0) {
            pick = static_cast<std::size_t>(rng.below(n));
            continue;
        }
        const double target = rng.uniform() * total;
        double acc = 0.0;
        pick = n - 1;
        for (std::size_t i = 0; i < n; ++i) {
            acc += d2[i];
            if (acc > target && d2[i] > 0.0) {
                pick = i;
                break;
            }
        }
        while (d2[pick] <= 0.0 && pick > 0) --pick;
    }
    return centroids;
}

std::vector<double> centroid_means(const FeatureMatrix& points, std::span<const std::size_t> labels,
                                   std::size_t k, std::span<const double> previous) {
    const std::size_t d = points.n_cols;
    std::vector<double> sums(k * d, 0.0);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < points.n_rows; ++i) {
        const auto x = points.row(i);
        double* s = sums.data() + labels[i] * d;
        for (std::size_t j = 0; j < d; ++j) s[j] += x[j];
        ++counts[labels[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t j = 0; j < d; ++j) {
            sums[c * d + j] = counts[c] ? sums[c * d + j] / static_cast<double>(counts[c])
                                        : previous[c * d + j];
        }
    }
    return sums;
}

// Moves the point farthest from its own centroid into each empty cluster.
void repair_empty(const FeatureMatrix& points, std::vector<std::size_t>& labels, std::size_t k,
                  std::span<const double> centroids) {
    const std::size_t d = points.n_cols;
    std::vector<std::size_t> counts(k, 0);
    for (auto l : labels) ++counts[l];
    for (std::size_t c = 0; c < k; ++c) {
        if (counts[c] != 0) continue;
        std::size_t far = points.n_rows;
        double far_d = -1.0;
        for (std::size_t i = 0; i < points.n_rows; ++i) {
            if (counts[labels[i]] < 2) continue;
            const double dist = squared_distance(points.row(i), centroids.subspan(labels[i] * d, d));
            if (dist > far_d) {
                far_d = dist;
                far = i;
            }
        }
        if (far == points.n_rows) break;  // fewer points than clusters, not reachable when k <= n
        --counts[labels[far]];
        labels[far] = c;
        ++counts[c];
    }
}

}  // namespace

std::vector<std::size_t> Clustering::sizes() const {
    std::vector<std::size_t> out(k, 0);
    for (auto a : assignments) ++out[a];
    return out;
}

double compute_wcss(const FeatureMatrix& points, std::span<const std::size_t> assignments,
                    std::span<const double> centroids) {
    const std::size_t d = points.n_cols;
    double total = 0.0;
    for (std::size_t i = 0; i < points.n_rows; ++i) {
        total += squared_distance(points.row(i), centroids.subspan(assignments[i] * d, d));
    }
    return total;
}

Clustering kmeans(const FeatureMatrix& points, std::size_t k, std::uint64_t seed,
                  const KMeansOptions& options) {
    check_points(points, k);
    const std::size_t n = points.n_rows, d = points.n_cols;
    Rng rng(seed);

    Clustering out;
    out.k = k;
    out.dims = d;
    out.seed = seed;
    out.column_names = points.column_names;
    out.row_ids = points.row_ids;
    out.centroids = seed_plus_plus(points, k, rng);

    std::vector<std::size_t> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = nearest(points.row(i), out.centroids, k, d);

    std::vector<std::size_t> next(n);
    while (out.iterations_run < options.max_iters) {
        repair_empty(points, labels, k, out.centroids);
        auto updated = centroid_means(points, labels, k, out.centroids);
        double shift = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            shift = std::max(shift, std::sqrt(squared_distance(
                                        std::span<const double>(updated).subspan(c * d, d),
                                        std::span<const double>(out.centroids).subspan(c * d, d))));
        }
        out.centroids = std::move(updated);
        out.wcss_trace.push_back(compute_wcss(points, labels, out.centroids));
        ++out.iterations_run;

        for (std::size_t i = 0; i < n; ++i) next[i] = nearest(points.row(i), out.centroids, k, d);
        repair_empty(points, next, k, out.centroids);
        if (shift <= options.tol && next == labels) {
            out.converged = true;
            break;
        }
        labels.swap(next);
    }
    if (!out.converged) {
        // Hit max_iters: keep centroids consistent with the final assignment.
        out.centroids = centroid_means(points, labels, k, out.centroids);
    }
    out.assignments = std::move(labels);
    out.wcss = compute_wcss(points, out.assignments, out.centroids);
    return out;
}

std::uint64_t restart_seed(std::uint64_t seed, std::size_t index) noexcept {
    return mix_seed(seed, 0x5EED0000ULL + index);
}

Clustering kmeans_best_of(const FeatureMatrix& points, std::size_t k, std::size_t restarts,
                          std::uint64_t seed, const KMeansOptions& options) {
    if (restarts == 0) throw Error(ErrorCode::InvalidConfig, "restarts must be at least 1");
    Clustering best = kmeans(points, k, restart_seed(seed, 0), options);
    for (std::size_t r = 1; r < restarts; ++r) {
        Clustering c = kmeans(points, k, restart_seed(seed, r), options);
        if (c.wcss < best.wcss) best = std::move(c);
    }
    return best;
}

Clustering agglomerative_cluster(const FeatureMatrix& points, std::size_t k) {
    const std::size_t n = points.n_rows;
    if (n > kMaxAgglomerativePoints) {
        throw Error(ErrorCode::TooManyPoints,
                    std::to_string(n) + " points exceed the agglomerative limit of " +
                        std::to_string(kMaxAgglomerativePoints));
    }
    check_points(points, k);
    const std::size_t d = points.n_cols;
    constexpr double inf = std::numeric_limits<double>::infinity();

    // Squared distances order pairs exactly like distances.
    std::vector<double> dist(n * n, inf);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double v = squared_distance(points.row(i), points.row(j));
            dist[i * n + j] = v;
            dist[j * n + i] = v;
        }
    }

    // Each cluster is represented by its lowest member index.
    std::vector<std::size_t> owner(n);
    std::iota(owner.begin(), owner.end(), std::size_t{0});
    std::vector<std::size_t> active(n);
    std::iota(active.begin(), active.end(), std::size_t{0});

    std::size_t merges = 0;
    while (active.size() > k) {
        double best = inf;
        std::size_t bi = 0, bj = 0;
        for (std::size_t i : active) {
            const double* row = dist.data() + i * n;
            for (std::size_t j = i + 1; j < n; ++j) {
                if (row[j] < best) {
                    best = row[j];
                    bi = i;
                    bj = j;
                }
            }
        }
        // Single linkage: the merged cluster's distance is the minimum.
        double* keep = dist.data() + bi * n;
        double* gone = dist.data() + bj * n;
        for (std::size_t x : active) {
            if (x == bi || x == bj) continue;
            const double v = std::min(keep[x], gone[x]);
            keep[x] = v;
            dist[x * n + bi] = v;
        }
        for (std::size_t x = 0; x < n; ++x) {
            gone[x] = inf;
            dist[x * n + bj] = inf;
        }
        for (auto& o : owner) {
            if (o == bj) o = bi;
        }
        active.erase(std::find(active.begin(), active.end(), bj));
        ++merges;
    }

    Clustering out;
    out.k = k;
    out.dims = d;
    out.column_names = points.column_names;
    out.row_ids = points.row_ids;
    out.iterations_run = merges;
    out.converged = true;
    std::unordered_map<std::size_t, std::size_t> label_of;
    for (std::size_t c = 0; c < active.size(); ++c) label_of[active[c]] = c;
    out.assignments.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.assignments[i] = label_of.at(owner[i]);
    out.centroids = centroid_means(points, out.assignments, k, std::vector<double>(k * d, 0.0));
    out.wcss = compute_wcss(points, out.assignments, out.centroids);
    return out;
}

FeatureMatrix profiling_features(const ChurnModel& model, const CustomerTable& table,
                                 std::span<const RiskScore> scores) {
    const auto raw = materialize_columns(table, model.feature_columns);
    const auto x = apply_scaling(raw, model.scaling);
    if (scores.size() != x.n_rows) {
        throw Error(ErrorCode::AssignmentMismatch,
                    std::to_string(scores.size()) + " scores for " + std::to_string(x.n_rows) +
                        " customers");
    }
    std::unordered_map<std::string, double> prob;
    for (const auto& s : scores) prob[s.customer_id] = s.churn_probability;

    FeatureMatrix out(x.n_rows, x.n_cols + 1);
    out.row_ids = x.row_ids;
    out.column_names = x.column_names;
    out.column_names.emplace_back("churn_probability");
    for (std::size_t r = 0; r < x.n_rows; ++r) {
        std::copy(x.row(r).begin(), x.row(r).end(), out.row(r).begin());
        auto it = prob.find(x.row_ids[r]);
        if (it == prob.end()) {
            throw Error(ErrorCode::AssignmentMismatch, "no score for '" + x.row_ids[r] + "'");
        }
        out.at(r, x.n_cols) = it->second;
    }
    return out;
}

ClusterReport evaluate_clusters(const Clustering& clustering, const CustomerTable& table,
                                std::span<const RiskScore> scores, const ScalingParams& scaling,
                                double min_size_fraction) {
    if (clustering.assignments.size() != table.size() || clustering.row_ids.size() != table.size()) {
        throw Error(ErrorCode::AssignmentMismatch,
                    std::to_string(clustering.assignments.size()) + " assignments for " +
                        std::to_string(table.size()) + " customers");
    }
    if (scaling.size() != clustering.dims && scaling.size() + 1 != clustering.dims) {
        throw Error(ErrorCode::DimensionMismatch, "scaling does not match the clustering space");
    }
    std::unordered_map<std::string, std::size_t> cluster_of;
    for (std::size_t i = 0; i < clustering.row_ids.size(); ++i) {
        if (clustering.assignments[i] >= clustering.k) {
            throw Error(ErrorCode::AssignmentMismatch, "assignment index out of range");
        }
        cluster_of[clustering.row_ids[i]] = clustering.assignments[i];
    }
    std::unordered_map<std::string, double> prob;
    for (const auto& s : scores) prob[s.customer_id] = s.churn_probability;

    ClusterReport report;
    report.k = clustering.k;
    report.wcss = clustering.wcss;
    report.population = table.size();
    report.min_size_fraction = min_size_fraction;
    report.sizes.assign(clustering.k, 0);
    report.profile_columns = clustering.column_names;
    if (report.profile_columns.size() != clustering.dims) {
        report.profile_columns.resize(clustering.dims);
        for (std::size_t j = 0; j < clustering.dims; ++j) {
            if (report.profile_columns[j].empty()) report.profile_columns[j] = "x" + std::to_string(j);
        }
    }

    std::vector<double> prob_sum(clustering.k, 0.0);
    std::vector<std::size_t> prob_count(clustering.k, 0), churned(clustering.k, 0),
        labelled(clustering.k, 0);
    for (const auto& r : table.rows) {
        auto it = cluster_of.find(r.customer_id);
        if (it == cluster_of.end()) {
            throw Error(ErrorCode::AssignmentMismatch, "customer '" + r.customer_id + "' is unassigned");
        }
        const std::size_t c = it->second;
        ++report.sizes[c];
        if (auto p = prob.find(r.customer_id); p != prob.end()) {
            prob_sum[c] += p->second;
            ++prob_count[c];
        }
        if (r.churn_label) {
            churned[c] += static_cast<std::size_t>(*r.churn_label);
            ++labelled[c];
        }
    }

    for (std::size_t c = 0; c < clustering.k; ++c) {
        const auto mu = clustering.centroid(c);
        std::vector<double> profile(clustering.dims);
        for (std::size_t j = 0; j < clustering.dims; ++j) {
            if (j < scaling.size()) {
                profile[j] = scaling.constant[j] ? scaling.mean[j] : mu[j] * scaling.sd[j] + scaling.mean[j];
            } else {
                profile[j] = mu[j];
            }
        }
        report.profiles.push_back(std::move(profile));

        ExternalSummary ext;
        if (prob_count[c]) ext.mean_churn_probability = prob_sum[c] / static_cast<double>(prob_count[c]);
        if (table.has_churn_label && labelled[c] == report.sizes[c] && labelled[c] > 0) {
            ext.churn_rate = static_cast<double>(churned[c]) / static_cast<double>(labelled[c]);
        }
        report.external_vars.push_back(ext);

        const double floor = min_size_fraction * static_cast<double>(report.population);
        if (report.sizes[c] == 0 || static_cast<double>(report.sizes[c]) < floor) {
            report.small_clusters.push_back(c);
        }
    }
    return report;
}

std::vector<WcssPoint> wcss_sweep(const FeatureMatrix& points, std::size_t k_lo, std::size_t k_hi,
                                  std::size_t restarts, std::uint64_t seed,
                                  const KMeansOptions& options) {
    std::vector<WcssPoint> out;
    for (std::size_t k = std::max<std::size_t>(k_lo, 1); k <= std::min(k_hi, points.n_rows); ++k) {
        out.push_back({k, kmeans_best_of(points, k, restarts, seed, options).wcss});
    }
    return out;
}

void write_clusters(const Clustering& clustering, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out << "customer_id,cluster_index\n";
    for (std::size_t i = 0; i < clustering.row_ids.size(); ++i) {
        out << csv::escape(clustering.row_ids[i]) << ',' << clustering.assignments[i] << '\n';
    }
    if (!out) throw Error(ErrorCode::Io, "failed writing " + path.string());
}

void write_cluster_report(const ClusterReport& report, const std::filesystem::path& path) {
    using detail::round6;
    using ojson = nlohmann::ordered_json;
    ojson j;
    j["k"] = report.k;
    j["wcss"] = round6(report.wcss);
    j["sizes"] = report.sizes;
    j["profiles"] = ojson::array();
    for (const auto& p : report.profiles) {
        ojson row = ojson::object();
        for (std::size_t c = 0; c < p.size(); ++c) row[report.profile_columns[c]] = round6(p[c]);
        j["profiles"].push_back(std::move(row));
    }
    j["external_vars"] = ojson::array();
    for (const auto& e : report.external_vars) {
        ojson row;
        row["mean_churn_probability"] =
            e.mean_churn_probability ? ojson(round6(*e.mean_churn_probability)) : ojson(nullptr);
        row["churn_rate"] = e.churn_rate ? ojson(round6(*e.churn_rate)) : ojson(nullptr);
        j["external_vars"].push_back(std::move(row));
    }
    j["wcss_sweep"] = ojson::array();
    for (const auto& w : report.wcss_sweep) j["wcss_sweep"].push_back({{"k", w.k}, {"wcss", round6(w.wcss)}});
    j["min_size_fraction"] = round6(report.min_size_fraction);
    j["small_clusters"] = report.small_clusters;

    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    detail::write_json(out, j);
    out << '\n';
}

}  // namespace retenta
