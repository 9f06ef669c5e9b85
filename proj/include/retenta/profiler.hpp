#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "retenta/churn_model.hpp"
#include "retenta/dataset.hpp"

namespace retenta {

struct Clustering {
    std::size_t k = 0;
    std::size_t dims = 0;
    std::vector<double> centroids;  // k x dims, row-major
    std::vector<std::string> column_names;
    std::vector<std::string> row_ids;
    std::vector<std::size_t> assignments;  // cluster index per row, aligned with row_ids
    double wcss = 0.0;
    std::size_t iterations_run = 0;
    std::uint64_t seed = 0;
    bool converged = false;
    std::vector<double> wcss_trace;  // objective after every centroid update

    std::span<const double> centroid(std::size_t c) const { return {centroids.data() + c * dims, dims}; }
    std::vector<std::size_t> sizes() const;
};

struct KMeansOptions {
    std::size_t max_iters = 300;
    double tol = 1e-6;  // maximum centroid displacement
};

// Sum of squared distances from each row to its assigned centroid.
double compute_wcss(const FeatureMatrix& points, std::span<const std::size_t> assignments,
                    std::span<const double> centroids);

// Lloyd iteration from k-means++ seeding. Throws EmptyInput, KTooLarge,
// InvalidConfig.
Clustering kmeans(const FeatureMatrix& points, std::size_t k, std::uint64_t seed,
                  const KMeansOptions& options = {});

// Seed used by restart `index` of kmeans_best_of.
std::uint64_t restart_seed(std::uint64_t seed, std::size_t index) noexcept;

// Lowest-wcss result over `restarts` runs; ties go to the earliest restart.
Clustering kmeans_best_of(const FeatureMatrix& points, std::size_t k, std::size_t restarts,
                          std::uint64_t seed, const KMeansOptions& options = {});

inline constexpr std::size_t kMaxAgglomerativePoints = 20000;

// Naive single-linkage agglomeration down to k clusters: O(n^2) memory and
// O(n^3) time, kept as the runtime baseline for k-means. Merge ties go to the
// lowest pair of cluster representatives. Throws TooManyPoints, KTooLarge.
Clustering agglomerative_cluster(const FeatureMatrix& points, std::size_t k);

// Profiling space: the model's standardized features plus churn probability
// as a final column.
FeatureMatrix profiling_features(const ChurnModel& model, const CustomerTable& table,
                                 std::span<const RiskScore> scores);

struct ExternalSummary {
    std::optional<double> mean_churn_probability;
    std::optional<double> churn_rate;  // only when the table carries labels
};

struct WcssPoint {
    std::size_t k = 0;
    double wcss = 0.0;
};

struct ClusterReport {
    std::size_t k = 0;
    double wcss = 0.0;
    std::size_t population = 0;
    std::vector<std::size_t> sizes;
    std::vector<std::string> profile_columns;
    std::vector<std::vector<double>> profiles;  // centroid per cluster in original units
    std::vector<ExternalSummary> external_vars;
    double min_size_fraction = 0.01;
    std::vector<std::size_t> small_clusters;  // below min_size_fraction of the population
    std::vector<WcssPoint> wcss_sweep;
};

// Segment sizes, un-standardized centroid profiles and churn summaries per
// cluster. The scaling covers the feature columns; a trailing extra centroid
// column (churn probability) is reported as-is. Throws AssignmentMismatch.
ClusterReport evaluate_clusters(const Clustering& clustering, const CustomerTable& table,
                                std::span<const RiskScore> scores, const ScalingParams& scaling,
                                double min_size_fraction = 0.01);

// Best-of-restarts wcss for k in [k_lo, min(k_hi, n)].
std::vector<WcssPoint> wcss_sweep(const FeatureMatrix& points, std::size_t k_lo, std::size_t k_hi,
                                  std::size_t restarts, std::uint64_t seed,
                                  const KMeansOptions& options = {});

void write_clusters(const Clustering& clustering, const std::filesystem::path& path);
void write_cluster_report(const ClusterReport& report, const std::filesystem::path& path);

}  // namespace retenta
