#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "retenta/dataset.hpp"

namespace retenta {

struct SyntheticConfig {
    std::size_t population = 1000;
    double churn_fraction = 0.3;
    std::size_t clusters = 3;
    std::size_t offers = 24;
    // Label noise. 0 gives labels equal to 1{Q(x) > 0.5}; larger values
    // flatten the generating logistic curve.
    double noise = 0.5;
    std::size_t taste_groups = 3;
    std::size_t ratings_per_customer = 10;
    double rating_noise = 0.5;
};

struct CustomerTruth {
    std::string customer_id;
    std::size_t blob = 0;
    std::size_t taste_group = 0;
};

// Parameters the population was generated from. The logistic model acts on
// z = (raw - feature_center) / feature_scale over feature_columns.
struct GroundTruth {
    double alpha = 0.0;
    std::vector<double> beta;
    std::vector<std::string> feature_columns;
    std::vector<double> feature_center;
    std::vector<double> feature_scale;
    std::vector<std::vector<double>> cluster_centers;  // raw units, one row per blob
    std::uint64_t seed = 0;
    double noise = 0.0;
    std::vector<CustomerTruth> customers;
    std::map<std::string, std::size_t> offer_taste_group;

    // Q(x) of the generating model for one customer.
    double churn_probability(const CustomerRecord& r) const;
    double linear_score(const CustomerRecord& r) const;
};

struct SyntheticBundle {
    CustomerTable customers;
    RatingsMatrix ratings;
    GroundTruth truth;
};

// Throws InvalidConfig. Identical (config, seed) gives identical output.
SyntheticBundle generate_synthetic(const SyntheticConfig& config, std::uint64_t seed);

void write_ground_truth(const GroundTruth& truth, const std::filesystem::path& path);
GroundTruth read_ground_truth(const std::filesystem::path& path);

// Writes customers.csv, ratings.csv and ground_truth.json into dir.
void write_bundle(const SyntheticBundle& bundle, const std::filesystem::path& dir);

struct BlobPoints {
    FeatureMatrix points;
    std::vector<std::size_t> labels;
    std::vector<std::vector<double>> centers;
};

// k isotropic Gaussian blobs (unit spread) with centers drawn uniformly in
// [-separation, separation]^d.
BlobPoints generate_blobs(std::size_t n, std::size_t d, std::size_t k, std::uint64_t seed,
                          double separation = 10.0, double spread = 1.0);

}  // namespace retenta
