#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "retenta/churn_model.hpp"
#include "retenta/dataset.hpp"

namespace retenta {

struct SimilarityScore {
    double value = 0.0;             // cosine over co-rated offers, in [0, 1]
    std::size_t co_rated_count = 0;
};

// Cosine similarity restricted to offers rated by both customers. Undefined
// (nullopt) when nothing is co-rated or a restricted vector has zero norm.
std::optional<SimilarityScore> cosine_similarity(const OfferRatings& ri, const OfferRatings& rj);

struct Neighbor {
    std::string customer_id;  // member of the loyal set
    SimilarityScore similarity;
};

struct Neighborhood {
    std::string risky_customer;
    std::vector<Neighbor> neighbors;  // descending similarity, ties by ascending id
    std::size_t capacity = 0;
};

struct RetentionParams {
    std::size_t top_k = 10;  // neighbors kept per risky customer
    std::size_t top_n = 5;   // offers recommended per risky customer
    double like_threshold = 3.5;
    std::size_t min_co_rated = 2;
};

// Neighbors are drawn from seg.loyal only. Throws NotRisky.
Neighborhood build_neighborhood(const std::string& customer, const Segmentation& seg,
                                const RatingsMatrix& ratings, std::size_t top_k,
                                std::size_t min_co_rated);

struct Preference {
    double value = 0.0;
    std::vector<std::string> supporters;  // neighbors who rated the offer
};

// Similarity-weighted mean of neighbor ratings for one offer. Throws NoSupport.
Preference predicted_preference(const std::string& offer, const Neighborhood& nbh,
                                const RatingsMatrix& ratings);

struct RecommendedOffer {
    std::string offer_id;
    double score = 0.0;  // predicted preference
    std::size_t support = 0;
    std::vector<std::string> supporters;
};

struct RecommendationList {
    std::string customer_id;
    std::vector<RecommendedOffer> items;
    bool cold_start = false;  // empty list
};

// Offers liked (>= like_threshold) by at least one neighbor, not yet rated by
// the customer, with predicted preference >= like_threshold; ranked by
// preference descending then offer id, truncated to n.
RecommendationList recommend_offers(const Neighborhood& nbh, const RatingsMatrix& ratings,
                                    std::size_t n, double like_threshold);

// One list per risky customer, keyed (and so ordered) by customer id.
std::map<std::string, RecommendationList> recommend_all(const Segmentation& seg,
                                                        const RatingsMatrix& ratings,
                                                        const RetentionParams& params = {});

void write_recommendations(const std::map<std::string, RecommendationList>& recs,
                           const std::filesystem::path& path);

std::map<std::string, RecommendationList> read_recommendations(const std::filesystem::path& path);

}  // namespace retenta
