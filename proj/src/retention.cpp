#include "retenta/retention.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "report_format.hpp"
#include "retenta/error.hpp"

namespace retenta {

std::optional<SimilarityScore> cosine_similarity(const OfferRatings& ri, const OfferRatings& rj) {
    double dot = 0.0, ni = 0.0, nj = 0.0;
    std::size_t shared = 0;
    auto a = ri.begin();
    auto b = rj.begin();
    while (a != ri.end() && b != rj.end()) {
        if (a->first < b->first) {
            ++a;
        } else if (b->first < a->first) {
            ++b;
        } else {
            dot += a->second * b->second;
            ni += a->second * a->second;
            nj += b->second * b->second;
            ++shared;
            ++a;
            ++b;
        }
    }
    if (shared == 0 || ni <= 0.0 || nj <= 0.0) return std::nullopt;
    const double value = std::clamp(dot / (std::sqrt(ni) * std::sqrt(nj)), 0.0, 1.0);
    return SimilarityScore{value, shared};
}

Neighborhood build_neighborhood(const std::string& customer, const Segmentation& seg,
                                const RatingsMatrix& ratings, std::size_t top_k,
                                std::size_t min_co_rated) {
    if (!seg.risky.count(customer)) {
        throw Error(ErrorCode::NotRisky, "customer '" + customer + "' is not in the risky set");
    }
    Neighborhood nbh;
    nbh.risky_customer = customer;
    nbh.capacity = top_k;
    const auto& mine = ratings.of(customer);
    for (const auto& j : seg.loyal) {
        auto sim = cosine_similarity(mine, ratings.of(j));
        if (!sim || sim->co_rated_count < min_co_rated) continue;
        nbh.neighbors.push_back({j, *sim});
    }
    // seg.loyal iterates in ascending id order, so a stable sort keeps id ties ascending.
    std::stable_sort(nbh.neighbors.begin(), nbh.neighbors.end(),
                     [](const Neighbor& x, const Neighbor& y) {
                         return x.similarity.value > y.similarity.value;
                     });
    if (nbh.neighbors.size() > top_k) nbh.neighbors.resize(top_k);
    return nbh;
}

Preference predicted_preference(const std::string& offer, const Neighborhood& nbh,
                                const RatingsMatrix& ratings) {
    double weighted = 0.0, weights = 0.0;
    Preference out;
    for (const auto& n : nbh.neighbors) {
        auto r = ratings.get(n.customer_id, offer);
        if (!r) continue;
        weighted += n.similarity.value * *r;
        weights += n.similarity.value;
        out.supporters.push_back(n.customer_id);
    }
    if (out.supporters.empty()) {
        throw Error(ErrorCode::NoSupport, "no neighbor of '" + nbh.risky_customer + "' rated '" + offer + "'");
    }
    if (weights > 0.0) {
        out.value = std::clamp(weighted / weights, RatingsMatrix::kMinRating, RatingsMatrix::kMaxRating);
    } else {
        // All supporting similarities are zero: fall back to the plain mean.
        double sum = 0.0;
        for (const auto& s : out.supporters) sum += *ratings.get(s, offer);
        out.value = sum / static_cast<double>(out.supporters.size());
    }
    return out;
}

RecommendationList recommend_offers(const Neighborhood& nbh, const RatingsMatrix& ratings,
                                    std::size_t n, double like_threshold) {
    RecommendationList list;
    list.customer_id = nbh.risky_customer;
    const auto& mine = ratings.of(nbh.risky_customer);

    std::set<std::string> candidates;
    for (const auto& nb : nbh.neighbors) {
        for (const auto& [offer, rating] : ratings.of(nb.customer_id)) {
            if (rating >= like_threshold && !mine.count(offer)) candidates.insert(offer);
        }
    }
    for (const auto& offer : candidates) {
        auto pref = predicted_preference(offer, nbh, ratings);
        if (pref.value < like_threshold) continue;
        RecommendedOffer item;
        item.offer_id = offer;
        item.score = pref.value;
        item.support = pref.supporters.size();
        item.supporters = std::move(pref.supporters);
        list.items.push_back(std::move(item));
    }
    // candidates iterate in ascending offer id, so stable sort leaves id ties ascending.
    std::stable_sort(list.items.begin(), list.items.end(),
                     [](const RecommendedOffer& a, const RecommendedOffer& b) { return a.score > b.score; });
    if (list.items.size() > n) list.items.resize(n);
    list.cold_start = list.items.empty();
    return list;
}

std::map<std::string, RecommendationList> recommend_all(const Segmentation& seg,
                                                        const RatingsMatrix& ratings,
                                                        const RetentionParams& params) {
    std::map<std::string, RecommendationList> out;
    for (const auto& customer : seg.risky) {
        const auto nbh = build_neighborhood(customer, seg, ratings, params.top_k, params.min_co_rated);
        out.emplace(customer, recommend_offers(nbh, ratings, params.top_n, params.like_threshold));
    }
    return out;
}

void write_recommendations(const std::map<std::string, RecommendationList>& recs,
                           const std::filesystem::path& path) {
    using ojson = nlohmann::ordered_json;
    ojson j = ojson::array();
    for (const auto& [id, list] : recs) {
        ojson entry;
        entry["customer_id"] = id;
        entry["items"] = ojson::array();
        for (const auto& item : list.items) {
            entry["items"].push_back({{"offer_id", item.offer_id},
                                      {"score", detail::round6(item.score)},
                                      {"support", item.support},
                                      {"supporters", item.supporters}});
        }
        entry["cold_start"] = list.cold_start;
        j.push_back(std::move(entry));
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    detail::write_json(out, j);
    out << '\n';
}

std::map<std::string, RecommendationList> read_recommendations(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    std::map<std::string, RecommendationList> out;
    try {
        const auto j = nlohmann::json::parse(in);
        for (const auto& entry : j) {
            RecommendationList list;
            list.customer_id = entry.at("customer_id").get<std::string>();
            list.cold_start = entry.at("cold_start").get<bool>();
            for (const auto& item : entry.at("items")) {
                RecommendedOffer o;
                o.offer_id = item.at("offer_id").get<std::string>();
                o.score = item.at("score").get<double>();
                o.support = item.at("support").get<std::size_t>();
                o.supporters = item.value("supporters", std::vector<std::string>{});
                list.items.push_back(std::move(o));
            }
            out.emplace(list.customer_id, std::move(list));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
    }
    return out;
}

}  // namespace retenta
