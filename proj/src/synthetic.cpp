#include "retenta/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "retenta/error.hpp"
#include "report_format.hpp"
#include "retenta/random.hpp"

namespace retenta {

namespace {

struct FeatureShape {
    const char* name;
    double center;
    double scale;
    double lo;
    double hi;
    double quantum;  // values are rounded to a multiple of this
    double beta;     // churn effect per unit z before noise scaling
};

// Churn rises with inactivity and falls with tenure, engagement and NPS.
constexpr FeatureShape kShapes[] = {
    {"age", 45.0, 9.0, 18.0, 95.0, 1.0, 0.0},
    {"tenure_days", 720.0, 240.0, 1.0, 1e6, 1.0, -2.0},
    {"order_count", 24.0, 7.0, 0.0, 1e6, 1.0, -1.5},
    {"total_spend", 1500.0, 450.0, 0.0, 1e9, 0.01, -1.0},
    {"days_since_last_order", 45.0, 14.0, 0.0, 1e6, 1.0, 3.5},
    {"purchase_interval_mean", 30.0, 9.0, 1.0, 1e6, 0.1, 1.5},
    {"nps", 5.0, 1.6, 0.0, 10.0, 1.0, -3.0},
};
constexpr std::size_t kDims = std::size(kShapes);
constexpr double kBlobSpread = 0.4;
constexpr double kCenterRange = 2.0;
constexpr const char* kRegions[] = {"E", "N", "S", "W"};

enum Stream : std::uint64_t { kCenters = 1, kCustomers, kLabels, kRatings };

std::string padded_id(char prefix, std::size_t index, std::size_t count) {
    const int width = static_cast<int>(std::to_string(count).size());
    char buf[32];
    std::snprintf(buf, sizeof buf, "%c%0*zu", prefix, width, index + 1);
    return buf;
}

double quantize(double value, const FeatureShape& s) {
    const double q = std::round(value / s.quantum) * s.quantum;
    // Re-round to the decimal grid so values print without float residue.
    const double decimals = s.quantum < 1.0 ? std::round(-std::log10(s.quantum)) : 0.0;
    const double p = std::pow(10.0, decimals);
    return std::clamp(std::round(q * p) / p, s.lo, s.hi);
}

std::vector<std::vector<double>> draw_centers(std::size_t k, Rng& rng) {
    double min_sep = 3.0;
    std::vector<std::vector<double>> centers;
    int attempts = 0;
    while (centers.size() < k) {
        std::vector<double> c(kDims);
        for (auto& v : c) v = rng.uniform(-kCenterRange, kCenterRange);
        bool ok = true;
        for (const auto& other : centers) {
            double d2 = 0.0;
            for (std::size_t j = 0; j < kDims; ++j) d2 += (c[j] - other[j]) * (c[j] - other[j]);
            ok = ok && d2 >= min_sep * min_sep;
        }
        if (ok) {
            centers.push_back(std::move(c));
            attempts = 0;
        } else if (++attempts > 200) {
            min_sep *= 0.9;
            attempts = 0;
        }
    }
    return centers;
}

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

}  // namespace

double GroundTruth::linear_score(const CustomerRecord& r) const {
    double s = alpha;
    for (std::size_t j = 0; j < feature_columns.size(); ++j) {
        const double raw = numeric_field(r, feature_columns[j]).value_or(0.0);
        s += beta[j] * (raw - feature_center[j]) / feature_scale[j];
    }
    return s;
}

double GroundTruth::churn_probability(const CustomerRecord& r) const {
    return sigmoid(linear_score(r));
}

SyntheticBundle generate_synthetic(const SyntheticConfig& config, std::uint64_t seed) {
    if (config.population == 0 || config.clusters == 0 || config.offers == 0 ||
        config.taste_groups == 0 || config.ratings_per_customer == 0) {
        throw Error(ErrorCode::InvalidConfig, "synthetic sizes must be positive");
    }
    if (!(config.churn_fraction > 0.0 && config.churn_fraction < 1.0)) {
        throw Error(ErrorCode::InvalidConfig, "churn fraction must lie in (0, 1)");
    }
    if (!(config.noise >= 0.0) || !std::isfinite(config.noise) || !(config.rating_noise >= 0.0)) {
        throw Error(ErrorCode::InvalidConfig, "noise levels must be finite and non-negative");
    }
    if (config.clusters > config.population) {
        throw Error(ErrorCode::InvalidConfig, "more clusters than customers");
    }
    if (config.taste_groups > config.offers) {
        throw Error(ErrorCode::InvalidConfig, "more taste groups than offers");
    }

    const std::size_t n = config.population;
    SyntheticBundle bundle;
    GroundTruth& truth = bundle.truth;
    truth.seed = seed;
    truth.noise = config.noise;
    for (const auto& s : kShapes) {
        truth.feature_columns.emplace_back(s.name);
        truth.feature_center.push_back(s.center);
        truth.feature_scale.push_back(s.scale);
    }

    Rng center_rng(mix_seed(seed, kCenters));
    const auto z_centers = draw_centers(config.clusters, center_rng);
    for (const auto& zc : z_centers) {
        std::vector<double> raw(kDims);
        for (std::size_t j = 0; j < kDims; ++j) raw[j] = kShapes[j].center + kShapes[j].scale * zc[j];
        truth.cluster_centers.push_back(std::move(raw));
    }

    // Customers: blob membership, features, region, taste group.
    Rng cust_rng(mix_seed(seed, kCustomers));
    auto& rows = bundle.customers.rows;
    rows.resize(n);
    truth.customers.resize(n);
    bundle.customers.has_churn_label = true;
    std::vector<double> base_score(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        auto& r = rows[i];
        auto& t = truth.customers[i];
        r.customer_id = padded_id('C', i, n);
        t.customer_id = r.customer_id;
        t.blob = static_cast<std::size_t>(cust_rng.below(config.clusters));
        t.taste_group = static_cast<std::size_t>(cust_rng.below(config.taste_groups));
        r.region = kRegions[cust_rng.below(std::size(kRegions))];
        for (std::size_t j = 0; j < kDims; ++j) {
            const auto& s = kShapes[j];
            const double z = z_centers[t.blob][j] + kBlobSpread * cust_rng.normal();
            const double raw = quantize(s.center + s.scale * z, s);
            switch (j) {
                case 0: r.age = raw; break;
                case 1: r.tenure_days = raw; break;
                case 2: r.order_count = raw; break;
                case 3: r.total_spend = raw; break;
                case 4: r.days_since_last_order = raw; break;
                case 5: r.purchase_interval_mean = raw; break;
                case 6: r.nps = raw; break;
            }
            // The score is computed from the stored (rounded) value.
            base_score[i] += s.beta * (raw - s.center) / s.scale;
        }
    }

    // Intercept and scaling so the expected churn rate matches the config.
    const double inv_noise = config.noise > 0.0 ? 1.0 / config.noise : 1.0;
    for (const auto& s : kShapes) truth.beta.push_back(s.beta * inv_noise);
    std::vector<double> scaled(n);
    for (std::size_t i = 0; i < n; ++i) scaled[i] = base_score[i] * inv_noise;
    if (config.noise > 0.0) {
        double lo = -200.0, hi = 200.0;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            double rate = 0.0;
            for (double s : scaled) rate += sigmoid(mid + s);
            rate /= static_cast<double>(n);
            (rate < config.churn_fraction ? lo : hi) = mid;
        }
        truth.alpha = 0.5 * (lo + hi);
    } else {
        std::vector<double> sorted = scaled;
        std::sort(sorted.begin(), sorted.end(), std::greater<>());
        const auto m = static_cast<std::size_t>(std::llround(config.churn_fraction * n));
        if (m == 0) {
            truth.alpha = -sorted.front() - 1.0;
        } else if (m >= n) {
            truth.alpha = -sorted.back() + 1.0;
        } else {
            truth.alpha = -0.5 * (sorted[m - 1] + sorted[m]);
        }
    }

    Rng label_rng(mix_seed(seed, kLabels));
    for (std::size_t i = 0; i < n; ++i) {
        const double s = truth.alpha + scaled[i];
        const bool churned = config.noise > 0.0 ? label_rng.bernoulli(sigmoid(s)) : sigmoid(s) > 0.5;
        rows[i].churn_label = churned ? 1 : 0;
    }

    // Ratings: every customer rates a random subset; in-group offers high.
    std::vector<std::string> offer_ids(config.offers);
    for (std::size_t o = 0; o < config.offers; ++o) {
        offer_ids[o] = padded_id('O', o, config.offers);
        truth.offer_taste_group[offer_ids[o]] = o % config.taste_groups;
        bundle.ratings.add_offer(offer_ids[o]);
    }
    Rng rating_rng(mix_seed(seed, kRatings));
    const std::size_t per_customer = std::min(config.ratings_per_customer, config.offers);
    std::vector<std::size_t> order(config.offers);
    for (std::size_t i = 0; i < n; ++i) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        for (std::size_t p = 0; p < per_customer; ++p) {
            const auto pick = p + static_cast<std::size_t>(rating_rng.below(config.offers - p));
            std::swap(order[p], order[pick]);
            const std::size_t o = order[p];
            const bool liked = o % config.taste_groups == truth.customers[i].taste_group;
            const double mean = liked ? 4.5 : 2.0;
            const double rating =
                std::clamp(std::round(mean + config.rating_noise * rating_rng.normal()),
                           RatingsMatrix::kMinRating, RatingsMatrix::kMaxRating);
            bundle.ratings.add(rows[i].customer_id, offer_ids[o], rating);
        }
    }
    return bundle;
}

void write_ground_truth(const GroundTruth& truth, const std::filesystem::path& path) {
    nlohmann::ordered_json j;
    j["alpha"] = truth.alpha;
    j["beta"] = truth.beta;
    j["cluster_centers"] = truth.cluster_centers;
    j["seed"] = truth.seed;
    j["noise"] = truth.noise;
    j["feature_columns"] = truth.feature_columns;
    j["feature_center"] = truth.feature_center;
    j["feature_scale"] = truth.feature_scale;
    auto& customers = j["customers"] = nlohmann::ordered_json::array();
    for (const auto& c : truth.customers) {
        customers.push_back({{"customer_id", c.customer_id},
                             {"blob", c.blob},
                             {"taste_group", c.taste_group}});
    }
    auto& offers = j["offer_taste_group"] = nlohmann::ordered_json::object();
    for (const auto& [offer, group] : truth.offer_taste_group) offers[offer] = group;

    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    detail::write_json(out, j);
    out << '\n';
}

GroundTruth read_ground_truth(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    GroundTruth t;
    try {
        const auto j = nlohmann::json::parse(in);
        t.alpha = j.at("alpha").get<double>();
        t.beta = j.at("beta").get<std::vector<double>>();
        t.cluster_centers = j.at("cluster_centers").get<std::vector<std::vector<double>>>();
        t.seed = j.at("seed").get<std::uint64_t>();
        t.noise = j.value("noise", 0.0);
        t.feature_columns = j.value("feature_columns", std::vector<std::string>{});
        t.feature_center = j.value("feature_center", std::vector<double>{});
        t.feature_scale = j.value("feature_scale", std::vector<double>{});
        if (j.contains("customers")) {
            for (const auto& c : j.at("customers")) {
                t.customers.push_back({c.at("customer_id").get<std::string>(),
                                       c.at("blob").get<std::size_t>(),
                                       c.at("taste_group").get<std::size_t>()});
            }
        }
        if (j.contains("offer_taste_group")) {
            t.offer_taste_group = j.at("offer_taste_group").get<std::map<std::string, std::size_t>>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
    }
    return t;
}

void write_bundle(const SyntheticBundle& bundle, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_customers(bundle.customers, dir / "customers.csv");
    write_ratings(bundle.ratings, dir / "ratings.csv");
    write_ground_truth(bundle.truth, dir / "ground_truth.json");
}

BlobPoints generate_blobs(std::size_t n, std::size_t d, std::size_t k, std::uint64_t seed,
                          double separation, double spread) {
    if (n == 0 || d == 0 || k == 0 || k > n) {
        throw Error(ErrorCode::InvalidConfig, "blob sizes must be positive with k <= n");
    }
    Rng rng(seed);
    BlobPoints out;
    out.centers.assign(k, std::vector<double>(d));
    for (auto& c : out.centers) {
        for (auto& v : c) v = rng.uniform(-separation, separation);
    }
    out.points = FeatureMatrix(n, d);
    for (std::size_t j = 0; j < d; ++j) out.points.column_names[j] = "x" + std::to_string(j);
    out.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.points.row_ids[i] = padded_id('P', i, n);
        out.labels[i] = i < k ? i : static_cast<std::size_t>(rng.below(k));
        for (std::size_t j = 0; j < d; ++j) {
            out.points.at(i, j) = out.centers[out.labels[i]][j] + spread * rng.normal();
        }
    }
    return out;
}

}  // namespace retenta
