#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "retenta/random.hpp"
#include "retenta/retention.hpp"

using namespace retenta;

namespace {

RatingsMatrix worked_ratings() {
    RatingsMatrix r;
    for (auto [o, v] : {std::pair{"O1", 4.0}, {"O2", 2.0}, {"O3", 5.0}}) r.add("R1", o, v);
    for (auto [o, v] : {std::pair{"O2", 4.0}, {"O3", 5.0}, {"O4", 1.0}}) r.add("L1", o, v);
    for (auto [o, v] : {std::pair{"O1", 4.0}, {"O2", 2.0}, {"O3", 5.0}}) r.add("L2", o, v);
    r.add("L3", "O9", 3.0);
    return r;
}

Segmentation seg_of(std::set<std::string> risky, std::set<std::string> loyal) {
    Segmentation s;
    s.risky = std::move(risky);
    s.loyal = std::move(loyal);
    s.population = s.risky.size() + s.loyal.size();
    return s;
}

}  // namespace

TEST_SUITE("retention") {

TEST_CASE("cosine worked value") {
    OfferRatings i{{"O1", 4}, {"O2", 2}, {"O3", 5}};
    OfferRatings j{{"O2", 4}, {"O3", 5}, {"O4", 1}};
    auto s = cosine_similarity(i, j);
    REQUIRE(s.has_value());
    CHECK(std::fabs(s->value - 33.0 / std::sqrt(1189.0)) <= 1e-12);
    CHECK(std::fabs(s->value - 0.9570244) <= 1e-6);
    CHECK(s->co_rated_count == 2);

    CHECK(cosine_similarity(i, i)->value == doctest::Approx(1.0).epsilon(1e-15));
    CHECK_FALSE(cosine_similarity(i, OfferRatings{{"O7", 3}}).has_value());
    CHECK_FALSE(cosine_similarity({}, {}).has_value());
}

TEST_CASE("cosine symmetry, bounds and scale invariance") {
    Rng rng(23);
    for (int trial = 0; trial < 200; ++trial) {
        OfferRatings a, b;
        for (int o = 0; o < 8; ++o) {
            const std::string id = "O" + std::to_string(o);
            if (rng.bernoulli(0.6)) a[id] = 1 + std::round(rng.uniform() * 8) / 2;
            if (rng.bernoulli(0.6)) b[id] = 1 + std::round(rng.uniform() * 8) / 2;
        }
        auto ab = cosine_similarity(a, b);
        auto ba = cosine_similarity(b, a);
        REQUIRE(ab.has_value() == ba.has_value());
        if (!a.empty()) CHECK(cosine_similarity(a, a)->value == doctest::Approx(1.0).epsilon(1e-12));
        if (!ab) continue;
        CHECK(std::fabs(ab->value - ba->value) <= 1e-12);
        CHECK(ab->value >= 0.0);
        CHECK(ab->value <= 1.0);
        OfferRatings doubled = a;
        for (auto& [o, v] : doubled) v *= 2;
        CHECK(std::fabs(cosine_similarity(doubled, b)->value - ab->value) <= 1e-12);
    }
}

TEST_CASE("neighborhood ordering and truncation") {
    auto r = worked_ratings();
    auto seg = seg_of({"R1"}, {"L1", "L2", "L3"});
    auto nbh = build_neighborhood("R1", seg, r, 10, 2);
    REQUIRE(nbh.neighbors.size() == 2);
    CHECK(nbh.neighbors[0].customer_id == "L2");
    CHECK(nbh.neighbors[0].similarity.value == doctest::Approx(1.0));
    CHECK(nbh.neighbors[1].customer_id == "L1");
    CHECK(nbh.neighbors[1].similarity.value == doctest::Approx(33.0 / std::sqrt(1189.0)).epsilon(1e-12));

    auto top1 = build_neighborhood("R1", seg, r, 1, 2);
    REQUIRE(top1.neighbors.size() == 1);
    CHECK(top1.neighbors[0].customer_id == "L2");

    CHECK(build_neighborhood("R1", seg_of({"R1"}, {}), r, 10, 2).neighbors.empty());
    // A co-rated requirement of three drops L1.
    CHECK(build_neighborhood("R1", seg, r, 10, 3).neighbors.size() == 1);
    expect_error([&] { build_neighborhood("L1", seg, r, 10, 2); }, ErrorCode::NotRisky);
}

TEST_CASE("similarity ties keep ascending ids") {
    RatingsMatrix r;
    r.add("R", "O1", 3);
    r.add("R", "O2", 3);
    for (const char* id : {"L9", "L1", "L5"}) {
        r.add(id, "O1", 2);
        r.add(id, "O2", 2);
    }
    auto nbh = build_neighborhood("R", seg_of({"R"}, {"L9", "L1", "L5"}), r, 10, 2);
    REQUIRE(nbh.neighbors.size() == 3);
    CHECK(nbh.neighbors[0].customer_id == "L1");
    CHECK(nbh.neighbors[1].customer_id == "L5");
    CHECK(nbh.neighbors[2].customer_id == "L9");
}

TEST_CASE("predicted preference") {
    RatingsMatrix r;
    r.add("A", "S", 5);
    r.add("B", "S", 2);
    r.add("C", "T", 4);
    Neighborhood nbh;
    nbh.risky_customer = "R";
    nbh.neighbors = {{"A", {1.0, 2}}, {"B", {0.5, 2}}, {"C", {0.3, 2}}};
    auto p = predicted_preference("S", nbh, r);
    CHECK(p.value == doctest::Approx(4.0).epsilon(1e-15));
    CHECK(p.supporters == std::vector<std::string>{"A", "B"});
    CHECK(predicted_preference("T", nbh, r).value == 4.0);
    expect_error([&] { predicted_preference("U", nbh, r); }, ErrorCode::NoSupport);

    RatingsMatrix same;
    same.add("A", "S", 3.5);
    same.add("B", "S", 3.5);
    CHECK(predicted_preference("S", nbh, same).value == 3.5);
}

TEST_CASE("recommend worked example") {
    RatingsMatrix r;
    for (const char* o : {"O1", "O2", "O3", "O4"}) r.add_offer(o);
    r.add("R", "O1", 3);
    r.add("N1", "O1", 3);
    r.add("N2", "O1", 4);
    r.add("N1", "O2", 4);
    r.add("N2", "O2", 4);
    r.add("N1", "O3", 5);
    r.add("N2", "O3", 1.4);
    r.add("N2", "O4", 2);
    auto seg = seg_of({"R"}, {"N1", "N2"});
    auto nbh = build_neighborhood("R", seg, r, 10, 1);
    REQUIRE(nbh.neighbors.size() == 2);
    CHECK(predicted_preference("O3", nbh, r).value == doctest::Approx(3.2));

    auto list = recommend_offers(nbh, r, 5, 3.5);
    REQUIRE(list.items.size() == 1);
    CHECK(list.items[0].offer_id == "O2");
    CHECK(list.items[0].score == doctest::Approx(4.0));
    CHECK(list.items[0].support == 2);
    CHECK_FALSE(list.cold_start);

    auto none = recommend_offers(nbh, r, 0, 3.5);
    CHECK(none.items.empty());
    CHECK(none.cold_start);
}

TEST_CASE("customer who rated everything gets nothing") {
    RatingsMatrix r;
    for (const char* o : {"O1", "O2"}) {
        r.add("R", o, 4);
        r.add("L", o, 5);
    }
    auto nbh = build_neighborhood("R", seg_of({"R"}, {"L"}), r, 10, 2);
    REQUIRE(nbh.neighbors.size() == 1);
    CHECK(recommend_offers(nbh, r, 5, 3.5).items.empty());
}

TEST_CASE("ranking by score then offer id") {
    RatingsMatrix r;
    r.add("R", "O0", 4);
    r.add("L", "O0", 4);
    for (auto [o, v] : {std::pair{"O5", 4.0}, {"O3", 5.0}, {"O4", 4.0}, {"O1", 3.7}}) r.add("L", o, v);
    auto nbh = build_neighborhood("R", seg_of({"R"}, {"L"}), r, 10, 1);
    auto list = recommend_offers(nbh, r, 3, 3.5);
    REQUIRE(list.items.size() == 3);
    CHECK(list.items[0].offer_id == "O3");
    CHECK(list.items[1].offer_id == "O4");
    CHECK(list.items[2].offer_id == "O5");
}

TEST_CASE("recommend_all covers every risky customer") {
    auto r = worked_ratings();
    CHECK(recommend_all(seg_of({}, {"L1"}), r).empty());
    auto recs = recommend_all(seg_of({"R1", "L3"}, {"L1", "L2"}), r);
    REQUIRE(recs.size() == 2);
    CHECK(recs.begin()->first == "L3");
    CHECK(recs.at("L3").cold_start);
    // L2 agrees with R1 everywhere it rated; L1 adds nothing liked that R1 lacks.
    CHECK(recs.at("R1").items.empty());
    CHECK(recommend_all(seg_of({"R1", "L3"}, {"L1", "L2"}), r).at("R1").items.size() == recs.at("R1").items.size());
}

TEST_CASE("recommendations persist") {
    oracle::TempDir dir;
    RatingsMatrix r;
    r.add("R", "O0", 4);
    r.add("L", "O0", 4);
    r.add("L", "O1", 4.25);
    auto recs = recommend_all(seg_of({"R"}, {"L"}), r, {10, 5, 3.5, 1});
    write_recommendations(recs, dir / "rec.json");
    auto back = read_recommendations(dir / "rec.json");
    REQUIRE(back.size() == 1);
    REQUIRE(back.at("R").items.size() == 1);
    CHECK(back.at("R").items[0].offer_id == "O1");
    CHECK(back.at("R").items[0].score == 4.25);
    CHECK(back.at("R").items[0].supporters == std::vector<std::string>{"L"});
}

}  // TEST_SUITE
