#include <doctest.h>

#include <cmath>
#include <string>

#include "helpers.hpp"
#include "retenta/csv.hpp"
#include "retenta/dataset.hpp"
#include "retenta/random.hpp"

using namespace retenta;

TEST_SUITE("dataset") {

TEST_CASE("well-formed three row file loads") {
    oracle::TempDir dir;
    oracle::spit(dir / "c.csv", std::string(kCustomerHeader) + customer_line("C1") +
                                    customer_line("C2", "S") + customer_line("C3", "E", "0"));
    const auto table = load_customers(dir / "c.csv");
    REQUIRE(table.size() == 3);
    CHECK(table.rows[1].customer_id == "C2");
    CHECK(table.rows[1].region == "S");
    CHECK(table.rows[0].total_spend == 480.5);
    CHECK(table.rows[2].nps == 0.0);
    CHECK_FALSE(table.has_churn_label);
    CHECK_FALSE(table.rows[0].churn_label.has_value());
}

TEST_CASE("duplicate id reports the later line") {
    oracle::TempDir dir;
    oracle::spit(dir / "c.csv", std::string(kCustomerHeader) + customer_line("C1") + customer_line("C2") +
                                    customer_line("C3") + customer_line("C1"));
    auto e = expect_error([&] { load_customers(dir / "c.csv"); }, ErrorCode::DuplicateId);
    CHECK(std::string(e.what()).find("line 5") != std::string::npos);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
}

TEST_CASE("nps outside its bound is rejected") {
    oracle::TempDir dir;
    oracle::spit(dir / "c.csv", std::string(kCustomerHeader) + customer_line("C1", "N", "14"));
    auto e = expect_error([&] { load_customers(dir / "c.csv"); }, ErrorCode::OutOfRange);
    const std::string msg = e.what();
    CHECK(msg.find("nps") != std::string::npos);
    CHECK(msg.find("[0, 10]") != std::string::npos);
    CHECK(msg.find("line 2") != std::string::npos);
}

TEST_CASE("missing and non-numeric columns") {
    oracle::TempDir dir;
    oracle::spit(dir / "a.csv", "customer_id,age,region\nC1,30,N\n");
    auto e = expect_error([&] { load_customers(dir / "a.csv"); }, ErrorCode::MissingColumn);
    CHECK(std::string(e.what()).find("tenure_days") != std::string::npos);

    oracle::spit(dir / "b.csv", std::string(kCustomerHeader) + "C1,forty,N,365,12,480.5,20,30,7\n");
    e = expect_error([&] { load_customers(dir / "b.csv"); }, ErrorCode::NonNumericField);
    CHECK(std::string(e.what()).find("age") != std::string::npos);

    std::vector<std::string> schema = default_customer_schema();
    schema.push_back("churn_label");
    oracle::spit(dir / "c.csv", std::string(kCustomerHeader) + customer_line("C1"));
    expect_error([&] { load_customers(dir / "c.csv", schema); }, ErrorCode::MissingColumn);
}

TEST_CASE("missing file is an io error") {
    expect_error([] { load_customers("/nonexistent/customers.csv"); }, ErrorCode::Io);
}

TEST_CASE("ratings: distinct rows, duplicate pair, out of range") {
    oracle::TempDir dir;
    oracle::spit(dir / "r.csv", "customer_id,offer_id,rating\nC1,O1,4\nC1,O2,2\nC2,O1,5\nC2,O3,1\n");
    const auto r = load_ratings(dir / "r.csv");
    CHECK(r.entry_count() == 4);
    CHECK(r.catalog().size() == 3);
    CHECK(*r.get("C2", "O3") == 1.0);
    CHECK_FALSE(r.get("C1", "O3").has_value());
    CHECK(r.of("nobody").empty());

    oracle::spit(dir / "d.csv", "customer_id,offer_id,rating\nC1,O1,4\nC1,O1,3\n");
    auto e = expect_error([&] { load_ratings(dir / "d.csv"); }, ErrorCode::DuplicatePair);
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);

    oracle::spit(dir / "o.csv", "customer_id,offer_id,rating\nC1,O1,0.5\n");
    expect_error([&] { load_ratings(dir / "o.csv"); }, ErrorCode::RatingOutOfRange);

    RatingsMatrix m;
    expect_error([&] { m.add("C1", "O1", 5.5); }, ErrorCode::RatingOutOfRange);
    CHECK(m.entry_count() == 0);
}

TEST_CASE("feature matrix: numeric, one-hot and unknown columns") {
    CustomerTable t;
    for (int i = 0; i < 3; ++i) {
        CustomerRecord r;
        r.customer_id = "C" + std::to_string(i);
        r.age = 20 + i;
        r.nps = i;
        r.region = i == 1 ? "N" : "S";
        t.rows.push_back(r);
    }
    auto m = build_feature_matrix(t, {"age", "nps"});
    CHECK(m.n_rows == 3);
    CHECK(m.n_cols == 2);
    CHECK(m.at(2, 0) == 22.0);
    CHECK(m.row_ids[1] == "C1");

    t.rows.pop_back();
    auto one_hot = build_feature_matrix(t, {"region"});
    REQUIRE(one_hot.n_cols == 2);
    CHECK(one_hot.column_names == std::vector<std::string>{"region=N", "region=S"});
    CHECK(one_hot.row(0)[0] == 0.0);
    CHECK(one_hot.row(0)[1] == 1.0);
    CHECK(one_hot.row(1)[0] == 1.0);

    expect_error([&] { build_feature_matrix(t, {"income"}); }, ErrorCode::UnknownColumn);
    CHECK(build_feature_matrix(t, {"age", "region"}) == build_feature_matrix(t, {"age", "region"}));
}

TEST_CASE("standardize examples") {
    FeatureMatrix m(3, 2);
    for (std::size_t r = 0; r < 3; ++r) {
        m.at(r, 0) = static_cast<double>(r + 1);
        m.at(r, 1) = 5.0;
    }
    auto [z, params] = standardize(m);
    CHECK(z.at(0, 0) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(z.at(1, 0) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(z.at(2, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(params.mean[0] == 2.0);
    CHECK(params.sd[0] == doctest::Approx(1.0));
    CHECK_FALSE(params.constant[0]);
    CHECK(params.constant[1]);
    for (std::size_t r = 0; r < 3; ++r) CHECK(z.at(r, 1) == 0.0);

    auto [again, p2] = standardize(z);
    CHECK(p2.mean[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(p2.sd[0] == doctest::Approx(1.0).epsilon(1e-12));
    for (std::size_t r = 0; r < 3; ++r) CHECK(std::fabs(again.at(r, 0) - z.at(r, 0)) <= 1e-9);

    expect_error([] { standardize(FeatureMatrix{}); }, ErrorCode::EmptyMatrix);
    FeatureMatrix wrong(2, 3);
    expect_error([&] { apply_scaling(wrong, params); }, ErrorCode::DimensionMismatch);
}

TEST_CASE("standardize moments and inverse on random data") {
    Rng rng(11);
    FeatureMatrix m(50, 4);
    for (auto& v : m.values) v = rng.uniform(-100, 300);
    auto [z, params] = standardize(m);
    for (std::size_t c = 0; c < 4; ++c) {
        double mean = 0, ss = 0;
        for (std::size_t r = 0; r < 50; ++r) mean += z.at(r, c);
        mean /= 50;
        for (std::size_t r = 0; r < 50; ++r) ss += (z.at(r, c) - mean) * (z.at(r, c) - mean);
        CHECK(std::fabs(mean) <= 1e-9);
        CHECK(std::fabs(std::sqrt(ss / 49) - 1.0) <= 1e-9);
    }
    auto back = unstandardize(z, params);
    for (std::size_t i = 0; i < m.values.size(); ++i) CHECK(std::fabs(back.values[i] - m.values[i]) <= 1e-9);
}

TEST_CASE("load write load round trip") {
    oracle::TempDir dir;
    oracle::spit(dir / "c.csv",
                 "customer_id,age,region,tenure_days,order_count,total_spend,days_since_last_order,"
                 "purchase_interval_mean,nps,churn_label,churn_reason\n"
                 "C1,40.25,N,365,12,480.123456789,20,30.5,7,1,\"price, too high\"\n"
                 "C2,33,\"S\",10,1,0.1,3,0.30000000000000004,10,0,\n");
    auto a = load_customers(dir / "c.csv");
    CHECK(a.has_churn_reason);
    CHECK(*a.rows[0].churn_reason == "price, too high");
    write_customers(a, dir / "d.csv");
    auto b = load_customers(dir / "d.csv");
    CHECK(a == b);

    RatingsMatrix r;
    r.add("C1", "O1", 4.5);
    r.add("C2", "O2", 1);
    r.add_offer("O3");
    write_ratings(r, dir / "r.csv");
    auto r2 = load_ratings(dir / "r.csv");
    CHECK(r2.entry_count() == 2);
    CHECK(*r2.get("C1", "O1") == 4.5);
}

TEST_CASE("csv parsing corner cases") {
    auto doc = csv::parse("\xEF\xBB\xBF" "a,b\r\n\"x \"\"q\"\"\",2\r\n\r\n3,4\n", "mem");
    REQUIRE(doc.rows.size() == 2);
    CHECK(doc.header[0] == "a");
    CHECK(doc.rows[0].fields[0] == "x \"q\"");
    CHECK(doc.rows[1].line == 4);
    expect_error([] { csv::parse("a,b\n1,2,3\n", "mem"); }, ErrorCode::ParseError);
    CHECK(csv::format_fixed6(-1e-9) == "0.000000");
    CHECK(csv::format_fixed6(0.9525741268) == "0.952574");
}

}  // TEST_SUITE
