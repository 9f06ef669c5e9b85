#include <doctest.h>

#include <filesystem>
#include <json.hpp>

#include "helpers.hpp"
#include "retenta/config.hpp"
#include "retenta/pipeline.hpp"
#include "retenta/synthetic.hpp"

using namespace retenta;
namespace fs = std::filesystem;

namespace {

PipelineConfig bundle_config(const oracle::TempDir& dir, std::uint64_t seed = 7) {
    write_bundle(generate_synthetic({}, seed), dir.path());
    PipelineConfig cfg;
    cfg.customers = dir / "customers.csv";
    cfg.ratings = dir / "ratings.csv";
    cfg.output_dir = dir / "out";
    cfg.seed = seed;
    return cfg;
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("end to end writes all outputs") {
    oracle::TempDir dir;
    auto cfg = bundle_config(dir);
    auto result = run_pipeline(cfg);
    for (const auto& f : pipeline_output_files()) {
        CAPTURE(f);
        CHECK(fs::exists(dir / "out" / f));
    }
    auto report = nlohmann::json::parse(oracle::slurp(dir / "out" / "cluster_report.json"));
    CHECK(report["k"] == 3);
    CHECK(report["sizes"].size() == 3);
    CHECK(report["profiles"].size() == 3);
    CHECK(report["external_vars"].size() == 3);
    auto res = nlohmann::json::parse(oracle::slurp(dir / "out" / "result.json"));
    CHECK(res["scores"]["count"] == 1000);
    CHECK(res["segment_sizes"]["risky"].get<std::size_t>() == result.segmentation.risky.size());
    CHECK(result.served + result.cold_start == result.segmentation.risky.size());
    CHECK(result.recommendations.size() == result.segmentation.risky.size());
}

TEST_CASE("two runs are byte identical") {
    oracle::TempDir dir;
    auto cfg = bundle_config(dir, 3);
    run_pipeline(cfg);
    cfg.output_dir = dir / "again";
    run_pipeline(cfg);
    for (const auto& f : pipeline_output_files()) {
        CAPTURE(f);
        CHECK(oracle::slurp(dir / "out" / f) == oracle::slurp(dir / "again" / f));
    }
    auto listing = [](const fs::path& p) {
        std::set<std::string> names;
        for (const auto& e : fs::directory_iterator(p)) names.insert(e.path().filename().string());
        return names;
    };
    CHECK(listing(dir / "out") == listing(dir / "again"));
}

TEST_CASE("missing column fails in load and leaves nothing behind") {
    oracle::TempDir dir;
    auto cfg = bundle_config(dir);
    std::string text = oracle::slurp(dir / "customers.csv");
    text.replace(text.find(",nps"), 4, ",promoter");
    oracle::spit(dir / "customers.csv", text);
    auto e = expect_error([&] { run_pipeline(cfg); }, ErrorCode::MissingColumn);
    CHECK(std::string(e.what()).rfind("load: MissingColumn", 0) == 0);
    CHECK_FALSE(fs::exists(dir / "out"));

    // A pre-existing output directory is kept, but emptied of this run's files.
    fs::create_directories(dir / "out");
    oracle::spit(dir / "out" / "keep.txt", "x");
    expect_error([&] { run_pipeline(cfg); }, ErrorCode::MissingColumn);
    CHECK(fs::exists(dir / "out" / "keep.txt"));
    for (const auto& f : pipeline_output_files()) CHECK_FALSE(fs::exists(dir / "out" / f));
}

TEST_CASE("degenerate labels fail in fit") {
    oracle::TempDir dir;
    auto cfg = bundle_config(dir);
    auto bundle = generate_synthetic({}, 7);
    for (auto& r : bundle.customers.rows) r.churn_label = 0;
    write_customers(bundle.customers, dir / "customers.csv");
    auto e = expect_error([&] { run_pipeline(cfg); }, ErrorCode::DegenerateLabels);
    CHECK(std::string(e.what()).rfind("fit: ", 0) == 0);
    CHECK_FALSE(fs::exists(dir / "out"));
}

TEST_CASE("recommendations only draw on loyal customers") {
    oracle::TempDir dir;
    auto cfg = bundle_config(dir, 11);
    auto result = run_pipeline(cfg);
    std::map<std::string, double> p;
    for (const auto& s : result.scores) p[s.customer_id] = s.churn_probability;
    RatingsMatrix ratings = load_ratings(cfg.ratings);
    std::size_t items = 0;
    for (const auto& [id, list] : result.recommendations) {
        for (const auto& item : list.items) {
            ++items;
            CHECK_FALSE(ratings.get(id, item.offer_id).has_value());
            for (const auto& s : item.supporters) CHECK(p.at(s) <= cfg.loyal_threshold);
        }
    }
    CHECK(items > 0);
}

TEST_CASE("config files") {
    oracle::TempDir dir;
    oracle::spit(dir / "run.cfg",
                 "# comment\ncustomers = c.csv\nk = 4\nrisky_threshold = 0.7\nfeatures = age, nps\n");
    auto cfg = load_config(dir / "run.cfg");
    CHECK(cfg.customers == dir / "c.csv");
    CHECK(cfg.k == 4);
    CHECK(cfg.risky_threshold == 0.7);
    CHECK(cfg.features == std::vector<std::string>{"age", "nps"});

    oracle::spit(dir / "bad.cfg", "colour = blue\n");
    auto e = expect_error([&] { load_config(dir / "bad.cfg"); }, ErrorCode::InvalidConfig);
    CHECK(std::string(e.what()).find("colour") != std::string::npos);
    oracle::spit(dir / "bad2.cfg", "k = three\n");
    expect_error([&] { load_config(dir / "bad2.cfg"); }, ErrorCode::InvalidConfig);
    oracle::spit(dir / "bad3.cfg", "just words\n");
    expect_error([&] { load_config(dir / "bad3.cfg"); }, ErrorCode::ParseError);

    PipelineConfig round;
    round.k = 6;
    round.retention.top_n = 2;
    oracle::spit(dir / "fmt.cfg", format_config(round));
    auto back = load_config(dir / "fmt.cfg");
    CHECK(format_config(back) == format_config(round));

    PipelineConfig bad_order;
    bad_order.customers = dir / "run.cfg";
    bad_order.ratings = dir / "run.cfg";
    bad_order.risky_threshold = 0.3;
    bad_order.loyal_threshold = 0.4;
    expect_error([&] { validate_pipeline_config(bad_order); }, ErrorCode::ThresholdOrder);
}

}  // TEST_SUITE
