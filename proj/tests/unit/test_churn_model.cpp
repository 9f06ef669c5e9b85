#include <doctest.h>

#include <cmath>
#include <vector>

#include "helpers.hpp"
#include "retenta/churn_model.hpp"
#include "retenta/random.hpp"
#include "retenta/synthetic.hpp"

using namespace retenta;

namespace {

FeatureMatrix matrix_from(std::size_t rows, std::size_t cols, const std::vector<double>& v) {
    FeatureMatrix m(rows, cols);
    m.values = v;
    for (std::size_t c = 0; c < cols; ++c) m.column_names[c] = "x" + std::to_string(c);
    return m;
}

// Twenty 1-feature points with overlapping classes so the minimizer is finite.
void twenty_points(std::vector<double>& x, std::vector<int>& y) {
    x.clear();
    y.clear();
    for (int i = 0; i < 20; ++i) {
        x.push_back(-1.9 + 0.2 * i);
        y.push_back((i >= 8 && i != 12 && i != 15) || i == 3 || i == 6 ? 1 : 0);
    }
}

CustomerTable slice(const CustomerTable& t, std::size_t from, std::size_t to) {
    CustomerTable out;
    out.has_churn_label = t.has_churn_label;
    out.rows.assign(t.rows.begin() + static_cast<long>(from), t.rows.begin() + static_cast<long>(to));
    return out;
}

}  // namespace

TEST_SUITE("churn_model") {

TEST_CASE("linear score and sigmoid examples") {
    ChurnModel m;
    m.alpha = 1;
    m.beta = {2, -1};
    std::vector<double> x{3, 4};
    CHECK(predict_linear(m, x) == 3.0);
    m.beta = {0, 0};
    CHECK(predict_linear(m, x) == 1.0);
    m.alpha = 0;
    m.beta = {1};
    std::vector<double> zero{0};
    CHECK(predict_linear(m, zero) == 0.0);
    CHECK(predict_churn_probability(m, zero) == 0.5);
    expect_error([&] { predict_linear(m, x); }, ErrorCode::DimensionMismatch);

    CHECK(std::fabs(sigmoid(3) - 0.952574) <= 1e-6);
    CHECK(std::fabs(sigmoid(-3) - 0.047426) <= 1e-6);
    CHECK(sigmoid(0) == 0.5);
    CHECK(sigmoid(-800) >= 0.0);
    CHECK(sigmoid(800) == 1.0);
    Rng rng(3);
    for (int i = 0; i < 1000; ++i) {
        const double z = rng.uniform(-30, 30);
        CHECK(std::fabs(sigmoid(-z) - (1 - sigmoid(z))) <= 1e-12);
    }
    for (double z = -20; z < 20; z += 0.5) CHECK(sigmoid(z) < sigmoid(z + 0.5));
}

TEST_CASE("loss at zero parameters is ln 2") {
    auto f = matrix_from(4, 2, {1, 2, -1, 0, 3, 3, 0.5, -2});
    std::vector<int> y{1, 0, 1, 0};
    std::vector<double> beta{0, 0};
    CHECK(loss_value(0, beta, f, y, 0.1) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("saturated correct row contributes nothing") {
    auto f = matrix_from(1, 1, {1});
    std::vector<int> y{1};
    std::vector<double> beta{800};
    CHECK(loss_value(0, beta, f, y, 0.0) == 0.0);
    auto lg = loss_and_gradient(0, beta, f, y, 0.0);
    CHECK(lg.grad_beta[0] == 0.0);
}

TEST_CASE("analytic gradient matches finite differences") {
    Rng rng(17);
    auto f = matrix_from(5, 3, {});
    f.values.resize(15);
    for (auto& v : f.values) v = rng.normal();
    std::vector<int> y{1, 0, 0, 1, 1};
    const double lambda = 0.3;
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> p{rng.normal(), rng.normal(), rng.normal(), rng.normal()};
        auto lg = loss_and_gradient(p[0], std::vector<double>(p.begin() + 1, p.end()), f, y, lambda);
        auto numeric = oracle::central_difference(
            [&](const std::vector<double>& q) {
                return oracle::logistic_loss(q[0], {q.begin() + 1, q.end()}, f.values, y, lambda);
            },
            p);
        std::vector<double> analytic{lg.grad_alpha};
        analytic.insert(analytic.end(), lg.grad_beta.begin(), lg.grad_beta.end());
        for (std::size_t i = 0; i < 4; ++i) {
            const double rel = std::fabs(analytic[i] - numeric[i]) / std::max(1.0, std::fabs(numeric[i]));
            CHECK(rel <= 1e-6);
        }
        CHECK(lg.loss == doctest::Approx(oracle::logistic_loss(p[0], {p.begin() + 1, p.end()}, f.values, y, lambda)));
    }
    std::vector<int> short_labels{1, 0};
    std::vector<double> beta{0, 0, 0};
    expect_error([&] { loss_and_gradient(0, beta, f, short_labels, 0); }, ErrorCode::DimensionMismatch);
}

TEST_CASE("fit on twenty points agrees with grid search") {
    std::vector<double> x;
    std::vector<int> y;
    twenty_points(x, y);
    auto f = matrix_from(20, 1, x);
    FitOptions opts;
    auto model = fit(f, y, opts);
    auto grid = oracle::grid_search_1d(x, y, opts.l2_lambda);
    CHECK(std::fabs(model.alpha - grid.alpha) <= 1e-2);
    CHECK(std::fabs(model.beta[0] - grid.beta) <= 1e-2);
    CHECK(model.training.stop == StopReason::GradientTolerance);
    CHECK(model.training.gradient_norm <= opts.tolerance);
}

TEST_CASE("fit loss trace never increases") {
    auto b = generate_synthetic({}, 21);
    auto model = train(b.customers, default_feature_spec());
    const auto& trace = model.training.loss_trace;
    REQUIRE(trace.size() >= 2);
    CHECK(trace.front() == doctest::Approx(std::log(2.0)));
    for (std::size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] <= trace[i - 1]);
    CHECK(model.training.final_loss <= model.training.initial_loss);
    CHECK(model.feature_columns.size() == 11);
}

TEST_CASE("max iterations stop is recorded") {
    std::vector<double> x;
    std::vector<int> y;
    twenty_points(x, y);
    FitOptions opts;
    opts.max_iters = 2;
    auto model = fit(matrix_from(20, 1, x), y, opts);
    CHECK(model.training.iterations == 2);
    CHECK(model.training.stop == StopReason::MaxIterations);
}

TEST_CASE("single class labels are degenerate") {
    auto f = matrix_from(3, 1, {1, 2, 3});
    std::vector<int> ones{1, 1, 1};
    expect_error([&] { fit(f, ones); }, ErrorCode::DegenerateLabels);
}

TEST_CASE("held out AUC on a planted population") {
    SyntheticConfig cfg;
    cfg.population = 2000;
    auto b = generate_synthetic(cfg, 7);
    auto train_half = slice(b.customers, 0, 1000);
    auto test_half = slice(b.customers, 1000, 2000);
    auto model = train(train_half, default_feature_spec());
    auto scores = score_all(model, test_half);
    std::vector<double> p;
    std::vector<int> y;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        p.push_back(scores[i].churn_probability);
        y.push_back(*test_half.rows[i].churn_label);
    }
    CHECK(oracle::auc(p, y) >= 0.95);
}

TEST_CASE("scoring") {
    auto b = generate_synthetic({}, 4);
    auto model = train(b.customers, default_feature_spec());
    auto scores = score_all(model, b.customers);
    REQUIRE(scores.size() == b.customers.size());
    auto z = apply_scaling(materialize_columns(b.customers, model.feature_columns), model.scaling);
    for (std::size_t i = 0; i < scores.size(); ++i) {
        CHECK(scores[i].customer_id == b.customers.rows[i].customer_id);
        CHECK(scores[i].churn_probability == predict_churn_probability(model, z.row(i)));
    }
    CHECK(score_all(model, CustomerTable{}).empty());

    ChurnModel centered;
    centered.alpha = -0.7;
    centered.beta = {2.0};
    centered.feature_columns = {"age"};
    centered.scaling = {{40.0}, {5.0}, {false}};
    CustomerTable one;
    CustomerRecord r;
    r.customer_id = "C1";
    r.age = 40.0;
    one.rows.push_back(r);
    CHECK(score_all(centered, one)[0].churn_probability == sigmoid(-0.7));

    centered.feature_columns = {"income"};
    expect_error([&] { score_all(centered, one); }, ErrorCode::UnknownColumn);
}

TEST_CASE("segment examples") {
    std::vector<RiskScore> s{{"A", 0.95}, {"B", 0.05}, {"C", 0.50}};
    auto seg = segment(s, 0.5, 0.10);
    CHECK(seg.risky == std::set<std::string>{"A", "C"});
    CHECK(seg.loyal == std::set<std::string>{"B"});
    CHECK(seg.neither() == 0);
    s.push_back({"D", 0.10});
    s.push_back({"E", 0.3});
    seg = segment(s);
    CHECK(seg.loyal.count("D"));
    CHECK(seg.neither() == 1);
    expect_error([&] { segment(s, 0.6, 0.6); }, ErrorCode::ThresholdOrder);
    expect_error([&] { segment(s, 0.5, 0.6); }, ErrorCode::ThresholdOrder);
    s.push_back({"A", 0.2});
    expect_error([&] { segment(s); }, ErrorCode::DuplicateId);
}

TEST_CASE("model and scores persist") {
    oracle::TempDir dir;
    auto b = generate_synthetic({}, 8);
    auto model = train(b.customers, default_feature_spec());
    write_model(model, dir / "model.json");
    auto back = read_model(dir / "model.json");
    CHECK(back.alpha == model.alpha);
    CHECK(back.beta == model.beta);
    CHECK(back.scaling == model.scaling);
    CHECK(back.feature_columns == model.feature_columns);
    CHECK(score_all(back, b.customers) == score_all(model, b.customers));

    auto q = quantize_scores(score_all(model, b.customers));
    write_scores(q, dir / "scores.csv");
    CHECK(read_scores(dir / "scores.csv") == q);
}

}  // TEST_SUITE
