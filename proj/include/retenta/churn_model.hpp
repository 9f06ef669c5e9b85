#pragma once

#include <cstddef>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "retenta/dataset.hpp"

namespace retenta {

struct FitOptions {
    double l2_lambda = 1e-4;
    std::size_t max_iters = 500;
    double tolerance = 1e-6;     // on the gradient infinity-norm
    double learning_rate = 1.0;  // initial step of the backtracking search
};

enum class StopReason { GradientTolerance, MaxIterations, StepUnderflow };

std::string_view stop_reason_name(StopReason r) noexcept;

struct TrainingInfo {
    std::size_t iterations = 0;
    double initial_loss = 0.0;
    double final_loss = 0.0;
    double gradient_norm = 0.0;
    StopReason stop = StopReason::MaxIterations;
    std::vector<double> loss_trace;  // loss at the start and after every accepted step
};

// Logistic churn model: Q(x) = 1 / (1 + exp(-(alpha + beta . x))) on
// standardized features.
struct ChurnModel {
    double alpha = 0.0;
    std::vector<double> beta;
    std::vector<std::string> feature_columns;  // expanded (one-hot) names
    ScalingParams scaling;
    double l2_lambda = 0.0;
    TrainingInfo training;
};

struct RiskScore {
    std::string customer_id;
    double churn_probability = 0.0;

    bool operator==(const RiskScore&) const = default;
};

struct Segmentation {
    std::set<std::string> risky;  // predicted potential churners
    std::set<std::string> loyal;  // neighbor pool for recommendations
    double risky_threshold = 0.5;
    double loyal_threshold = 0.1;
    std::size_t population = 0;

    std::size_t neither() const noexcept { return population - risky.size() - loyal.size(); }
    bool operator==(const Segmentation&) const = default;
};

struct LossGradient {
    double loss = 0.0;
    double grad_alpha = 0.0;
    std::vector<double> grad_beta;
};

// Numerically stable logistic function.
double sigmoid(double z) noexcept;

double linear_score(double alpha, std::span<const double> beta, std::span<const double> x);

// alpha + sum b_i x_i. Throws DimensionMismatch.
double predict_linear(const ChurnModel& model, std::span<const double> x);

double predict_churn_probability(const ChurnModel& model, std::span<const double> x);

// Mean negative log-likelihood plus (l2/2)|beta|^2 and its gradient. The
// intercept is not regularized. Throws DimensionMismatch.
LossGradient loss_and_gradient(double alpha, std::span<const double> beta,
                               const FeatureMatrix& features, std::span<const int> labels,
                               double l2_lambda);

double loss_value(double alpha, std::span<const double> beta, const FeatureMatrix& features,
                  std::span<const int> labels, double l2_lambda);

// Batch gradient descent from zero with Armijo backtracking. Features must
// already be standardized; the returned model carries identity scaling.
// Throws DegenerateLabels, NonFiniteLoss, DimensionMismatch.
ChurnModel fit(const FeatureMatrix& features, std::span<const int> labels,
               const FitOptions& options = {});

// Builds, standardizes and fits in one go; the model keeps the scaling.
ChurnModel train(const CustomerTable& table, const std::vector<std::string>& feature_spec,
                 const FitOptions& options = {});

// Throws OutOfRange if a row lacks a churn label.
std::vector<int> churn_labels(const CustomerTable& table);

// Scores every customer in table order. Throws UnknownColumn.
std::vector<RiskScore> score_all(const ChurnModel& model, const CustomerTable& table);

// Rounds probabilities to the six decimals written to scores.csv.
std::vector<RiskScore> quantize_scores(std::vector<RiskScore> scores);

// risky = {p >= risky_threshold}, loyal = {p <= loyal_threshold}.
// Throws ThresholdOrder, InvalidConfig, DuplicateId.
Segmentation segment(std::span<const RiskScore> scores, double risky_threshold = 0.5,
                     double loyal_threshold = 0.1);

void write_model(const ChurnModel& model, const std::filesystem::path& path);
ChurnModel read_model(const std::filesystem::path& path);

void write_scores(std::span<const RiskScore> scores, const std::filesystem::path& path);
std::vector<RiskScore> read_scores(const std::filesystem::path& path);

// customer_id,segment with segment in {risky, loyal, neither}, sorted by id.
void write_segmentation(const Segmentation& seg, std::span<const RiskScore> scores,
                        const std::filesystem::path& path);

}  // namespace retenta
