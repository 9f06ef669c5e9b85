#include "retenta/churn_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_set>

#include <json.hpp>

#include "retenta/csv.hpp"
#include "retenta/error.hpp"
#include "report_format.hpp"

namespace retenta {

namespace {

constexpr double kArmijo = 1e-4;
constexpr double kMinStep = 1e-20;
constexpr double kMaxStep = 1e6;

// log(1 + e^z) without overflow.
double softplus(double z) noexcept {
    return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

void check_dims(std::span<const double> beta, const FeatureMatrix& features,
                std::span<const int> labels) {
    if (beta.size() != features.n_cols) {
        throw Error(ErrorCode::DimensionMismatch,
                    "beta has " + std::to_string(beta.size()) + " entries, features have " +
                        std::to_string(features.n_cols) + " columns");
    }
    if (labels.size() != features.n_rows) {
        throw Error(ErrorCode::DimensionMismatch,
                    std::to_string(labels.size()) + " labels for " +
                        std::to_string(features.n_rows) + " rows");
    }
}

double inf_norm(double a, std::span<const double> v) {
    double m = std::fabs(a);
    for (double x : v) m = std::max(m, std::fabs(x));
    return m;
}

}  // namespace

std::string_view stop_reason_name(StopReason r) noexcept {
    switch (r) {
        case StopReason::GradientTolerance: return "gradient_tolerance";
        case StopReason::MaxIterations: return "max_iterations";
        case StopReason::StepUnderflow: return "step_underflow";
    }
    return "unknown";
}

double sigmoid(double z) noexcept {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double linear_score(double alpha, std::span<const double> beta, std::span<const double> x) {
    double s = alpha;
    for (std::size_t i = 0; i < beta.size(); ++i) s += beta[i] * x[i];
    return s;
}

double predict_linear(const ChurnModel& model, std::span<const double> x) {
    if (x.size() != model.beta.size()) {
        throw Error(ErrorCode::DimensionMismatch,
                    "feature row has " + std::to_string(x.size()) + " entries, model expects " +
                        std::to_string(model.beta.size()));
    }
    return linear_score(model.alpha, model.beta, x);
}

double predict_churn_probability(const ChurnModel& model, std::span<const double> x) {
    return sigmoid(predict_linear(model, x));
}

LossGradient loss_and_gradient(double alpha, std::span<const double> beta,
                               const FeatureMatrix& features, std::span<const int> labels,
                               double l2_lambda) {
    check_dims(beta, features, labels);
    LossGradient out;
    out.grad_beta.assign(beta.size(), 0.0);
    const auto n = static_cast<double>(features.n_rows);
    for (std::size_t r = 0; r < features.n_rows; ++r) {
        const auto x = features.row(r);
        const double z = linear_score(alpha, beta, x);
        const double y = labels[r];
        out.loss += softplus(z) - y * z;
        const double residual = sigmoid(z) - y;
        out.grad_alpha += residual;
        for (std::size_t j = 0; j < beta.size(); ++j) out.grad_beta[j] += residual * x[j];
    }
    double penalty = 0.0;
    for (double b : beta) penalty += b * b;
    if (n > 0) {
        out.loss /= n;
        out.grad_alpha /= n;
        for (auto& g : out.grad_beta) g /= n;
    }
    out.loss += 0.5 * l2_lambda * penalty;
    for (std::size_t j = 0; j < beta.size(); ++j) out.grad_beta[j] += l2_lambda * beta[j];
    return out;
}

double loss_value(double alpha, std::span<const double> beta, const FeatureMatrix& features,
                  std::span<const int> labels, double l2_lambda) {
    check_dims(beta, features, labels);
    double loss = 0.0;
    for (std::size_t r = 0; r < features.n_rows; ++r) {
        const double z = linear_score(alpha, beta, features.row(r));
        loss += softplus(z) - labels[r] * z;
    }
    if (features.n_rows > 0) loss /= static_cast<double>(features.n_rows);
    double penalty = 0.0;
    for (double b : beta) penalty += b * b;
    return loss + 0.5 * l2_lambda * penalty;
}

ChurnModel fit(const FeatureMatrix& features, std::span<const int> labels, const FitOptions& options) {
    if (labels.size() != features.n_rows) {
        throw Error(ErrorCode::DimensionMismatch, "label count differs from row count");
    }
    std::size_t positives = 0;
    for (int y : labels) {
        if (y != 0 && y != 1) throw Error(ErrorCode::OutOfRange, "labels must be 0 or 1");
        positives += static_cast<std::size_t>(y);
    }
    if (positives == 0 || positives == labels.size()) {
        throw Error(ErrorCode::DegenerateLabels,
                    "need at least one churned and one retained customer to fit");
    }
    if (!(options.l2_lambda >= 0.0) || !(options.learning_rate > 0.0) || !(options.tolerance >= 0.0)) {
        throw Error(ErrorCode::InvalidConfig, "l2_lambda and tolerance must be >= 0, learning_rate > 0");
    }

    ChurnModel model;
    model.feature_columns = features.column_names;
    model.l2_lambda = options.l2_lambda;
    model.beta.assign(features.n_cols, 0.0);
    model.scaling.mean.assign(features.n_cols, 0.0);
    model.scaling.sd.assign(features.n_cols, 1.0);
    model.scaling.constant.assign(features.n_cols, false);

    auto& info = model.training;
    LossGradient current = loss_and_gradient(model.alpha, model.beta, features, labels, options.l2_lambda);
    if (!std::isfinite(current.loss)) throw Error(ErrorCode::NonFiniteLoss, "initial loss is not finite");
    info.initial_loss = current.loss;
    info.loss_trace.push_back(current.loss);

    double step = options.learning_rate;
    std::vector<double> candidate(model.beta.size());
    info.stop = StopReason::MaxIterations;
    while (true) {
        const double gnorm = inf_norm(current.grad_alpha, current.grad_beta);
        info.gradient_norm = gnorm;
        if (!std::isfinite(gnorm)) throw Error(ErrorCode::NonFiniteLoss, "gradient is not finite");
        if (gnorm <= options.tolerance) {
            info.stop = StopReason::GradientTolerance;
            break;
        }
        if (info.iterations >= options.max_iters) {
            info.stop = StopReason::MaxIterations;
            break;
        }
        double g2 = current.grad_alpha * current.grad_alpha;
        for (double g : current.grad_beta) g2 += g * g;

        bool accepted = false;
        double candidate_alpha = 0.0;
        double candidate_loss = 0.0;
        while (step >= kMinStep) {
            candidate_alpha = model.alpha - step * current.grad_alpha;
            for (std::size_t j = 0; j < candidate.size(); ++j) {
                candidate[j] = model.beta[j] - step * current.grad_beta[j];
            }
            candidate_loss = loss_value(candidate_alpha, candidate, features, labels, options.l2_lambda);
            if (std::isfinite(candidate_loss) && candidate_loss <= current.loss - kArmijo * step * g2) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            info.stop = StopReason::StepUnderflow;
            break;
        }
        model.alpha = candidate_alpha;
        model.beta = candidate;
        current = loss_and_gradient(model.alpha, model.beta, features, labels, options.l2_lambda);
        if (!std::isfinite(current.loss)) throw Error(ErrorCode::NonFiniteLoss, "loss diverged");
        info.loss_trace.push_back(current.loss);
        ++info.iterations;
        step = std::min(2.0 * step, kMaxStep);
    }
    info.final_loss = current.loss;
    return model;
}

std::vector<int> churn_labels(const CustomerTable& table) {
    std::vector<int> labels;
    labels.reserve(table.size());
    for (const auto& r : table.rows) {
        if (!r.churn_label) {
            throw Error(ErrorCode::OutOfRange, "customer '" + r.customer_id + "' has no churn_label");
        }
        labels.push_back(*r.churn_label);
    }
    return labels;
}

ChurnModel train(const CustomerTable& table, const std::vector<std::string>& feature_spec,
                 const FitOptions& options) {
    const auto raw = build_feature_matrix(table, feature_spec);
    auto [scaled, params] = standardize(raw);
    const auto labels = churn_labels(table);
    ChurnModel model = fit(scaled, labels, options);
    model.scaling = std::move(params);
    return model;
}

std::vector<RiskScore> score_all(const ChurnModel& model, const CustomerTable& table) {
    if (table.empty()) return {};
    const auto raw = materialize_columns(table, model.feature_columns);
    const auto x = apply_scaling(raw, model.scaling);
    std::vector<RiskScore> out(x.n_rows);
    for (std::size_t r = 0; r < x.n_rows; ++r) {
        out[r].customer_id = x.row_ids[r];
        out[r].churn_probability = predict_churn_probability(model, x.row(r));
    }
    return out;
}

std::vector<RiskScore> quantize_scores(std::vector<RiskScore> scores) {
    for (auto& s : scores) s.churn_probability = *csv::parse_double(csv::format_fixed6(s.churn_probability));
    return scores;
}

Segmentation segment(std::span<const RiskScore> scores, double risky_threshold, double loyal_threshold) {
    if (!(risky_threshold >= 0.0 && risky_threshold <= 1.0 && loyal_threshold >= 0.0 &&
          loyal_threshold <= 1.0)) {
        throw Error(ErrorCode::InvalidConfig, "thresholds must lie in [0, 1]");
    }
    if (loyal_threshold >= risky_threshold) {
        throw Error(ErrorCode::ThresholdOrder,
                    "loyal threshold " + csv::format_double(loyal_threshold) +
                        " must be below risky threshold " + csv::format_double(risky_threshold));
    }
    Segmentation seg;
    seg.risky_threshold = risky_threshold;
    seg.loyal_threshold = loyal_threshold;
    seg.population = scores.size();
    std::unordered_set<std::string> seen;
    for (const auto& s : scores) {
        if (!seen.insert(s.customer_id).second) {
            throw Error(ErrorCode::DuplicateId, "score listed twice for '" + s.customer_id + "'");
        }
        if (s.churn_probability >= risky_threshold) {
            seg.risky.insert(s.customer_id);
        } else if (s.churn_probability <= loyal_threshold) {
            seg.loyal.insert(s.customer_id);
        }
    }
    return seg;
}

void write_model(const ChurnModel& model, const std::filesystem::path& path) {
    nlohmann::ordered_json j;
    j["alpha"] = model.alpha;
    j["beta"] = model.beta;
    j["feature_columns"] = model.feature_columns;
    j["scaling"] = {{"mean", model.scaling.mean}, {"sd", model.scaling.sd}};
    j["l2_lambda"] = model.l2_lambda;
    j["training"] = {{"iterations", model.training.iterations},
                     {"initial_loss", model.training.initial_loss},
                     {"final_loss", model.training.final_loss},
                     {"gradient_norm", model.training.gradient_norm},
                     {"stop_reason", stop_reason_name(model.training.stop)}};
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    detail::write_json(out, j);
    out << '\n';
}

ChurnModel read_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    ChurnModel m;
    try {
        const auto j = nlohmann::json::parse(in);
        m.alpha = j.at("alpha").get<double>();
        m.beta = j.at("beta").get<std::vector<double>>();
        m.feature_columns = j.at("feature_columns").get<std::vector<std::string>>();
        m.scaling.mean = j.at("scaling").at("mean").get<std::vector<double>>();
        m.scaling.sd = j.at("scaling").at("sd").get<std::vector<double>>();
        m.l2_lambda = j.at("l2_lambda").get<double>();
        if (j.contains("training")) {
            const auto& t = j.at("training");
            m.training.iterations = t.value("iterations", std::size_t{0});
            m.training.final_loss = t.value("final_loss", 0.0);
            m.training.initial_loss = t.value("initial_loss", 0.0);
            m.training.gradient_norm = t.value("gradient_norm", 0.0);
            const auto reason = t.value("stop_reason", std::string("max_iterations"));
            m.training.stop = reason == "gradient_tolerance" ? StopReason::GradientTolerance
                              : reason == "step_underflow"   ? StopReason::StepUnderflow
                                                             : StopReason::MaxIterations;
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
    }
    const std::size_t n = m.beta.size();
    if (m.feature_columns.size() != n || m.scaling.mean.size() != n || m.scaling.sd.size() != n) {
        throw Error(ErrorCode::DimensionMismatch, path.string() + ": inconsistent model dimensions");
    }
    m.scaling.constant.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(m.beta[i]) || !(m.scaling.sd[i] >= 0.0)) {
            throw Error(ErrorCode::OutOfRange, path.string() + ": invalid coefficient or scale");
        }
        m.scaling.constant[i] = m.scaling.sd[i] == 0.0;
    }
    return m;
}

void write_scores(std::span<const RiskScore> scores, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out << "customer_id,churn_probability\n";
    for (const auto& s : scores) {
        out << csv::escape(s.customer_id) << ',' << csv::format_fixed6(s.churn_probability) << '\n';
    }
    if (!out) throw Error(ErrorCode::Io, "failed writing " + path.string());
}

std::vector<RiskScore> read_scores(const std::filesystem::path& path) {
    const auto doc = csv::read(path);
    const auto id = doc.column("customer_id");
    const auto p = doc.column("churn_probability");
    if (!id || !p) {
        throw Error(ErrorCode::MissingColumn,
                    path.string() + ": expected columns customer_id,churn_probability");
    }
    std::vector<RiskScore> out;
    out.reserve(doc.rows.size());
    for (const auto& row : doc.rows) {
        auto v = csv::parse_double(row.fields[*p]);
        if (!v || !(*v >= 0.0 && *v <= 1.0)) {
            throw Error(ErrorCode::NonNumericField, path.string() + " line " + std::to_string(row.line) +
                                                        ": churn_probability must be in [0, 1]");
        }
        out.push_back({row.fields[*id], *v});
    }
    return out;
}

void write_segmentation(const Segmentation& seg, std::span<const RiskScore> scores,
                        const std::filesystem::path& path) {
    std::vector<std::string> ids;
    ids.reserve(scores.size());
    for (const auto& s : scores) ids.push_back(s.customer_id);
    std::sort(ids.begin(), ids.end());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out << "customer_id,segment\n";
    for (const auto& id : ids) {
        const char* label = seg.risky.count(id) ? "risky" : seg.loyal.count(id) ? "loyal" : "neither";
        out << csv::escape(id) << ',' << label << '\n';
    }
}

}  // namespace retenta
