#include "retenta/pipeline.hpp"

#include <chrono>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "report_format.hpp"
#include "retenta/error.hpp"

namespace retenta {

namespace {

class StageClock {
public:
    explicit StageClock(std::vector<StageTiming>& sink) : sink_(sink) {}

    template <class F>
    auto run(const std::string& name, F&& body) {
        const auto start = std::chrono::steady_clock::now();
        auto finish = [&] {
            const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                std::chrono::steady_clock::now() - start);
            sink_.push_back({name, ms.count()});
        };
        try {
            if constexpr (std::is_void_v<decltype(body())>) {
                body();
                finish();
            } else {
                auto value = body();
                finish();
                return value;
            }
        } catch (const Error& e) {
            throw e.prefixed(name);
        } catch (const std::filesystem::filesystem_error& e) {
            throw Error(ErrorCode::Io, e.what()).prefixed(name);
        }
    }

private:
    std::vector<StageTiming>& sink_;
};

}  // namespace

const std::vector<std::string>& pipeline_output_files() {
    static const std::vector<std::string> files = {
        "model.json", "scores.csv", "clusters.csv", "cluster_report.json", "recommendations.json", "result.json",
    };
    return files;
}

std::pair<Clustering, ClusterReport> cluster_customers(const PipelineConfig& config,
                                                       const ChurnModel& model,
                                                       const CustomerTable& table,
                                                       std::span<const RiskScore> scores) {
    const auto points = profiling_features(model, table, scores);
    Clustering clustering = kmeans_best_of(points, config.k, config.restarts, config.seed, config.kmeans);
    ClusterReport report = evaluate_clusters(clustering, table, scores, model.scaling, config.min_cluster_fraction);
    if (config.sweep_max_k >= 2) {
        report.wcss_sweep = wcss_sweep(points, 2, config.sweep_max_k, config.restarts, config.seed, config.kmeans);
    }
    return {std::move(clustering), std::move(report)};
}

namespace {

void execute_stages(const PipelineConfig& config, PipelineResult& result, StageClock& clock) {
    const auto table = clock.run("load", [&] { return load_customers(config.customers); });
    const auto ratings = clock.run("load_ratings", [&] { return load_ratings(config.ratings); });

    auto standardized = clock.run("standardize", [&] {
        return standardize(build_feature_matrix(table, config.features));
    });
    result.model = clock.run("fit", [&] {
        ChurnModel m = fit(standardized.first, churn_labels(table), config.fit);
        m.scaling = standardized.second;
        return m;
    });
    // Downstream stages see the probabilities exactly as scores.csv stores them.
    result.scores = clock.run("score", [&] { return quantize_scores(score_all(result.model, table)); });
    if (!result.scores.empty()) {
        double sum = 0.0;
        for (const auto& s : result.scores) sum += s.churn_probability;
        result.mean_probability = sum / static_cast<double>(result.scores.size());
    }
    result.segmentation = clock.run("segment", [&] {
        return segment(result.scores, config.risky_threshold, config.loyal_threshold);
    });
    auto clustered = clock.run("cluster", [&] {
        return cluster_customers(config, result.model, table, result.scores);
    });
    result.clustering = std::move(clustered.first);
    result.report = std::move(clustered.second);
    result.recommendations = clock.run("recommend", [&] {
        return recommend_all(result.segmentation, ratings, config.retention);
    });
    for (const auto& [id, list] : result.recommendations) {
        (list.cold_start ? result.cold_start : result.served) += 1;
    }

    const auto& dir = result.output_dir;
    clock.run("write", [&] {
        std::filesystem::create_directories(dir);
        write_model(result.model, dir / "model.json");
        write_scores(result.scores, dir / "scores.csv");
        write_clusters(result.clustering, dir / "clusters.csv");
        write_cluster_report(result.report, dir / "cluster_report.json");
        write_recommendations(result.recommendations, dir / "recommendations.json");
        write_result(result, config.record_timings, dir / "result.json");
    });
}

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& config) {
    PipelineResult result;
    StageClock clock(result.stages);
    clock.run("config", [&] { validate_pipeline_config(config); });
    result.output_dir = resolve_output_dir(config);

    const auto& dir = result.output_dir;
    const bool created_dir = !std::filesystem::exists(dir);
    try {
        execute_stages(config, result, clock);
    } catch (...) {
        // Stale outputs from earlier runs go too, so a failed run leaves nothing behind.
        std::error_code ec;
        for (const auto& f : pipeline_output_files()) std::filesystem::remove(dir / f, ec);
        if (created_dir) std::filesystem::remove(dir, ec);
        throw;
    }
    return result;
}

void write_result(const PipelineResult& result, bool record_timings, const std::filesystem::path& path) {
    using ojson = nlohmann::ordered_json;
    ojson j;
    j["stages"] = ojson::array();
    for (const auto& s : result.stages) {
        j["stages"].push_back({{"name", s.name}, {"wall_ms", record_timings ? s.wall_ms : 0}});
    }
    // The write stage is still running when this file is produced.
    j["stages"].push_back({{"name", "write"}, {"wall_ms", 0}});
    j["segment_sizes"] = {{"risky", result.segmentation.risky.size()},
                          {"loyal", result.segmentation.loyal.size()},
                          {"neither", result.segmentation.neither()}};
    j["clustering"] = {{"k", result.clustering.k}, {"wcss", detail::round6(result.clustering.wcss)}};
    j["recommendations"] = {{"served", result.served}, {"cold_start", result.cold_start}};
    j["model"] = {{"iterations", result.model.training.iterations},
                  {"final_loss", detail::round6(result.model.training.final_loss)},
                  {"stop_reason", stop_reason_name(result.model.training.stop)}};
    j["scores"] = {{"count", result.scores.size()},
                   {"mean_churn_probability", detail::round6(result.mean_probability)}};
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    detail::write_json(out, j);
    out << '\n';
}

}  // namespace retenta
