#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "retenta/churn_model.hpp"
#include "retenta/config.hpp"
#include "retenta/profiler.hpp"
#include "retenta/retention.hpp"

namespace retenta {

struct StageTiming {
    std::string name;
    std::int64_t wall_ms = 0;
};

struct PipelineResult {
    std::filesystem::path output_dir;
    ChurnModel model;
    std::vector<RiskScore> scores;  // as persisted (six decimals)
    double mean_probability = 0.0;
    Segmentation segmentation;
    Clustering clustering;
    ClusterReport report;
    std::map<std::string, RecommendationList> recommendations;
    std::size_t served = 0;      // risky customers with at least one offer
    std::size_t cold_start = 0;  // risky customers with none
    std::vector<StageTiming> stages;
};

// Names of the files run_pipeline writes into the output directory.
const std::vector<std::string>& pipeline_output_files();

// load -> standardize -> fit -> score -> segment -> cluster -> evaluate ->
// recommend, then writes every output. Errors are rethrown with the failing
// stage name prefixed and any outputs of the run are removed.
PipelineResult run_pipeline(const PipelineConfig& config);

// Clustering stage shared by `pipeline` and the stand-alone `cluster` command.
std::pair<Clustering, ClusterReport> cluster_customers(const PipelineConfig& config,
                                                       const ChurnModel& model,
                                                       const CustomerTable& table,
                                                       std::span<const RiskScore> scores);

void write_result(const PipelineResult& result, bool record_timings,
                  const std::filesystem::path& path);

}  // namespace retenta
