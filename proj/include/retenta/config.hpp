#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "retenta/churn_model.hpp"
#include "retenta/profiler.hpp"
#include "retenta/retention.hpp"

namespace retenta {

struct PipelineConfig {
    std::filesystem::path customers;
    std::filesystem::path ratings;
    std::filesystem::path model;   // input of the stage-wise score/cluster commands
    std::filesystem::path scores;  // input of the stage-wise segment/cluster/recommend commands
    std::filesystem::path output_dir;
    std::vector<std::string> features = default_feature_spec();

    FitOptions fit;
    double risky_threshold = 0.5;
    double loyal_threshold = 0.1;

    std::size_t k = 3;
    std::size_t restarts = 10;
    std::uint64_t seed = 7;
    KMeansOptions kmeans;
    double min_cluster_fraction = 0.01;
    std::size_t sweep_max_k = 10;  // 0 disables the k sweep in the report

    RetentionParams retention;
    bool record_timings = false;  // wall times in result.json; off keeps outputs byte-stable
};

// Every recognised key, in documentation order.
const std::vector<std::string>& config_keys();

// Parses "key = value" lines; '#' starts a comment. Throws ParseError.
std::map<std::string, std::string> parse_key_values(std::string_view text,
                                                    std::string_view source = "<config>");

// Sets one key from its text form. Relative paths resolve against base_dir.
// Throws InvalidConfig for unknown keys or malformed values.
void apply_config_value(PipelineConfig& config, const std::string& key, const std::string& value,
                        const std::filesystem::path& base_dir = {});

PipelineConfig load_config(const std::filesystem::path& path);

// Applies a config file on top of `config`.
void merge_config_file(PipelineConfig& config, const std::filesystem::path& path);

// Returns config.output_dir, or RETENTA_OUTPUT_DIR when unset. Throws
// InvalidConfig when neither is available.
std::filesystem::path resolve_output_dir(const PipelineConfig& config);

// Checks input paths exist and parameters are consistent. Throws
// InvalidConfig or ThresholdOrder.
void validate_pipeline_config(const PipelineConfig& config);

// Serialises a config back to key = value text.
std::string format_config(const PipelineConfig& config);

}  // namespace retenta
