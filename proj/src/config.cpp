#include "retenta/config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "retenta/csv.hpp"
#include "retenta/error.hpp"

namespace retenta {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

double to_real(const std::string& key, const std::string& value) {
    auto v = csv::parse_double(value);
    if (!v || !std::isfinite(*v)) {
        throw Error(ErrorCode::InvalidConfig, key + ": '" + value + "' is not a number");
    }
    return *v;
}

std::uint64_t to_count(const std::string& key, const std::string& value) {
    if (value.empty() || value.find_first_not_of("0123456789") != std::string::npos) {
        throw Error(ErrorCode::InvalidConfig, key + ": '" + value + "' is not a non-negative integer");
    }
    try {
        return std::stoull(value);
    } catch (const std::exception&) {
        throw Error(ErrorCode::InvalidConfig, key + ": '" + value + "' is out of range");
    }
}

bool to_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
    if (value == "false" || value == "0" || value == "no" || value == "off") return false;
    throw Error(ErrorCode::InvalidConfig, key + ": '" + value + "' is not a boolean");
}

std::filesystem::path to_path(const std::string& value, const std::filesystem::path& base) {
    std::filesystem::path p(value);
    if (p.is_relative() && !base.empty()) p = base / p;
    return p.lexically_normal();
}

std::vector<std::string> to_list(const std::string& value) {
    std::vector<std::string> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

}  // namespace

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = {
        "customers",       "ratings",         "model",          "scores",
        "output_dir",      "features",        "l2_lambda",      "max_iters",
        "tolerance",       "learning_rate",   "risky_threshold", "loyal_threshold",
        "k",               "restarts",        "seed",           "cluster_tol",
        "cluster_max_iters", "min_cluster_fraction", "sweep_max_k", "top_k",
        "top_n",           "like_threshold",  "min_co_rated",   "record_timings",
    };
    return keys;
}

std::map<std::string, std::string> parse_key_values(std::string_view text, std::string_view source) {
    std::map<std::string, std::string> out;
    std::size_t line_no = 0;
    std::stringstream ss{std::string(text)};
    std::string line;
    while (std::getline(ss, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const std::string content = trim(line);
        if (content.empty()) continue;
        const auto eq = content.find('=');
        if (eq == std::string::npos) {
            throw Error(ErrorCode::ParseError, std::string(source) + " line " + std::to_string(line_no) +
                                                   ": expected 'key = value'");
        }
        const std::string key = trim(content.substr(0, eq));
        if (key.empty()) {
            throw Error(ErrorCode::ParseError,
                        std::string(source) + " line " + std::to_string(line_no) + ": empty key");
        }
        out[key] = trim(content.substr(eq + 1));
    }
    return out;
}

void apply_config_value(PipelineConfig& c, const std::string& key, const std::string& value,
                        const std::filesystem::path& base) {
    if (key == "customers") c.customers = to_path(value, base);
    else if (key == "ratings") c.ratings = to_path(value, base);
    else if (key == "model") c.model = to_path(value, base);
    else if (key == "scores") c.scores = to_path(value, base);
    else if (key == "output_dir") c.output_dir = to_path(value, base);
    else if (key == "features") c.features = to_list(value);
    else if (key == "l2_lambda") c.fit.l2_lambda = to_real(key, value);
    else if (key == "max_iters") c.fit.max_iters = to_count(key, value);
    else if (key == "tolerance") c.fit.tolerance = to_real(key, value);
    else if (key == "learning_rate") c.fit.learning_rate = to_real(key, value);
    else if (key == "risky_threshold") c.risky_threshold = to_real(key, value);
    else if (key == "loyal_threshold") c.loyal_threshold = to_real(key, value);
    else if (key == "k") c.k = to_count(key, value);
    else if (key == "restarts") c.restarts = to_count(key, value);
    else if (key == "seed") c.seed = to_count(key, value);
    else if (key == "cluster_tol") c.kmeans.tol = to_real(key, value);
    else if (key == "cluster_max_iters") c.kmeans.max_iters = to_count(key, value);
    else if (key == "min_cluster_fraction") c.min_cluster_fraction = to_real(key, value);
    else if (key == "sweep_max_k") c.sweep_max_k = to_count(key, value);
    else if (key == "top_k") c.retention.top_k = to_count(key, value);
    else if (key == "top_n") c.retention.top_n = to_count(key, value);
    else if (key == "like_threshold") c.retention.like_threshold = to_real(key, value);
    else if (key == "min_co_rated") c.retention.min_co_rated = to_count(key, value);
    else if (key == "record_timings") c.record_timings = to_bool(key, value);
    else throw Error(ErrorCode::InvalidConfig, "unknown config key '" + key + "'");
}

void merge_config_file(PipelineConfig& config, const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::InvalidConfig, "cannot open config " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    const auto base = path.parent_path();
    for (const auto& [key, value] : parse_key_values(buf.str(), path.string())) {
        try {
            apply_config_value(config, key, value, base);
        } catch (const Error& e) {
            throw e.prefixed(path.string());
        }
    }
}

PipelineConfig load_config(const std::filesystem::path& path) {
    PipelineConfig config;
    merge_config_file(config, path);
    return config;
}

std::filesystem::path resolve_output_dir(const PipelineConfig& config) {
    if (!config.output_dir.empty()) return config.output_dir;
    if (const char* env = std::getenv("RETENTA_OUTPUT_DIR"); env && *env) return env;
    throw Error(ErrorCode::InvalidConfig, "no output directory (set output_dir or RETENTA_OUTPUT_DIR)");
}

void validate_pipeline_config(const PipelineConfig& c) {
    auto require_file = [](const std::filesystem::path& p, const char* key) {
        if (p.empty()) throw Error(ErrorCode::InvalidConfig, std::string(key) + " is not set");
        if (!std::filesystem::is_regular_file(p)) {
            throw Error(ErrorCode::InvalidConfig, std::string(key) + ": " + p.string() + " does not exist");
        }
    };
    require_file(c.customers, "customers");
    require_file(c.ratings, "ratings");
    if (c.features.empty()) throw Error(ErrorCode::InvalidConfig, "features list is empty");
    if (c.loyal_threshold >= c.risky_threshold) {
        throw Error(ErrorCode::ThresholdOrder, "loyal_threshold must be below risky_threshold");
    }
    if (c.risky_threshold > 1.0 || c.loyal_threshold < 0.0) {
        throw Error(ErrorCode::InvalidConfig, "thresholds must lie in [0, 1]");
    }
    if (c.k == 0 || c.restarts == 0) throw Error(ErrorCode::InvalidConfig, "k and restarts must be >= 1");
    if (c.min_cluster_fraction < 0.0 || c.min_cluster_fraction > 1.0) {
        throw Error(ErrorCode::InvalidConfig, "min_cluster_fraction must lie in [0, 1]");
    }
    (void)resolve_output_dir(c);
}

std::string format_config(const PipelineConfig& c) {
    std::ostringstream out;
    auto real = [](double v) { return csv::format_double(v); };
    std::string features;
    for (std::size_t i = 0; i < c.features.size(); ++i) features += (i ? "," : "") + c.features[i];
    if (!c.customers.empty()) out << "customers = " << c.customers.string() << '\n';
    if (!c.ratings.empty()) out << "ratings = " << c.ratings.string() << '\n';
    if (!c.output_dir.empty()) out << "output_dir = " << c.output_dir.string() << '\n';
    out << "features = " << features << '\n'
        << "l2_lambda = " << real(c.fit.l2_lambda) << '\n'
        << "max_iters = " << c.fit.max_iters << '\n'
        << "tolerance = " << real(c.fit.tolerance) << '\n'
        << "learning_rate = " << real(c.fit.learning_rate) << '\n'
        << "risky_threshold = " << real(c.risky_threshold) << '\n'
        << "loyal_threshold = " << real(c.loyal_threshold) << '\n'
        << "k = " << c.k << '\n'
        << "restarts = " << c.restarts << '\n'
        << "seed = " << c.seed << '\n'
        << "cluster_tol = " << real(c.kmeans.tol) << '\n'
        << "cluster_max_iters = " << c.kmeans.max_iters << '\n'
        << "min_cluster_fraction = " << real(c.min_cluster_fraction) << '\n'
        << "sweep_max_k = " << c.sweep_max_k << '\n'
        << "top_k = " << c.retention.top_k << '\n'
        << "top_n = " << c.retention.top_n << '\n'
        << "like_threshold = " << real(c.retention.like_threshold) << '\n'
        << "min_co_rated = " << c.retention.min_co_rated << '\n'
        << "record_timings = " << (c.record_timings ? "true" : "false") << '\n';
    return out.str();
}

}  // namespace retenta
