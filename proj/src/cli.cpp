#include "retenta/cli.hpp"

#include <chrono>
#include <fstream>
#include <map>

#include <CLI11.hpp>

#include "retenta/config.hpp"
#include "retenta/csv.hpp"
#include "retenta/error.hpp"
#include "retenta/pipeline.hpp"
#include "retenta/synthetic.hpp"

namespace retenta {

namespace {

struct FlagSpec {
    const char* key;
    const char* names;
    const char* help;
};

constexpr FlagSpec kFlags[] = {
    {"customers", "--customers", "customers.csv path"},
    {"ratings", "--ratings", "ratings.csv path"},
    {"model", "--model", "model.json path"},
    {"scores", "--scores", "scores.csv path"},
    {"output_dir", "--out,--output-dir", "output directory (fallback: RETENTA_OUTPUT_DIR)"},
    {"features", "--features", "comma-separated feature columns"},
    {"l2_lambda", "--l2-lambda,--l2", "L2 penalty on coefficients"},
    {"max_iters", "--max-iters", "gradient descent iteration cap"},
    {"tolerance", "--tolerance", "gradient infinity-norm stop tolerance"},
    {"learning_rate", "--learning-rate", "initial line-search step"},
    {"risky_threshold", "--risky,--risky-threshold", "churn probability at or above which a customer is risky"},
    {"loyal_threshold", "--loyal,--loyal-threshold", "churn probability at or below which a customer is loyal"},
    {"k", "--k", "number of clusters"},
    {"restarts", "--restarts", "k-means restarts"},
    {"seed", "--seed", "random seed"},
    {"cluster_tol", "--cluster-tol", "k-means centroid displacement tolerance"},
    {"cluster_max_iters", "--cluster-max-iters", "k-means iteration cap"},
    {"min_cluster_fraction", "--min-cluster-fraction", "flag clusters smaller than this share"},
    {"sweep_max_k", "--sweep-max-k", "largest k in the report's wcss sweep (0 = off)"},
    {"top_k", "--top-k", "loyal neighbors per risky customer"},
    {"top_n", "--top-n", "offers per risky customer"},
    {"like_threshold", "--like-threshold", "rating counted as a like"},
    {"min_co_rated", "--min-co-rated", "minimum co-rated offers for a neighbor"},
    {"record_timings", "--record-timings", "write stage wall times into result.json"},
};

const FlagSpec& flag(const std::string& key) {
    for (const auto& f : kFlags) {
        if (key == f.key) return f;
    }
    throw std::logic_error("no flag for key " + key);
}

// Options of one subcommand, collected as text and applied over the config.
class ConfigOptions {
public:
    ConfigOptions(CLI::App* app, const std::vector<std::string>& keys) {
        app->add_option("--config", config_path_, "key = value config file");
        for (const auto& key : keys) {
            const auto& f = flag(key);
            options_[key] = app->add_option(f.names, values_[key], f.help);
        }
    }

    PipelineConfig build() const {
        PipelineConfig config;
        if (!config_path_.empty()) merge_config_file(config, config_path_);
        for (const auto& [key, opt] : options_) {
            if (opt->count() > 0) apply_config_value(config, key, values_.at(key));
        }
        return config;
    }

private:
    std::string config_path_;
    std::map<std::string, std::string> values_;
    std::map<std::string, CLI::Option*> options_;
};

std::filesystem::path require(const std::filesystem::path& p, const char* what) {
    if (p.empty()) throw Error(ErrorCode::InvalidConfig, std::string("--") + what + " is required");
    if (!std::filesystem::exists(p)) {
        throw Error(ErrorCode::InvalidConfig, std::string(what) + ": " + p.string() + " does not exist");
    }
    return p;
}

std::filesystem::path prepare_output(const PipelineConfig& config) {
    auto dir = resolve_output_dir(config);
    std::filesystem::create_directories(dir);
    return dir;
}

void print_timings(const PipelineResult& r, std::ostream& err) {
    for (const auto& s : r.stages) err << "  " << s.name << ": " << s.wall_ms << " ms\n";
}

}  // namespace

ClusteringBench bench_clustering(std::size_t n, std::size_t d, std::size_t k, std::uint64_t seed,
                                 std::size_t restarts) {
    const auto blobs = generate_blobs(n, d, k, seed);
    using clock = std::chrono::steady_clock;
    ClusteringBench b;
    auto t0 = clock::now();
    const auto km = kmeans_best_of(blobs.points, k, restarts, seed);
    auto t1 = clock::now();
    const auto ag = agglomerative_cluster(blobs.points, k);
    auto t2 = clock::now();
    b.kmeans_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    b.agglomerative_ms = std::chrono::duration<double, std::milli>(t2 - t1).count();
    b.kmeans_wcss = km.wcss;
    b.agglomerative_wcss = ag.wcss;
    return b;
}

int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Churn scoring, customer profiling and retention offers", "retenta"};
    app.require_subcommand(1);

    const std::vector<std::string> fit_keys = {"customers",  "features",      "l2_lambda",
                                               "max_iters",  "tolerance",     "learning_rate",
                                               "output_dir"};
    const std::vector<std::string> cluster_keys = {
        "customers",   "model",      "scores", "k", "restarts", "seed", "cluster_tol",
        "cluster_max_iters", "min_cluster_fraction", "sweep_max_k", "output_dir"};
    const std::vector<std::string> recommend_keys = {"scores", "ratings", "risky_threshold",
                                                     "loyal_threshold", "top_k", "top_n",
                                                     "like_threshold", "min_co_rated", "output_dir"};
    std::vector<std::string> all_keys;
    for (const auto& f : kFlags) {
        if (std::string(f.key) != "model" && std::string(f.key) != "scores") all_keys.emplace_back(f.key);
    }

    // synth
    auto* synth = app.add_subcommand("synth", "generate a seeded synthetic bundle");
    SyntheticConfig sc;
    std::uint64_t synth_seed = 7;
    std::string synth_out;
    synth->add_option("--out", synth_out, "bundle directory (fallback: RETENTA_OUTPUT_DIR)");
    synth->add_option("--n", sc.population, "population size");
    synth->add_option("--churn-fraction", sc.churn_fraction, "expected churn rate");
    synth->add_option("--clusters", sc.clusters, "planted blobs");
    synth->add_option("--offers", sc.offers, "offer catalog size");
    synth->add_option("--noise", sc.noise, "label noise (0 = deterministic)");
    synth->add_option("--taste-groups", sc.taste_groups, "planted taste groups");
    synth->add_option("--ratings-per-customer", sc.ratings_per_customer, "ratings per customer");
    synth->add_option("--rating-noise", sc.rating_noise, "rating noise sd");
    synth->add_option("--seed", synth_seed, "random seed");

    auto* train_cmd = app.add_subcommand("train", "fit the churn model -> model.json");
    ConfigOptions train_opts(train_cmd, fit_keys);

    auto* score_cmd = app.add_subcommand("score", "score customers -> scores.csv");
    ConfigOptions score_opts(score_cmd, {"customers", "model", "output_dir"});

    auto* segment_cmd = app.add_subcommand("segment", "split scores into risky/loyal -> segments.csv");
    ConfigOptions segment_opts(segment_cmd, {"scores", "risky_threshold", "loyal_threshold", "output_dir"});

    auto* cluster_cmd = app.add_subcommand("cluster", "k-means profiling -> clusters.csv, cluster_report.json");
    ConfigOptions cluster_opts(cluster_cmd, cluster_keys);

    auto* recommend_cmd = app.add_subcommand("recommend", "retention offers -> recommendations.json");
    ConfigOptions recommend_opts(recommend_cmd, recommend_keys);

    auto* pipeline_cmd = app.add_subcommand("pipeline", "run every stage and write all reports");
    ConfigOptions pipeline_opts(pipeline_cmd, all_keys);

    auto* bench_cmd = app.add_subcommand("bench-clustering", "time k-means against single linkage");
    std::size_t bench_n = 5000, bench_d = 8, bench_k = 5, bench_restarts = 10;
    std::uint64_t bench_seed = 1;
    bench_cmd->add_option("--n", bench_n, "points");
    bench_cmd->add_option("--d", bench_d, "dimensions");
    bench_cmd->add_option("--k", bench_k, "clusters");
    bench_cmd->add_option("--seed", bench_seed, "random seed");
    bench_cmd->add_option("--restarts", bench_restarts, "k-means restarts");

    std::vector<std::string> argv_tail(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
    std::reverse(argv_tail.begin(), argv_tail.end());
    try {
        app.parse(argv_tail);
    } catch (const CLI::CallForHelp&) {
        out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kExitValidation;
    }

    try {
        if (synth->parsed()) {
            PipelineConfig tmp;
            tmp.output_dir = synth_out;
            const auto dir = prepare_output(tmp);
            const auto bundle = generate_synthetic(sc, synth_seed);
            write_bundle(bundle, dir);
            PipelineConfig run;
            run.customers = "customers.csv";
            run.ratings = "ratings.csv";
            run.output_dir = "out";
            run.k = sc.clusters;
            run.seed = synth_seed;
            std::ofstream cfg(dir / "run.cfg", std::ios::binary);
            cfg << "# generated by retenta synth; relative paths resolve against this file\n"
                << format_config(run);
            out << "wrote " << bundle.customers.size() << " customers, " << bundle.ratings.entry_count()
                << " ratings to " << dir.string() << '\n';
        } else if (train_cmd->parsed()) {
            const auto config = train_opts.build();
            const auto table = load_customers(require(config.customers, "customers"));
            const auto model = train(table, config.features, config.fit);
            const auto dir = prepare_output(config);
            write_model(model, dir / "model.json");
            out << "model: " << model.beta.size() << " coefficients, " << model.training.iterations
                << " iterations (" << stop_reason_name(model.training.stop)
                << "), loss " << csv::format_fixed6(model.training.final_loss) << '\n';
        } else if (score_cmd->parsed()) {
            const auto config = score_opts.build();
            const auto model = read_model(require(config.model, "model"));
            const auto table = load_customers(require(config.customers, "customers"));
            const auto scores = score_all(model, table);
            const auto dir = prepare_output(config);
            write_scores(scores, dir / "scores.csv");
            out << "scored " << scores.size() << " customers\n";
        } else if (segment_cmd->parsed()) {
            const auto config = segment_opts.build();
            // Thresholds are checked before touching inputs.
            segment({}, config.risky_threshold, config.loyal_threshold);
            const auto scores = read_scores(require(config.scores, "scores"));
            const auto seg = segment(scores, config.risky_threshold, config.loyal_threshold);
            const auto dir = prepare_output(config);
            write_segmentation(seg, scores, dir / "segments.csv");
            out << "risky " << seg.risky.size() << ", loyal " << seg.loyal.size() << ", neither "
                << seg.neither() << '\n';
        } else if (cluster_cmd->parsed()) {
            const auto config = cluster_opts.build();
            const auto model = read_model(require(config.model, "model"));
            const auto table = load_customers(require(config.customers, "customers"));
            const auto scores = read_scores(require(config.scores, "scores"));
            const auto [clustering, report] = cluster_customers(config, model, table, scores);
            const auto dir = prepare_output(config);
            write_clusters(clustering, dir / "clusters.csv");
            write_cluster_report(report, dir / "cluster_report.json");
            out << "k = " << clustering.k << ", wcss " << csv::format_fixed6(clustering.wcss) << '\n';
        } else if (recommend_cmd->parsed()) {
            const auto config = recommend_opts.build();
            segment({}, config.risky_threshold, config.loyal_threshold);
            const auto scores = read_scores(require(config.scores, "scores"));
            const auto ratings = load_ratings(require(config.ratings, "ratings"));
            const auto seg = segment(scores, config.risky_threshold, config.loyal_threshold);
            const auto recs = recommend_all(seg, ratings, config.retention);
            const auto dir = prepare_output(config);
            write_recommendations(recs, dir / "recommendations.json");
            std::size_t cold = 0;
            for (const auto& [id, list] : recs) cold += list.cold_start ? 1 : 0;
            out << "recommendations for " << recs.size() << " risky customers (" << cold
                << " cold start)\n";
        } else if (pipeline_cmd->parsed()) {
            const auto config = pipeline_opts.build();
            const auto result = run_pipeline(config);
            out << "scored " << result.scores.size() << " customers; risky "
                << result.segmentation.risky.size() << ", loyal " << result.segmentation.loyal.size()
                << "; k = " << result.clustering.k << " wcss " << csv::format_fixed6(result.clustering.wcss)
                << "; served " << result.served << ", cold start " << result.cold_start << '\n'
                << "outputs in " << result.output_dir.string() << '\n';
            err << "stage wall times:\n";
            print_timings(result, err);
        } else if (bench_cmd->parsed()) {
            const auto b = bench_clustering(bench_n, bench_d, bench_k, bench_seed, bench_restarts);
            char line[256];
            std::snprintf(line, sizeof line, "kmeans_best_of(restarts=%zu) wall_ms=%.3f wcss=%.6f\n",
                          bench_restarts, b.kmeans_ms, b.kmeans_wcss);
            out << line;
            std::snprintf(line, sizeof line, "agglomerative_single_linkage wall_ms=%.3f wcss=%.6f\n",
                          b.agglomerative_ms, b.agglomerative_wcss);
            out << line;
            out << "kmeans_faster=" << (b.kmeans_ms < b.agglomerative_ms ? "yes" : "no") << '\n';
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return is_validation_error(e.code()) ? kExitValidation : kExitRuntime;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitOk;
}

}  // namespace retenta
