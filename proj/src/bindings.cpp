#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "retenta/churn_model.hpp"
#include "retenta/cli.hpp"
#include "retenta/config.hpp"
#include "retenta/dataset.hpp"
#include "retenta/error.hpp"
#include "retenta/pipeline.hpp"
#include "retenta/profiler.hpp"
#include "retenta/retention.hpp"
#include "retenta/synthetic.hpp"

#include <sstream>

namespace py = pybind11;
using namespace retenta;

namespace {

FeatureMatrix matrix_from_array(py::array_t<double, py::array::c_style | py::array::forcecast> a) {
    if (a.ndim() != 2) throw py::value_error("points must be a 2-D array");
    FeatureMatrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
    std::copy(a.data(), a.data() + a.size(), m.values.begin());
    for (std::size_t r = 0; r < m.n_rows; ++r) m.row_ids[r] = std::to_string(r);
    for (std::size_t c = 0; c < m.n_cols; ++c) m.column_names[c] = "x" + std::to_string(c);
    return m;
}

py::dict clustering_dict(const Clustering& c) {
    py::dict d;
    d["k"] = c.k;
    d["wcss"] = c.wcss;
    d["assignments"] = c.assignments;
    py::array_t<double> centroids({c.k, c.dims});
    std::copy(c.centroids.begin(), c.centroids.end(), centroids.mutable_data());
    d["centroids"] = centroids;
    d["iterations"] = c.iterations_run;
    d["converged"] = c.converged;
    d["wcss_trace"] = c.wcss_trace;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Churn scoring, k-means customer profiling and loyalty-restricted collaborative filtering";

    PYBIND11_CONSTINIT static py::gil_safe_call_once_and_store<py::object> error_type;
    error_type.call_once_and_store_result(
        [&]() { return py::exception<Error>(m, "RetentaError", PyExc_ValueError); });
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            const py::object& type = error_type.get_stored();
            py::object exc = type(e.what());
            exc.attr("code") = std::string(error_code_name(e.code()));
            PyErr_SetObject(type.ptr(), exc.ptr());
        }
    });

    py::class_<CustomerTable>(m, "CustomerTable")
        .def("__len__", &CustomerTable::size)
        .def_property_readonly("customer_ids", [](const CustomerTable& t) {
            std::vector<std::string> ids;
            for (const auto& r : t.rows) ids.push_back(r.customer_id);
            return ids;
        })
        .def_property_readonly("churn_labels", [](const CustomerTable& t) {
            std::vector<std::optional<int>> out;
            for (const auto& r : t.rows) out.push_back(r.churn_label);
            return out;
        });

    py::class_<RatingsMatrix>(m, "RatingsMatrix")
        .def(py::init<>())
        .def("add", &RatingsMatrix::add, py::arg("customer_id"), py::arg("offer_id"), py::arg("rating"))
        .def("of", &RatingsMatrix::of, py::arg("customer_id"))
        .def_property_readonly("catalog", &RatingsMatrix::catalog)
        .def("__len__", &RatingsMatrix::entry_count);

    m.def("load_customers", [](const std::filesystem::path& p) { return load_customers(p); }, py::arg("path"));
    m.def("load_ratings", &load_ratings, py::arg("path"));

    m.def(
        "generate_synthetic",
        [](const std::filesystem::path& out_dir, std::size_t population, double churn_fraction,
           std::size_t clusters, std::size_t offers, double noise, std::uint64_t seed) {
            SyntheticConfig c;
            c.population = population;
            c.churn_fraction = churn_fraction;
            c.clusters = clusters;
            c.offers = offers;
            c.noise = noise;
            write_bundle(generate_synthetic(c, seed), out_dir);
        },
        py::arg("out_dir"), py::arg("population") = 1000, py::arg("churn_fraction") = 0.3,
        py::arg("clusters") = 3, py::arg("offers") = 24, py::arg("noise") = 0.5, py::arg("seed") = 7,
        "Writes customers.csv, ratings.csv and ground_truth.json into out_dir.");

    m.def("sigmoid", &sigmoid, py::arg("z"));

    py::class_<ChurnModel>(m, "ChurnModel")
        .def_readonly("alpha", &ChurnModel::alpha)
        .def_readonly("beta", &ChurnModel::beta)
        .def_readonly("feature_columns", &ChurnModel::feature_columns)
        .def_readonly("l2_lambda", &ChurnModel::l2_lambda)
        .def_property_readonly("iterations", [](const ChurnModel& c) { return c.training.iterations; })
        .def_property_readonly("final_loss", [](const ChurnModel& c) { return c.training.final_loss; })
        .def("save", [](const ChurnModel& c, const std::filesystem::path& p) { write_model(c, p); });

    m.def(
        "train",
        [](const CustomerTable& t, std::optional<std::vector<std::string>> features, double l2_lambda,
           std::size_t max_iters, double tolerance) {
            FitOptions o;
            o.l2_lambda = l2_lambda;
            o.max_iters = max_iters;
            o.tolerance = tolerance;
            return train(t, features.value_or(default_feature_spec()), o);
        },
        py::arg("table"), py::arg("features") = py::none(), py::arg("l2_lambda") = 1e-4,
        py::arg("max_iters") = 500, py::arg("tolerance") = 1e-6);
    m.def("load_model", &read_model, py::arg("path"));

    m.def(
        "score",
        [](const ChurnModel& model, const CustomerTable& t) {
            std::vector<std::pair<std::string, double>> out;
            for (const auto& s : score_all(model, t)) out.emplace_back(s.customer_id, s.churn_probability);
            return out;
        },
        py::arg("model"), py::arg("table"), "List of (customer_id, churn_probability) in table order.");

    m.def(
        "segment",
        [](const std::vector<std::pair<std::string, double>>& scores, double risky, double loyal) {
            std::vector<RiskScore> s;
            for (const auto& [id, p] : scores) s.push_back({id, p});
            const auto seg = segment(s, risky, loyal);
            return py::make_tuple(seg.risky, seg.loyal);
        },
        py::arg("scores"), py::arg("risky_threshold") = 0.5, py::arg("loyal_threshold") = 0.1,
        "Returns (risky, loyal) id sets.");

    m.def(
        "kmeans",
        [](py::array_t<double, py::array::c_style | py::array::forcecast> points, std::size_t k,
           std::uint64_t seed, std::size_t restarts) {
            return clustering_dict(kmeans_best_of(matrix_from_array(points), k, restarts, seed));
        },
        py::arg("points"), py::arg("k"), py::arg("seed") = 0, py::arg("restarts") = 1);
    m.def(
        "agglomerative_cluster",
        [](py::array_t<double, py::array::c_style | py::array::forcecast> points, std::size_t k) {
            return clustering_dict(agglomerative_cluster(matrix_from_array(points), k));
        },
        py::arg("points"), py::arg("k"));

    m.def(
        "cosine_similarity",
        [](const OfferRatings& a, const OfferRatings& b) -> std::optional<std::pair<double, std::size_t>> {
            auto s = cosine_similarity(a, b);
            if (!s) return std::nullopt;
            return std::make_pair(s->value, s->co_rated_count);
        },
        py::arg("ratings_i"), py::arg("ratings_j"),
        "Cosine over co-rated offers as (value, co_rated_count), or None when undefined.");

    m.def(
        "recommend",
        [](const std::vector<std::pair<std::string, double>>& scores, const RatingsMatrix& ratings,
           double risky, double loyal, std::size_t top_k, std::size_t top_n, double like_threshold,
           std::size_t min_co_rated) {
            std::vector<RiskScore> s;
            for (const auto& [id, p] : scores) s.push_back({id, p});
            RetentionParams params{top_k, top_n, like_threshold, min_co_rated};
            const auto recs = recommend_all(segment(s, risky, loyal), ratings, params);
            py::dict out;
            for (const auto& [id, list] : recs) {
                py::list items;
                for (const auto& it : list.items) {
                    items.append(py::make_tuple(it.offer_id, it.score, it.supporters));
                }
                out[py::str(id)] = items;
            }
            return out;
        },
        py::arg("scores"), py::arg("ratings"), py::arg("risky_threshold") = 0.5,
        py::arg("loyal_threshold") = 0.1, py::arg("top_k") = 10, py::arg("top_n") = 5,
        py::arg("like_threshold") = 3.5, py::arg("min_co_rated") = 2,
        "Risky customer id -> [(offer_id, score, supporters)].");

    m.def(
        "run_pipeline",
        [](const std::filesystem::path& config_path, std::optional<std::filesystem::path> output_dir) {
            PipelineConfig config = load_config(config_path);
            if (output_dir) config.output_dir = *output_dir;
            const auto r = run_pipeline(config);
            py::dict d;
            d["customers"] = r.scores.size();
            d["risky"] = r.segmentation.risky.size();
            d["loyal"] = r.segmentation.loyal.size();
            d["k"] = r.clustering.k;
            d["wcss"] = r.clustering.wcss;
            d["served"] = r.served;
            d["cold_start"] = r.cold_start;
            d["output_dir"] = r.output_dir;
            return d;
        },
        py::arg("config_path"), py::arg("output_dir") = py::none());

    m.def(
        "cli",
        [](std::vector<std::string> args) {
            args.insert(args.begin(), "retenta");
            std::ostringstream out, err;
            const int code = cli_dispatch(args, out, err);
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Runs a retenta subcommand; returns (exit_code, stdout, stderr).");

#ifdef RETENTA_VERSION
    m.attr("__version__") = RETENTA_VERSION;
#else
    m.attr("__version__") = "dev";
#endif
}
