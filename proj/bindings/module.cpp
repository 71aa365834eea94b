#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "imbrisk/config.hpp"
#include "imbrisk/dataset.hpp"
#include "imbrisk/ensemble.hpp"
#include "imbrisk/errors.hpp"
#include "imbrisk/experiment.hpp"
#include "imbrisk/linear.hpp"
#include "imbrisk/metrics.hpp"
#include "imbrisk/model_io.hpp"
#include "imbrisk/preprocess.hpp"
#include "imbrisk/report_io.hpp"
#include "imbrisk/resample.hpp"
#include "imbrisk/tree.hpp"

namespace py = pybind11;
using namespace imbrisk;

namespace {

Matrix matrix_from_numpy(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 2) throw DataError("expected a 2-D array");
    Matrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
    std::copy(a.data(), a.data() + a.size(), m.storage().begin());
    return m;
}

py::array_t<double> matrix_to_numpy(const Matrix& m) {
    py::array_t<double> out({m.rows(), m.cols()});
    std::copy(m.storage().begin(), m.storage().end(), out.mutable_data());
    return out;
}

Dataset make_dataset(const py::array_t<double, py::array::c_style | py::array::forcecast>& features,
                     const std::vector<int>& labels,
                     std::vector<std::string> feature_names) {
    Dataset ds;
    ds.features = matrix_from_numpy(features);
    ds.labels = labels;
    if (feature_names.empty()) {
        for (std::size_t j = 0; j < ds.features.cols(); ++j) {
            feature_names.push_back("f" + std::to_string(j + 1));
        }
    }
    ds.feature_names = std::move(feature_names);
    check_dataset(ds);
    return ds;
}

ResampleSpec make_spec(const std::string& method, double target_positive, int smote_k,
                       std::uint64_t seed) {
    ResampleSpec spec;
    spec.method = parse_method(method);
    spec.target_positive = target_positive;
    spec.smote_k = smote_k;
    spec.seed = seed;
    return spec;
}

py::dict metricset_dict(const MetricSet& m) {
    py::dict d;
    d["auc"] = m.auc ? py::object(py::float_(*m.auc)) : py::none();
    d["recall"] = m.recall ? py::object(py::float_(*m.recall)) : py::none();
    d["precision"] = m.precision ? py::object(py::float_(*m.precision)) : py::none();
    d["f1"] = m.f1 ? py::object(py::float_(*m.f1)) : py::none();
    d["threshold"] = m.threshold;
    d["tp"] = m.counts.tp;
    d["fp"] = m.counts.fp;
    d["tn"] = m.counts.tn;
    d["fn"] = m.counts.fn;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Imbalanced risk modeling: resampling, classifiers, ensembles, evaluation";

    py::register_exception<DataError>(m, "DataError");
    py::register_exception<ConfigError>(m, "ConfigError");
    py::register_exception<NumericError>(m, "NumericError");

    py::class_<Dataset>(m, "Dataset")
        .def(py::init(&make_dataset), py::arg("features"), py::arg("labels"),
             py::arg("feature_names") = std::vector<std::string>{})
        .def_property_readonly("features",
                               [](const Dataset& ds) { return matrix_to_numpy(ds.features); })
        .def_property_readonly("labels", [](const Dataset& ds) { return ds.labels; })
        .def_property_readonly("feature_names",
                               [](const Dataset& ds) { return ds.feature_names; })
        .def_property_readonly("n_rows", &Dataset::n_rows)
        .def_property_readonly("n_features", &Dataset::n_features)
        .def("positive_rate", [](const Dataset& ds) { return positive_rate(ds); });

    m.def("generate_synthetic", &generate_synthetic, py::arg("n"), py::arg("d"),
          py::arg("positive_rate"), py::arg("separation"), py::arg("seed"));
    m.def("load_csv", &load_csv, py::arg("path"), py::arg("target_column"),
          py::arg("missing_token") = "");
    m.def("save_csv", &save_csv, py::arg("dataset"), py::arg("path"),
          py::arg("target_column") = "RiskInd", py::arg("missing_token") = "");

    py::class_<PreprocessStats>(m, "PreprocessStats")
        .def_readonly("kept_columns", &PreprocessStats::kept_columns)
        .def_readonly("kept_names", &PreprocessStats::kept_names)
        .def_readonly("medians", &PreprocessStats::medians)
        .def_readonly("means", &PreprocessStats::means)
        .def_readonly("stds", &PreprocessStats::stds);

    m.def("fit_preprocess", &fit_preprocess, py::arg("train"),
          py::arg("missing_threshold") = 0.70);
    m.def("apply_preprocess", &apply_preprocess, py::arg("dataset"), py::arg("stats"));

    m.def(
        "resample",
        [](const Dataset& ds, const std::string& method, double target_positive,
           int smote_k, std::uint64_t seed) {
            return resample(ds, make_spec(method, target_positive, smote_k, seed));
        },
        py::arg("dataset"), py::arg("method"), py::arg("target_positive"),
        py::arg("smote_k") = 5, py::arg("seed") = 0);

    py::class_<LinearModel>(m, "LinearModel")
        .def_readonly("intercept", &LinearModel::intercept)
        .def_readonly("coefficients", &LinearModel::coefficients)
        .def_readonly("lambda_", &LinearModel::lambda)
        .def("predict_proba", [](const LinearModel& model, const Dataset& ds) {
            return predict_proba_linear(model, ds.features);
        });

    m.def("train_lr", &train_lr, py::arg("dataset"), py::arg("max_iter") = 5000,
          py::arg("tol") = 1e-6);
    m.def("train_l1lr", &train_l1lr, py::arg("dataset"), py::arg("lambda_"),
          py::arg("max_iter") = 5000, py::arg("tol") = 1e-6);

    py::class_<DecisionTree>(m, "DecisionTree")
        .def_property_readonly("importance",
                               [](const DecisionTree& t) {
                                   return t.gini_reduction_per_feature;
                               })
        .def_property_readonly("n_nodes",
                               [](const DecisionTree& t) { return t.nodes.size(); })
        .def("predict_proba", [](const DecisionTree& t, const Dataset& ds) {
            return tree_predict(t, ds.features);
        });

    m.def(
        "train_tree",
        [](const Dataset& ds, int max_depth, int min_samples_leaf) {
            return train_tree(ds, TreeParams{max_depth, min_samples_leaf});
        },
        py::arg("dataset"), py::arg("max_depth") = 8, py::arg("min_samples_leaf") = 5);

    py::class_<Ensemble>(m, "Ensemble")
        .def_property_readonly("n_members",
                               [](const Ensemble& e) { return e.members.size(); })
        .def_property_readonly("member_weights",
                               [](const Ensemble& e) { return e.member_weights; })
        .def_property_readonly("importance",
                               [](const Ensemble& e) { return ensemble_importance(e); })
        .def("predict_proba", [](const Ensemble& e, const Dataset& ds) {
            return ensemble_scores(e, ds.features);
        });

    m.def(
        "bagging_train",
        [](const Dataset& ds, std::size_t n_estimators, int max_depth,
           int min_samples_leaf, std::uint64_t seed) {
            return bagging_train(ds, n_estimators, TreeParams{max_depth, min_samples_leaf},
                                 seed);
        },
        py::arg("dataset"), py::arg("n_estimators") = 50, py::arg("max_depth") = 8,
        py::arg("min_samples_leaf") = 5, py::arg("seed") = 0);
    m.def(
        "boosting_train",
        [](const Dataset& ds, std::size_t n_estimators, int max_depth,
           int min_samples_leaf, std::uint64_t seed) {
            return boosting_train(ds, n_estimators, TreeParams{max_depth, min_samples_leaf},
                                  seed);
        },
        py::arg("dataset"), py::arg("n_estimators") = 50, py::arg("max_depth") = 3,
        py::arg("min_samples_leaf") = 5, py::arg("seed") = 0);

    m.def(
        "auc",
        [](const std::vector<double>& scores, const std::vector<int>& labels) {
            return auc(scores, labels);
        },
        py::arg("scores"), py::arg("labels"));
    m.def(
        "roc_points",
        [](const std::vector<double>& scores, const std::vector<int>& labels) {
            return roc_points(scores, labels);
        },
        py::arg("scores"), py::arg("labels"));
    m.def(
        "compute_metrics",
        [](const std::vector<double>& scores, const std::vector<int>& labels,
           double threshold) {
            return metricset_dict(compute_metrics(scores, labels, threshold));
        },
        py::arg("scores"), py::arg("labels"), py::arg("threshold") = 0.5);

    m.def("pca2", [](const Dataset& ds) { return matrix_to_numpy(pca2(ds).projections); });

    m.def(
        "stratified_kfold",
        [](const Dataset& ds, std::size_t k, std::uint64_t seed) {
            return stratified_kfold(ds, k, seed).assignments;
        },
        py::arg("dataset"), py::arg("k"), py::arg("seed"));

    m.def(
        "run_experiment",
        [](const std::string& config_path) {
            return run_experiment(load_config(config_path)).report_path.string();
        },
        py::arg("config_path"),
        "Run the five-stage workflow from a config file; returns the report.json path");

    m.attr("__version__") = "0.1.0";
}
