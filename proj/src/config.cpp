#include "imbrisk/config.hpp"

#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "imbrisk/errors.hpp"
#include "imbrisk/rng.hpp"

namespace imbrisk {
namespace {

using nlohmann::json;

void expect_keys(const json& j, const std::string& where,
                 const std::set<std::string>& allowed) {
    for (const auto& [key, value] : j.items()) {
        if (!allowed.contains(key)) {
            throw ConfigError("config: unknown field '" + where + key + "'");
        }
    }
}

double require_fraction(const json& j, const std::string& field, bool strict = true) {
    if (!j.is_number()) throw ConfigError("config: '" + field + "' must be a number");
    const double v = j.get<double>();
    if (strict ? !(v > 0.0 && v < 1.0) : !(v >= 0.0 && v <= 1.0)) {
        throw ConfigError("config: '" + field + "' must lie in (0, 1)");
    }
    return v;
}

std::size_t require_count(const json& j, const std::string& field, std::size_t min_value) {
    if (!j.is_number_unsigned()) {
        throw ConfigError("config: '" + field + "' must be a non-negative integer");
    }
    const auto v = j.get<std::size_t>();
    if (v < min_value) {
        throw ConfigError("config: '" + field + "' must be at least " +
                          std::to_string(min_value));
    }
    return v;
}

double require_positive(const json& j, const std::string& field) {
    if (!j.is_number()) throw ConfigError("config: '" + field + "' must be a number");
    const double v = j.get<double>();
    if (!(v > 0.0)) throw ConfigError("config: '" + field + "' must be positive");
    return v;
}

}  // namespace

RunConfig parse_config(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config: top level must be an object");
    expect_keys(j, "",
                {"seed", "data", "folds", "ratios", "methods", "classifiers", "hyper",
                 "pca_ratio", "workers", "output_dir"});

    RunConfig cfg;
    if (!j.contains("seed")) {
        throw ConfigError("config: 'seed' is required (runs never seed from the clock)");
    }
    if (!j.at("seed").is_number_unsigned()) {
        throw ConfigError("config: 'seed' must be a non-negative integer");
    }
    cfg.seed = j.at("seed").get<std::uint64_t>();

    if (!j.contains("data")) throw ConfigError("config: 'data' is required");
    const auto& data = j.at("data");
    expect_keys(data, "data.", {"csv", "synthetic"});
    if (data.contains("csv") == data.contains("synthetic")) {
        throw ConfigError("config: 'data' needs exactly one of 'csv' or 'synthetic'");
    }
    if (data.contains("csv")) {
        const auto& c = data.at("csv");
        expect_keys(c, "data.csv.", {"path", "target_column", "missing_token"});
        CsvSpec spec;
        if (!c.contains("path")) throw ConfigError("config: 'data.csv.path' is required");
        spec.path = c.at("path").get<std::string>();
        if (c.contains("target_column")) {
            spec.target_column = c.at("target_column").get<std::string>();
        }
        if (c.contains("missing_token")) {
            spec.missing_token = c.at("missing_token").get<std::string>();
        }
        cfg.csv = spec;
    } else {
        const auto& s = data.at("synthetic");
        expect_keys(s, "data.synthetic.", {"n", "d", "positive_rate", "separation"});
        SyntheticSpec spec;
        if (s.contains("n")) spec.n = require_count(s.at("n"), "data.synthetic.n", 20);
        if (s.contains("d")) spec.d = require_count(s.at("d"), "data.synthetic.d", 2);
        if (s.contains("positive_rate")) {
            spec.positive_rate = require_fraction(s.at("positive_rate"),
                                                  "data.synthetic.positive_rate");
        }
        if (s.contains("separation")) {
            spec.separation = s.at("separation").get<double>();
        }
        cfg.synthetic = spec;
    }

    if (j.contains("folds")) cfg.folds = require_count(j.at("folds"), "folds", 2);

    if (j.contains("ratios")) {
        if (!j.at("ratios").is_array() || j.at("ratios").empty()) {
            throw ConfigError("config: 'ratios' must be a non-empty array");
        }
        cfg.ratios.clear();
        for (const auto& r : j.at("ratios")) {
            cfg.ratios.push_back(require_fraction(r, "ratios[]"));
        }
    }

    if (j.contains("methods")) {
        if (!j.at("methods").is_array() || j.at("methods").empty()) {
            throw ConfigError("config: 'methods' must be a non-empty array");
        }
        cfg.methods.clear();
        for (const auto& m : j.at("methods")) {
            const Method method = parse_method(m.get<std::string>());
            if (method == Method::None) continue;  // the baseline is always included
            cfg.methods.push_back(method);
        }
        if (cfg.methods.empty()) {
            throw ConfigError("config: 'methods' must name at least one resampler");
        }
    }

    if (j.contains("classifiers")) {
        if (!j.at("classifiers").is_array() || j.at("classifiers").empty()) {
            throw ConfigError("config: 'classifiers' must be a non-empty array");
        }
        cfg.classifiers.clear();
        for (const auto& c : j.at("classifiers")) {
            const ClassifierKind kind = parse_classifier(c.get<std::string>());
            if (kind == ClassifierKind::Bagging || kind == ClassifierKind::Boosting) {
                throw ConfigError(
                    "config: 'classifiers' lists base classifiers only; "
                    "ensembles run in the dedicated stage");
            }
            cfg.classifiers.push_back(kind);
        }
    }

    if (j.contains("hyper")) {
        const auto& h = j.at("hyper");
        expect_keys(h, "hyper.",
                    {"lambda_grid", "tree", "boosting_tree", "bagging_estimators",
                     "boosting_estimators", "smote_k", "kmeans_max_iter", "kmeans_tol",
                     "lr_max_iter", "lr_tol", "missing_threshold", "metric_threshold"});
        auto& hp = cfg.hyper;
        if (h.contains("lambda_grid")) {
            if (!h.at("lambda_grid").is_array() || h.at("lambda_grid").empty()) {
                throw ConfigError("config: 'hyper.lambda_grid' must be a non-empty array");
            }
            hp.lambda_grid.clear();
            for (const auto& l : h.at("lambda_grid")) {
                const double v = l.get<double>();
                if (v < 0.0) {
                    throw ConfigError("config: 'hyper.lambda_grid' must be non-negative");
                }
                hp.lambda_grid.push_back(v);
            }
        }
        const auto read_tree = [&](const json& t, const std::string& where, TreeParams& p) {
            expect_keys(t, where, {"max_depth", "min_samples_leaf"});
            if (t.contains("max_depth")) {
                p.max_depth =
                    static_cast<int>(require_count(t.at("max_depth"), where + "max_depth", 0));
            }
            if (t.contains("min_samples_leaf")) {
                p.min_samples_leaf = static_cast<int>(
                    require_count(t.at("min_samples_leaf"), where + "min_samples_leaf", 1));
            }
        };
        if (h.contains("tree")) read_tree(h.at("tree"), "hyper.tree.", hp.tree);
        if (h.contains("boosting_tree")) {
            read_tree(h.at("boosting_tree"), "hyper.boosting_tree.", hp.boost_tree);
        }
        if (h.contains("bagging_estimators")) {
            hp.bagging_estimators =
                require_count(h.at("bagging_estimators"), "hyper.bagging_estimators", 1);
        }
        if (h.contains("boosting_estimators")) {
            hp.boosting_estimators =
                require_count(h.at("boosting_estimators"), "hyper.boosting_estimators", 1);
        }
        if (h.contains("smote_k")) {
            hp.smote_k = static_cast<int>(require_count(h.at("smote_k"), "hyper.smote_k", 1));
        }
        if (h.contains("kmeans_max_iter")) {
            hp.kmeans_max_iter = static_cast<int>(
                require_count(h.at("kmeans_max_iter"), "hyper.kmeans_max_iter", 1));
        }
        if (h.contains("kmeans_tol")) {
            hp.kmeans_tol = require_positive(h.at("kmeans_tol"), "hyper.kmeans_tol");
        }
        if (h.contains("lr_max_iter")) {
            hp.lr_max_iter =
                static_cast<int>(require_count(h.at("lr_max_iter"), "hyper.lr_max_iter", 1));
        }
        if (h.contains("lr_tol")) {
            hp.lr_tol = require_positive(h.at("lr_tol"), "hyper.lr_tol");
        }
        if (h.contains("missing_threshold")) {
            hp.missing_threshold =
                require_fraction(h.at("missing_threshold"), "hyper.missing_threshold", false);
        }
        if (h.contains("metric_threshold")) {
            hp.metric_threshold =
                require_fraction(h.at("metric_threshold"), "hyper.metric_threshold", false);
        }
    }

    if (j.contains("pca_ratio")) {
        cfg.pca_ratio = require_fraction(j.at("pca_ratio"), "pca_ratio");
    }
    if (j.contains("workers")) {
        if (!j.at("workers").is_number_unsigned()) {
            throw ConfigError("config: 'workers' must be a non-negative integer");
        }
        cfg.workers = j.at("workers").get<std::size_t>();
    }
    if (j.contains("output_dir")) {
        cfg.output_dir = j.at("output_dir").get<std::string>();
        if (cfg.output_dir.empty()) throw ConfigError("config: 'output_dir' must not be empty");
    }
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config file '" + path + "': " + e.what());
    }
    return parse_config(j);
}

nlohmann::ordered_json config_echo(const RunConfig& cfg) {
    nlohmann::ordered_json j;
    j["seed"] = cfg.seed;
    if (cfg.csv) {
        j["data"]["csv"] = {{"path", cfg.csv->path},
                            {"target_column", cfg.csv->target_column},
                            {"missing_token", cfg.csv->missing_token}};
    } else if (cfg.synthetic) {
        j["data"]["synthetic"] = {{"n", cfg.synthetic->n},
                                  {"d", cfg.synthetic->d},
                                  {"positive_rate", cfg.synthetic->positive_rate},
                                  {"separation", cfg.synthetic->separation}};
    }
    j["folds"] = cfg.folds;
    j["ratios"] = cfg.ratios;
    auto methods = nlohmann::ordered_json::array();
    for (Method m : cfg.methods) methods.push_back(method_name(m));
    j["methods"] = methods;
    auto classifiers = nlohmann::ordered_json::array();
    for (ClassifierKind c : cfg.classifiers) classifiers.push_back(classifier_name(c));
    j["classifiers"] = classifiers;
    j["hyper"] = {{"lambda_grid", cfg.hyper.lambda_grid},
                  {"tree",
                   {{"max_depth", cfg.hyper.tree.max_depth},
                    {"min_samples_leaf", cfg.hyper.tree.min_samples_leaf}}},
                  {"boosting_tree",
                   {{"max_depth", cfg.hyper.boost_tree.max_depth},
                    {"min_samples_leaf", cfg.hyper.boost_tree.min_samples_leaf}}},
                  {"bagging_estimators", cfg.hyper.bagging_estimators},
                  {"boosting_estimators", cfg.hyper.boosting_estimators},
                  {"smote_k", cfg.hyper.smote_k},
                  {"kmeans_max_iter", cfg.hyper.kmeans_max_iter},
                  {"kmeans_tol", cfg.hyper.kmeans_tol},
                  {"lr_max_iter", cfg.hyper.lr_max_iter},
                  {"lr_tol", cfg.hyper.lr_tol},
                  {"missing_threshold", cfg.hyper.missing_threshold},
                  {"metric_threshold", cfg.hyper.metric_threshold}};
    j["pca_ratio"] = cfg.pca_ratio;
    return j;
}

Dataset load_config_dataset(const RunConfig& cfg) {
    if (cfg.csv) {
        return load_csv(cfg.csv->path, cfg.csv->target_column, cfg.csv->missing_token);
    }
    const auto& s = *cfg.synthetic;
    return generate_synthetic(s.n, s.d, s.positive_rate, s.separation,
                              derive_seed(cfg.seed, "dataset"));
}

}  // namespace imbrisk
