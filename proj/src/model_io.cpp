#include "imbrisk/model_io.hpp"

#include <algorithm>
#include <fstream>

#include <nlohmann/json.hpp>

#include "imbrisk/errors.hpp"

namespace imbrisk {
namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json linear_json(const LinearModel& m) {
    return {{"intercept", m.intercept},
            {"coefficients", m.coefficients},
            {"lambda", m.lambda},
            {"training_log",
             {{"iterations", m.training_log.iterations},
              {"final_objective", m.training_log.final_objective},
              {"converged", m.training_log.converged}}}};
}

LinearModel linear_from_json(const nlohmann::json& j) {
    LinearModel m;
    m.intercept = j.at("intercept").get<double>();
    m.coefficients = j.at("coefficients").get<std::vector<double>>();
    m.lambda = j.at("lambda").get<double>();
    const auto& log = j.at("training_log");
    m.training_log.iterations = log.at("iterations").get<std::size_t>();
    m.training_log.final_objective = log.at("final_objective").get<double>();
    m.training_log.converged = log.at("converged").get<bool>();
    return m;
}

ordered_json tree_json(const DecisionTree& t) {
    ordered_json nodes = ordered_json::array();
    for (const auto& n : t.nodes) {  // preorder
        nodes.push_back({{"feature", n.feature},
                         {"threshold", n.threshold},
                         {"left", n.left},
                         {"right", n.right},
                         {"weight_positive", n.weight_positive},
                         {"weight_negative", n.weight_negative},
                         {"probability", n.probability}});
    }
    return {{"max_depth", t.params.max_depth},
            {"min_samples_leaf", t.params.min_samples_leaf},
            {"gini_reduction_per_feature", t.gini_reduction_per_feature},
            {"nodes", nodes}};
}

DecisionTree tree_from_json(const nlohmann::json& j) {
    DecisionTree t;
    t.params.max_depth = j.at("max_depth").get<int>();
    t.params.min_samples_leaf = j.at("min_samples_leaf").get<int>();
    t.gini_reduction_per_feature =
        j.at("gini_reduction_per_feature").get<std::vector<double>>();
    for (const auto& n : j.at("nodes")) {
        TreeNode node;
        node.feature = n.at("feature").get<int>();
        node.threshold = n.at("threshold").get<double>();
        node.left = n.at("left").get<int>();
        node.right = n.at("right").get<int>();
        node.weight_positive = n.at("weight_positive").get<double>();
        node.weight_negative = n.at("weight_negative").get<double>();
        node.probability = n.at("probability").get<double>();
        t.nodes.push_back(node);
    }
    if (t.nodes.empty()) throw DataError("model file: tree has no nodes");
    return t;
}

ordered_json ensemble_json(const Ensemble& e) {
    ordered_json members = ordered_json::array();
    for (const auto& m : e.members) members.push_back(tree_json(m));
    ordered_json rounds = ordered_json::array();
    for (const auto& r : e.rounds) {
        rounds.push_back({{"epsilon", r.epsilon},
                          {"alpha", r.alpha},
                          {"post_update_error", r.post_update_error}});
    }
    return {{"ensemble_kind", e.kind == EnsembleKind::Bagging ? "bagging" : "boosting"},
            {"n_estimators", e.n_estimators},
            {"base_params",
             {{"max_depth", e.base_params.max_depth},
              {"min_samples_leaf", e.base_params.min_samples_leaf}}},
            {"member_weights", e.member_weights},
            {"members", members},
            {"rounds", rounds},
            {"weak_learner_warning", e.weak_learner_warning}};
}

Ensemble ensemble_from_json(const nlohmann::json& j) {
    Ensemble e;
    const auto kind = j.at("ensemble_kind").get<std::string>();
    if (kind == "bagging") {
        e.kind = EnsembleKind::Bagging;
    } else if (kind == "boosting") {
        e.kind = EnsembleKind::Boosting;
    } else {
        throw DataError("model file: unknown ensemble kind '" + kind + "'");
    }
    e.n_estimators = j.at("n_estimators").get<std::size_t>();
    e.base_params.max_depth = j.at("base_params").at("max_depth").get<int>();
    e.base_params.min_samples_leaf = j.at("base_params").at("min_samples_leaf").get<int>();
    e.member_weights = j.at("member_weights").get<std::vector<double>>();
    for (const auto& m : j.at("members")) e.members.push_back(tree_from_json(m));
    for (const auto& r : j.at("rounds")) {
        e.rounds.push_back({r.at("epsilon").get<double>(), r.at("alpha").get<double>(),
                            r.at("post_update_error").get<double>()});
    }
    e.weak_learner_warning = j.at("weak_learner_warning").get<bool>();
    if (e.members.empty()) throw DataError("model file: ensemble has no members");
    if (e.members.size() != e.member_weights.size()) {
        throw DataError("model file: member/weight count mismatch");
    }
    return e;
}

ordered_json stats_json(const PreprocessStats& s) {
    return {{"kept_columns", s.kept_columns},
            {"kept_names", s.kept_names},
            {"medians", s.medians},
            {"means", s.means},
            {"stds", s.stds}};
}

PreprocessStats stats_from_json(const nlohmann::json& j) {
    PreprocessStats s;
    s.kept_columns = j.at("kept_columns").get<std::vector<std::size_t>>();
    s.kept_names = j.at("kept_names").get<std::vector<std::string>>();
    s.medians = j.at("medians").get<std::vector<double>>();
    s.means = j.at("means").get<std::vector<double>>();
    s.stds = j.at("stds").get<std::vector<double>>();
    return s;
}

}  // namespace

std::string model_kind(const ModelBundle& bundle) {
    if (const auto* linear = std::get_if<LinearModel>(&bundle.model)) {
        return linear->lambda > 0.0 ? "l1lr" : "lr";
    }
    if (std::holds_alternative<DecisionTree>(bundle.model)) return "dt";
    const auto& ens = std::get<Ensemble>(bundle.model);
    return ens.kind == EnsembleKind::Bagging ? "bagging" : "boosting";
}

void save_model(const ModelBundle& bundle, const std::string& path) {
    ordered_json j;
    j["format"] = "imbrisk-model";
    j["version"] = 1;
    j["kind"] = model_kind(bundle);
    j["label"] = bundle.label;
    j["feature_names"] = bundle.feature_names;
    j["preprocess"] = bundle.preprocess ? stats_json(*bundle.preprocess)
                                        : ordered_json(nullptr);
    if (const auto* linear = std::get_if<LinearModel>(&bundle.model)) {
        j["model"] = linear_json(*linear);
    } else if (const auto* tree = std::get_if<DecisionTree>(&bundle.model)) {
        j["model"] = tree_json(*tree);
    } else {
        j["model"] = ensemble_json(std::get<Ensemble>(bundle.model));
    }

    std::ofstream out(path);
    if (!out) throw DataError("cannot write model file '" + path + "'");
    out << j.dump(2) << '\n';
    if (!out) throw DataError("error while writing model file '" + path + "'");
}

ModelBundle load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open model file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("model file '" + path + "': " + e.what());
    }
    try {
        if (j.at("format").get<std::string>() != "imbrisk-model") {
            throw DataError("'" + path + "' is not a model file");
        }
        ModelBundle bundle;
        bundle.label = j.at("label").get<std::string>();
        bundle.feature_names = j.at("feature_names").get<std::vector<std::string>>();
        if (!j.at("preprocess").is_null()) {
            bundle.preprocess = stats_from_json(j.at("preprocess"));
        }
        const auto kind = j.at("kind").get<std::string>();
        if (kind == "lr" || kind == "l1lr") {
            bundle.model = linear_from_json(j.at("model"));
        } else if (kind == "dt") {
            bundle.model = tree_from_json(j.at("model"));
        } else if (kind == "bagging" || kind == "boosting") {
            bundle.model = ensemble_from_json(j.at("model"));
        } else {
            throw DataError("model file: unknown kind '" + kind + "'");
        }
        return bundle;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("model file '" + path + "': " + e.what());
    }
}

void save_preprocess_stats(const PreprocessStats& stats, const std::string& path) {
    ordered_json j;
    j["format"] = "imbrisk-preprocess";
    j["version"] = 1;
    j["stats"] = stats_json(stats);
    std::ofstream out(path);
    if (!out) throw DataError("cannot write stats file '" + path + "'");
    out << j.dump(2) << '\n';
}

PreprocessStats load_preprocess_stats(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open stats file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
        if (j.at("format").get<std::string>() != "imbrisk-preprocess") {
            throw DataError("'" + path + "' is not a preprocessing stats file");
        }
        return stats_from_json(j.at("stats"));
    } catch (const nlohmann::json::exception& e) {
        throw DataError("stats file '" + path + "': " + e.what());
    }
}

std::vector<double> bundle_scores(const ModelBundle& bundle, const Dataset& raw) {
    const std::vector<std::string>& needed =
        bundle.preprocess ? bundle.preprocess->kept_names : bundle.feature_names;

    std::string missing;
    for (const auto& name : needed) {
        if (std::find(raw.feature_names.begin(), raw.feature_names.end(), name) ==
            raw.feature_names.end()) {
            missing += missing.empty() ? name : ", " + name;
        }
    }
    if (!missing.empty()) {
        throw DataError("scoring data is missing model columns: " + missing);
    }

    Dataset input;
    if (bundle.preprocess) {
        input = apply_preprocess(raw, *bundle.preprocess);
    } else {
        std::vector<std::size_t> cols;
        for (const auto& name : needed) {
            const auto it =
                std::find(raw.feature_names.begin(), raw.feature_names.end(), name);
            cols.push_back(static_cast<std::size_t>(it - raw.feature_names.begin()));
        }
        input.labels = raw.labels;
        input.feature_names = needed;
        input.features = Matrix(raw.n_rows(), cols.size());
        for (std::size_t i = 0; i < raw.n_rows(); ++i) {
            for (std::size_t j = 0; j < cols.size(); ++j) {
                input.features(i, j) = raw.features(i, cols[j]);
            }
        }
    }

    if (const auto* linear = std::get_if<LinearModel>(&bundle.model)) {
        return predict_proba_linear(*linear, input.features);
    }
    if (const auto* tree = std::get_if<DecisionTree>(&bundle.model)) {
        return tree_predict(*tree, input.features);
    }
    return ensemble_scores(std::get<Ensemble>(bundle.model), input.features);
}

}  // namespace imbrisk
