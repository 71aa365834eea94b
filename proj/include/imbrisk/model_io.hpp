#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "imbrisk/ensemble.hpp"
#include "imbrisk/linear.hpp"
#include "imbrisk/preprocess.hpp"
#include "imbrisk/tree.hpp"

namespace imbrisk {

/// A trained classifier plus everything needed to score raw rows: the
/// feature names it expects and, when present, the preprocessing fitted
/// alongside it. Serialized as JSON; round-trips are lossless.
struct ModelBundle {
    std::variant<LinearModel, DecisionTree, Ensemble> model;
    std::vector<std::string> feature_names;
    std::optional<PreprocessStats> preprocess;
    std::string label;  // display name, e.g. "DT_SMOTE_50%_boosting"
};

std::string model_kind(const ModelBundle& bundle);  // "lr", "l1lr", "dt", "bagging", "boosting"

void save_model(const ModelBundle& bundle, const std::string& path);
ModelBundle load_model(const std::string& path);

/// Standalone stats files for the `preprocess` subcommand.
void save_preprocess_stats(const PreprocessStats& stats, const std::string& path);
PreprocessStats load_preprocess_stats(const std::string& path);

/// Applies the bundled preprocessing (if any) and scores every row.
/// Throws DataError naming the missing columns on a schema mismatch.
std::vector<double> bundle_scores(const ModelBundle& bundle, const Dataset& raw);

}  // namespace imbrisk
