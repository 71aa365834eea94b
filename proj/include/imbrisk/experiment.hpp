#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "imbrisk/dataset.hpp"
#include "imbrisk/ensemble.hpp"
#include "imbrisk/linear.hpp"
#include "imbrisk/metrics.hpp"
#include "imbrisk/preprocess.hpp"
#include "imbrisk/resample.hpp"
#include "imbrisk/tree.hpp"

namespace imbrisk {

enum class ClassifierKind { LR, L1LR, DT, Bagging, Boosting };

std::string classifier_name(ClassifierKind c);
ClassifierKind parse_classifier(const std::string& name);  // throws ConfigError

/// Stratified fold assignment: every row gets a fold in [0, k); per-class
/// counts differ by at most one across folds.
struct FoldPlan {
    std::size_t k = 10;
    std::vector<std::size_t> assignments;
    std::uint64_t seed = 0;
};

FoldPlan stratified_kfold(const Dataset& ds, std::size_t k, std::uint64_t seed);

struct HyperParams {
    std::vector<double> lambda_grid{0.001, 0.01, 0.1};
    TreeParams tree{8, 5};
    TreeParams boost_tree{3, 5};
    std::size_t bagging_estimators = 50;
    std::size_t boosting_estimators = 50;
    int smote_k = 5;
    int kmeans_max_iter = 100;
    double kmeans_tol = 1e-6;
    int lr_max_iter = 5000;
    double lr_tol = 1e-6;
    double missing_threshold = 0.70;
    double metric_threshold = 0.5;
};

/// Cross-validated results for one (classifier, method, ratio) combination.
struct GridCell {
    ClassifierKind classifier = ClassifierKind::LR;
    Method method = Method::None;
    double target_positive = 0.0;
    std::vector<std::optional<MetricSet>> per_fold_metrics;  // length k
    std::optional<double> mean_auc;
    std::optional<double> mean_recall;
    std::optional<double> mean_precision;
    std::optional<double> mean_f1;
    std::size_t folds_used = 0;  // folds contributing to mean_auc
    std::vector<std::optional<double>> fold_lambda;  // L1LR: chosen lambda per fold
    std::vector<std::vector<double>> fold_epsilons;  // Boosting: error trace per fold
    bool weak_learner_warning = false;
};

/// Per-fold artifacts kept so the leak-freedom protocol can be audited:
/// which rows were held out, and the statistics fitted on the rest.
struct FoldArtifacts {
    std::vector<std::size_t> train_indices;
    std::vector<std::size_t> valid_indices;
    PreprocessStats stats;
};

struct ScoredRow {
    std::size_t row = 0;  // index into the original dataset
    int label = 0;
    double score = 0.0;
};

struct GridRunResult {
    std::vector<GridCell> cells;
    std::vector<FoldArtifacts> folds;
    std::vector<std::vector<ScoredRow>> cell_scores;  // pooled out-of-fold scores
};

/// Seed derivations are content-addressed so results cannot depend on
/// execution order. The resampling seed is shared by every classifier
/// trained on that resampled set.
std::uint64_t resample_seed(std::uint64_t master, std::size_t fold, Method method,
                            double ratio);
std::uint64_t classifier_seed(std::uint64_t master, std::size_t fold, Method method,
                              double ratio, ClassifierKind classifier);

/// Stages 1-3: per fold, preprocessing is fitted on the training folds only,
/// the training folds are resampled per (method, ratio), each classifier is
/// trained on the resampled set and scored on the untouched validation fold.
/// Baseline cells (Method::None at the original rate) are always included.
/// Cells whose resampler preconditions fail get null metrics for that fold.
GridRunResult run_grid(const Dataset& ds, const FoldPlan& plan,
                       const std::vector<double>& ratios,
                       const std::vector<Method>& methods,
                       const std::vector<ClassifierKind>& classifiers,
                       const HyperParams& hyper, std::uint64_t master_seed,
                       std::size_t workers = 1);

struct BestChoice {
    Method method = Method::None;
    double ratio = 0.0;
    std::size_t cell_index = 0;
};

/// Argmax of mean AUC per classifier; ties break by higher recall, then
/// higher F1, then lower ratio. Throws DataError when a classifier has no
/// cell with a defined mean AUC.
std::map<ClassifierKind, BestChoice> select_best(const std::vector<GridCell>& grid);

/// Stage 4: cross-validated bagging and boosting at the DT-best
/// (method, ratio), same fold plan and protocol.
GridRunResult run_ensemble_stage(const Dataset& ds, const FoldPlan& plan,
                                 const BestChoice& dt_best, const HyperParams& hyper,
                                 std::uint64_t master_seed, std::size_t workers = 1);

/// "DT_SMOTE_50%" / "LR_original_7.4%" style labels; original_rate is used
/// when method is None.
std::string model_label(ClassifierKind classifier, Method method, double ratio,
                        double original_rate);

struct CandidateSummary {
    std::string label;
    ClassifierKind classifier = ClassifierKind::LR;
    Method method = Method::None;
    double ratio = 0.0;
    std::optional<double> mean_auc;
    std::optional<double> mean_recall;
    std::optional<double> mean_f1;
    std::size_t cell_index = 0;   // into grid or ensemble cells
    bool is_ensemble = false;
};

/// The winning configuration refitted on the fully preprocessed (and, when
/// applicable, resampled) dataset, plus the importance scores read off it.
struct RefitResult {
    std::variant<LinearModel, DecisionTree, Ensemble> model;
    PreprocessStats stats;
    std::vector<std::string> feature_names;
    std::vector<double> importance;  // aligned with feature_names
    std::string importance_kind;     // "gini_reduction" or "abs_coefficient"
    std::optional<double> lambda_used;
};

RefitResult refit_model(const Dataset& ds, ClassifierKind kind, Method method, double ratio,
                        std::optional<double> lambda, const HyperParams& hyper,
                        std::uint64_t master_seed);

struct ExperimentReport {
    std::vector<GridCell> grid;
    std::map<ClassifierKind, BestChoice> best_per_classifier;
    std::vector<GridCell> ensemble_cells;  // bagging, boosting
    std::vector<CandidateSummary> candidates;
    CandidateSummary optimal;
    std::string importance_kind;  // "gini_reduction" or "abs_coefficient"
    std::vector<std::pair<std::string, double>> importance_ranking;
    RefitResult refit;
    double original_rate = 0.0;
    std::uint64_t master_seed = 0;
    std::vector<std::string> warnings;
};

/// Stage 5: pick the overall winner among the per-classifier bests plus the
/// two ensembles (AUC first, recall/F1 tie rules; boosting additionally wins
/// on recall when its AUC is within auc_tie_tolerance of the leader), then
/// refit it on the fully preprocessed + resampled dataset to extract the
/// feature importance ranking.
ExperimentReport finalize(const GridRunResult& grid_run, const GridRunResult& ensemble_run,
                          const Dataset& ds, const FoldPlan& plan,
                          const HyperParams& hyper, std::uint64_t master_seed,
                          double auc_tie_tolerance = 0.005);

}  // namespace imbrisk
