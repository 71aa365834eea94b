#pragma once

#include <cstdint>
#include <vector>

#include "imbrisk/tree.hpp"

namespace imbrisk {

enum class EnsembleKind { Bagging, Boosting };

struct BoostingRound {
    double epsilon = 0.0;            // weighted error of the round's member
    double alpha = 0.0;              // vote weight
    double post_update_error = 0.0;  // member's weighted error on the updated weights
};

struct Ensemble {
    EnsembleKind kind = EnsembleKind::Bagging;
    std::vector<DecisionTree> members;
    std::vector<double> member_weights;  // all 1 for bagging, alpha_t for boosting
    std::size_t n_estimators = 0;        // requested count
    TreeParams base_params;
    std::vector<BoostingRound> rounds;   // boosting only
    bool weak_learner_warning = false;   // first boosting member had error >= 0.5
};

/// Trees on uniform-with-replacement bootstrap samples, unit weights.
/// A single-class draw is redrawn a bounded number of times, after which the
/// single-leaf tree is accepted.
Ensemble bagging_train(const Dataset& ds, std::size_t n_estimators, TreeParams params,
                       std::uint64_t seed);

/// Bagging with explicit row samples; bagging_train generates the bootstrap
/// samples and delegates here.
Ensemble bagging_train_on_samples(const Dataset& ds,
                                  const std::vector<std::vector<std::size_t>>& samples,
                                  TreeParams params);

/// AdaBoost.M1 over weighted Gini trees, +/-1 label encoding. Per round:
/// weighted error e, vote weight a = ln((1-e)/e)/2, misclassified weights
/// scaled by exp(a), correct ones by exp(-a), then renormalized. A round with
/// e = 0 keeps the member with a capped alpha and stops; e >= 0.5 discards the
/// member and stops (unless it is the first member, which is kept with weight
/// 1 and flags weak_learner_warning).
Ensemble boosting_train(const Dataset& ds, std::size_t n_estimators, TreeParams params,
                        std::uint64_t seed);

struct EnsemblePrediction {
    double score = 0.0;  // in [0, 1]
    int label = 0;       // ties (score exactly at the decision point) go positive
};

EnsemblePrediction ensemble_predict(const Ensemble& ens, std::span<const double> x);
std::vector<double> ensemble_scores(const Ensemble& ens, const Matrix& x);

/// Member-weight-weighted mean of per-tree Gini reductions, normalized to
/// sum 1. All-zero when no member ever split.
std::vector<double> ensemble_importance(const Ensemble& ens);

}  // namespace imbrisk
