#include "imbrisk/ensemble.hpp"

#include <algorithm>
#include <cmath>

#include "imbrisk/errors.hpp"
#include "imbrisk/rng.hpp"

namespace imbrisk {
namespace {

constexpr int kBootstrapRetries = 20;
// Keeps alpha finite when a round classifies everything correctly.
const double kAlphaCap = 0.5 * std::log((1.0 - 1e-12) / 1e-12);

int tree_class(const DecisionTree& tree, std::span<const double> x) {
    return tree_predict(tree, x) >= 0.5 ? 1 : 0;
}

}  // namespace

Ensemble bagging_train_on_samples(const Dataset& ds,
                                  const std::vector<std::vector<std::size_t>>& samples,
                                  TreeParams params) {
    if (samples.empty()) throw ConfigError("bagging: need at least one sample");
    Ensemble ens;
    ens.kind = EnsembleKind::Bagging;
    ens.n_estimators = samples.size();
    ens.base_params = params;
    for (const auto& sample : samples) {
        const Dataset boot = select_rows(ds, sample);
        ens.members.push_back(train_tree(boot, params));
        ens.member_weights.push_back(1.0);
    }
    return ens;
}

Ensemble bagging_train(const Dataset& ds, std::size_t n_estimators, TreeParams params,
                       std::uint64_t seed) {
    require_trainable(ds);
    if (n_estimators == 0) throw ConfigError("bagging: n_estimators must be >= 1");
    const std::size_t n = ds.n_rows();

    std::vector<std::vector<std::size_t>> samples;
    samples.reserve(n_estimators);
    for (std::size_t member = 0; member < n_estimators; ++member) {
        Rng rng(derive_seed(seed, "bagging", member));
        std::vector<std::size_t> sample(n);
        for (int attempt = 0; attempt <= kBootstrapRetries; ++attempt) {
            bool has_pos = false;
            bool has_neg = false;
            for (std::size_t i = 0; i < n; ++i) {
                sample[i] = rng.index(n);
                (ds.labels[sample[i]] == 1 ? has_pos : has_neg) = true;
            }
            if (has_pos && has_neg) break;
            // Single-class draw: redraw; after the retry budget, accept the
            // single-leaf tree it will produce.
        }
        samples.push_back(sample);
    }
    return bagging_train_on_samples(ds, samples, params);
}

Ensemble boosting_train(const Dataset& ds, std::size_t n_estimators, TreeParams params,
                        std::uint64_t /*seed*/) {
    require_trainable(ds);
    if (n_estimators == 0) throw ConfigError("boosting: n_estimators must be >= 1");
    const std::size_t n = ds.n_rows();

    Ensemble ens;
    ens.kind = EnsembleKind::Boosting;
    ens.n_estimators = n_estimators;
    ens.base_params = params;

    std::vector<double> weights(n, 1.0 / static_cast<double>(n));
    std::vector<int> predicted(n);

    for (std::size_t round = 0; round < n_estimators; ++round) {
        DecisionTree tree = train_tree(ds, weights, params);

        double epsilon = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            predicted[i] = tree_class(tree, ds.features.row(i));
            if (predicted[i] != ds.labels[i]) epsilon += weights[i];
        }

        if (epsilon >= 0.5) {
            if (round == 0) {
                // Nothing better than chance available: fall back to the
                // single member with unit vote and flag it.
                ens.members.push_back(std::move(tree));
                ens.member_weights.push_back(1.0);
                ens.rounds.push_back({epsilon, 1.0, epsilon});
                ens.weak_learner_warning = true;
            }
            break;
        }

        const double alpha =
            epsilon == 0.0 ? kAlphaCap : 0.5 * std::log((1.0 - epsilon) / epsilon);

        double post_error = 0.0;
        if (epsilon > 0.0) {
            const double up = std::exp(alpha);
            const double down = std::exp(-alpha);
            double total = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                weights[i] *= predicted[i] != ds.labels[i] ? up : down;
                total += weights[i];
            }
            for (std::size_t i = 0; i < n; ++i) {
                weights[i] /= total;
                if (predicted[i] != ds.labels[i]) post_error += weights[i];
            }
        }

        ens.members.push_back(std::move(tree));
        ens.member_weights.push_back(alpha);
        ens.rounds.push_back({epsilon, alpha, post_error});

        if (epsilon == 0.0) break;  // perfect member; further rounds cannot help
    }
    return ens;
}

EnsemblePrediction ensemble_predict(const Ensemble& ens, std::span<const double> x) {
    if (ens.members.empty()) throw DataError("ensemble_predict: empty ensemble");
    EnsemblePrediction out;
    if (ens.kind == EnsembleKind::Bagging) {
        double sum = 0.0;
        for (const auto& tree : ens.members) sum += tree_predict(tree, x);
        out.score = sum / static_cast<double>(ens.members.size());
        out.label = out.score >= 0.5 ? 1 : 0;
    } else {
        double vote = 0.0;
        double total = 0.0;
        for (std::size_t t = 0; t < ens.members.size(); ++t) {
            const int h = tree_class(ens.members[t], x) == 1 ? 1 : -1;
            vote += ens.member_weights[t] * h;
            total += ens.member_weights[t];
        }
        const double s = total > 0.0 ? vote / total : 0.0;
        out.score = (s + 1.0) / 2.0;
        out.label = vote >= 0.0 ? 1 : 0;  // tie votes go to the risky class
    }
    return out;
}

std::vector<double> ensemble_scores(const Ensemble& ens, const Matrix& x) {
    std::vector<double> out(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        out[i] = ensemble_predict(ens, x.row(i)).score;
    }
    return out;
}

std::vector<double> ensemble_importance(const Ensemble& ens) {
    if (ens.members.empty()) throw DataError("ensemble_importance: empty ensemble");
    const std::size_t d = ens.members.front().n_features();
    std::vector<double> importance(d, 0.0);
    double weight_total = 0.0;
    for (std::size_t t = 0; t < ens.members.size(); ++t) {
        const auto& per_tree = ens.members[t].gini_reduction_per_feature;
        if (per_tree.size() != d) {
            throw DataError("ensemble_importance: member dimension mismatch");
        }
        const double w = ens.member_weights[t];
        for (std::size_t j = 0; j < d; ++j) importance[j] += w * per_tree[j];
        weight_total += w;
    }
    double sum = 0.0;
    for (double v : importance) sum += v;
    if (sum <= 0.0) return std::vector<double>(d, 0.0);  // every member is a single leaf
    for (double& v : importance) v /= sum;
    return importance;
}

}  // namespace imbrisk
