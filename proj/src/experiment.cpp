#include "imbrisk/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <mutex>
#include <numeric>
#include <thread>

#include "imbrisk/errors.hpp"
#include "imbrisk/log.hpp"
#include "imbrisk/rng.hpp"

namespace imbrisk {
namespace {

std::uint64_t ratio_key(double ratio) {
    return static_cast<std::uint64_t>(std::llround(ratio * 1e9));
}

void run_jobs(std::size_t n_jobs, std::size_t workers,
              const std::function<void(std::size_t)>& job) {
    if (workers <= 1 || n_jobs <= 1) {
        for (std::size_t i = 0; i < n_jobs; ++i) job(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n_jobs || failed.load()) return;
            try {
                job(i);
            } catch (...) {
                std::scoped_lock lock(error_mutex);
                if (!error) error = std::current_exception();
                failed.store(true);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    const std::size_t count = std::min(workers, n_jobs);
    pool.reserve(count);
    for (std::size_t t = 0; t < count; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

struct PreparedFold {
    Dataset train_p;
    Dataset valid_p;
    std::vector<std::size_t> valid_indices;
};

struct CellSpec {
    Method method = Method::None;
    double ratio = 0.0;
    bool baseline = false;
};

struct TrainOutcome {
    std::vector<double> scores;
    std::optional<double> lambda;
    std::vector<double> epsilons;
    bool weak_warning = false;
};

TrainOutcome train_and_score(ClassifierKind kind, const Dataset& train,
                             const Dataset& valid, const HyperParams& hyper,
                             std::uint64_t seed) {
    TrainOutcome out;
    switch (kind) {
        case ClassifierKind::LR: {
            const auto model = train_lr(train, hyper.lr_max_iter, hyper.lr_tol);
            out.scores = predict_proba_linear(model, valid.features);
            break;
        }
        case ClassifierKind::L1LR: {
            // Small lambda grid; the value with the best validation AUC wins,
            // ties to the earlier (smaller) lambda.
            double best_auc = -1.0;
            for (double lambda : hyper.lambda_grid) {
                const auto model = train_l1lr(train, lambda, hyper.lr_max_iter, hyper.lr_tol);
                auto scores = predict_proba_linear(model, valid.features);
                const double a = auc(scores, valid.labels);
                if (a > best_auc) {
                    best_auc = a;
                    out.scores = std::move(scores);
                    out.lambda = lambda;
                }
            }
            break;
        }
        case ClassifierKind::DT: {
            const auto tree = train_tree(train, hyper.tree);
            out.scores = tree_predict(tree, valid.features);
            break;
        }
        case ClassifierKind::Bagging: {
            const auto ens = bagging_train(train, hyper.bagging_estimators, hyper.tree, seed);
            out.scores = ensemble_scores(ens, valid.features);
            break;
        }
        case ClassifierKind::Boosting: {
            const auto ens =
                boosting_train(train, hyper.boosting_estimators, hyper.boost_tree, seed);
            out.scores = ensemble_scores(ens, valid.features);
            for (const auto& round : ens.rounds) out.epsilons.push_back(round.epsilon);
            out.weak_warning = ens.weak_learner_warning;
            break;
        }
    }
    return out;
}

std::optional<double> null_skipping_mean(const std::vector<std::optional<MetricSet>>& folds,
                                         std::optional<double> MetricSet::*field) {
    double sum = 0.0;
    std::size_t used = 0;
    for (const auto& m : folds) {
        if (m && (*m).*field) {
            sum += *((*m).*field);
            ++used;
        }
    }
    if (used == 0) return std::nullopt;
    return sum / static_cast<double>(used);
}

GridRunResult run_cells(const Dataset& ds, const FoldPlan& plan,
                        const std::vector<CellSpec>& specs,
                        const std::vector<ClassifierKind>& classifiers,
                        const HyperParams& hyper, std::uint64_t master_seed,
                        std::size_t workers) {
    if (plan.assignments.size() != ds.n_rows()) {
        throw ConfigError("fold plan does not match the dataset");
    }
    const std::size_t k = plan.k;
    const std::size_t n_specs = specs.size();
    const std::size_t n_clf = classifiers.size();

    GridRunResult result;
    std::vector<PreparedFold> prepared(k);
    result.folds.resize(k);
    for (std::size_t f = 0; f < k; ++f) {
        std::vector<std::size_t> train_idx;
        std::vector<std::size_t> valid_idx;
        for (std::size_t i = 0; i < ds.n_rows(); ++i) {
            (plan.assignments[i] == f ? valid_idx : train_idx).push_back(i);
        }
        const Dataset train = select_rows(ds, train_idx);
        const Dataset valid = select_rows(ds, valid_idx);
        PreprocessStats stats = fit_preprocess(train, hyper.missing_threshold);
        prepared[f].train_p = apply_preprocess(train, stats);
        prepared[f].valid_p = apply_preprocess(valid, stats);
        prepared[f].valid_indices = valid_idx;
        result.folds[f] = {std::move(train_idx), std::move(valid_idx), std::move(stats)};
    }

    const std::size_t n_cells = n_clf * n_specs;
    std::vector<std::vector<std::optional<MetricSet>>> metrics(
        n_cells, std::vector<std::optional<MetricSet>>(k));
    std::vector<std::vector<std::vector<ScoredRow>>> scores(
        n_cells, std::vector<std::vector<ScoredRow>>(k));
    std::vector<std::vector<std::optional<double>>> lambdas(
        n_cells, std::vector<std::optional<double>>(k));
    std::vector<std::vector<std::vector<double>>> eps_traces(
        n_cells, std::vector<std::vector<double>>(k));
    std::vector<char> weak_flags(n_cells, 0);

    const std::size_t n_jobs = k * n_specs;
    run_jobs(n_jobs, workers, [&](std::size_t job) {
        const std::size_t f = job / n_specs;
        const std::size_t s = job % n_specs;
        const CellSpec& spec = specs[s];
        const PreparedFold& fold = prepared[f];

        Dataset resampled;
        const Dataset* train = &fold.train_p;
        bool usable = true;
        if (!spec.baseline) {
            ResampleSpec rs;
            rs.method = spec.method;
            rs.target_positive = spec.ratio;
            rs.smote_k = hyper.smote_k;
            rs.kmeans_max_iter = hyper.kmeans_max_iter;
            rs.kmeans_tol = hyper.kmeans_tol;
            rs.seed = resample_seed(master_seed, f, spec.method, spec.ratio);
            try {
                resampled = resample(fold.train_p, rs);
                train = &resampled;
            } catch (const std::runtime_error& e) {
                // Precondition failure for this fold's data; the cell keeps
                // null metrics for the fold instead of aborting the grid.
                log_debug("fold " + std::to_string(f) + " " + method_name(spec.method) +
                          " @" + std::to_string(spec.ratio) + ": " + e.what());
                usable = false;
            }
        }

        for (std::size_t c = 0; c < n_clf; ++c) {
            if (!usable) continue;
            const std::size_t cell = c * n_specs + s;
            try {
                const auto outcome = train_and_score(
                    classifiers[c], *train, fold.valid_p, hyper,
                    classifier_seed(master_seed, f, spec.method, spec.ratio, classifiers[c]));
                metrics[cell][f] = compute_metrics(outcome.scores, fold.valid_p.labels,
                                                   hyper.metric_threshold);
                auto& cell_rows = scores[cell][f];
                cell_rows.reserve(outcome.scores.size());
                for (std::size_t r = 0; r < outcome.scores.size(); ++r) {
                    cell_rows.push_back({fold.valid_indices[r], fold.valid_p.labels[r],
                                         outcome.scores[r]});
                }
                lambdas[cell][f] = outcome.lambda;
                eps_traces[cell][f] = outcome.epsilons;
                if (outcome.weak_warning) weak_flags[cell] = 1;
            } catch (const std::runtime_error& e) {
                log_debug("fold " + std::to_string(f) + " " +
                          classifier_name(classifiers[c]) + ": " + e.what());
            }
        }
    });

    result.cells.reserve(n_cells);
    result.cell_scores.resize(n_cells);
    for (std::size_t c = 0; c < n_clf; ++c) {
        for (std::size_t s = 0; s < n_specs; ++s) {
            const std::size_t cell = c * n_specs + s;
            GridCell out;
            out.classifier = classifiers[c];
            out.method = specs[s].baseline ? Method::None : specs[s].method;
            out.target_positive = specs[s].ratio;
            out.per_fold_metrics = std::move(metrics[cell]);
            out.mean_auc = null_skipping_mean(out.per_fold_metrics, &MetricSet::auc);
            out.mean_recall = null_skipping_mean(out.per_fold_metrics, &MetricSet::recall);
            out.mean_precision =
                null_skipping_mean(out.per_fold_metrics, &MetricSet::precision);
            out.mean_f1 = null_skipping_mean(out.per_fold_metrics, &MetricSet::f1);
            out.folds_used = 0;
            for (const auto& m : out.per_fold_metrics) {
                if (m && m->auc) ++out.folds_used;
            }
            if (classifiers[c] == ClassifierKind::L1LR) {
                out.fold_lambda = std::move(lambdas[cell]);
            }
            if (classifiers[c] == ClassifierKind::Boosting) {
                out.fold_epsilons = std::move(eps_traces[cell]);
                out.weak_learner_warning = weak_flags[cell] != 0;
            }
            result.cells.push_back(std::move(out));

            auto& pooled = result.cell_scores[cell];
            for (std::size_t f = 0; f < k; ++f) {
                pooled.insert(pooled.end(), scores[cell][f].begin(), scores[cell][f].end());
            }
        }
    }
    return result;
}

// Lexicographic "better cell": AUC, then recall, then F1, then lower ratio.
bool cell_better(const GridCell& a, const GridCell& b) {
    if (!a.mean_auc) return false;
    if (!b.mean_auc) return true;
    if (*a.mean_auc != *b.mean_auc) return *a.mean_auc > *b.mean_auc;
    const double ar = a.mean_recall.value_or(-1.0);
    const double br = b.mean_recall.value_or(-1.0);
    if (ar != br) return ar > br;
    const double af = a.mean_f1.value_or(-1.0);
    const double bf = b.mean_f1.value_or(-1.0);
    if (af != bf) return af > bf;
    return a.target_positive < b.target_positive;
}

}  // namespace

std::string classifier_name(ClassifierKind c) {
    switch (c) {
        case ClassifierKind::LR: return "LR";
        case ClassifierKind::L1LR: return "L1LR";
        case ClassifierKind::DT: return "DT";
        case ClassifierKind::Bagging: return "bagging";
        case ClassifierKind::Boosting: return "boosting";
    }
    return "LR";
}

ClassifierKind parse_classifier(const std::string& name) {
    if (name == "LR" || name == "lr") return ClassifierKind::LR;
    if (name == "L1LR" || name == "l1lr") return ClassifierKind::L1LR;
    if (name == "DT" || name == "dt") return ClassifierKind::DT;
    if (name == "bagging" || name == "Bagging") return ClassifierKind::Bagging;
    if (name == "boosting" || name == "Boosting") return ClassifierKind::Boosting;
    throw ConfigError("unknown classifier '" + name + "'");
}

FoldPlan stratified_kfold(const Dataset& ds, std::size_t k, std::uint64_t seed) {
    if (k < 2) throw ConfigError("stratified_kfold: k must be at least 2");
    auto pos = positive_indices(ds);
    auto neg = negative_indices(ds);
    if (pos.size() < k || neg.size() < k) {
        throw DataError("stratified_kfold: each class needs at least k rows (have " +
                        std::to_string(pos.size()) + " positives, " +
                        std::to_string(neg.size()) + " negatives, k=" + std::to_string(k) +
                        ")");
    }

    Rng rng(derive_seed(seed, "kfold"));
    rng.shuffle(pos);
    rng.shuffle(neg);

    // One round-robin cursor across both class blocks: per-class fold counts
    // differ by at most one, and so do total fold sizes.
    FoldPlan plan;
    plan.k = k;
    plan.seed = seed;
    plan.assignments.resize(ds.n_rows());
    std::size_t cursor = 0;
    for (std::size_t i : pos) plan.assignments[i] = cursor++ % k;
    for (std::size_t i : neg) plan.assignments[i] = cursor++ % k;
    return plan;
}

std::uint64_t resample_seed(std::uint64_t master, std::size_t fold, Method method,
                            double ratio) {
    return derive_seed(master, "resample", fold, method_name(method), ratio_key(ratio));
}

std::uint64_t classifier_seed(std::uint64_t master, std::size_t fold, Method method,
                              double ratio, ClassifierKind classifier) {
    return derive_seed(master, "train", fold, method_name(method), ratio_key(ratio),
                       classifier_name(classifier));
}

GridRunResult run_grid(const Dataset& ds, const FoldPlan& plan,
                       const std::vector<double>& ratios,
                       const std::vector<Method>& methods,
                       const std::vector<ClassifierKind>& classifiers,
                       const HyperParams& hyper, std::uint64_t master_seed,
                       std::size_t workers) {
    for (double r : ratios) {
        if (!(r > 0.0 && r < 1.0)) {
            throw ConfigError("run_grid: ratios must be strictly inside (0, 1)");
        }
    }
    std::vector<CellSpec> specs;
    specs.push_back({Method::None, positive_rate(ds), true});
    for (Method m : methods) {
        if (m == Method::None) continue;
        for (double r : ratios) specs.push_back({m, r, false});
    }
    return run_cells(ds, plan, specs, classifiers, hyper, master_seed, workers);
}

std::map<ClassifierKind, BestChoice> select_best(const std::vector<GridCell>& grid) {
    if (grid.empty()) throw DataError("select_best: empty grid");
    std::map<ClassifierKind, std::size_t> best_index;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!grid[i].mean_auc) continue;
        const auto it = best_index.find(grid[i].classifier);
        if (it == best_index.end() || cell_better(grid[i], grid[it->second])) {
            best_index[grid[i].classifier] = i;
        }
    }
    std::map<ClassifierKind, BestChoice> best;
    for (const auto& [clf, idx] : best_index) {
        best[clf] = {grid[idx].method, grid[idx].target_positive, idx};
    }
    for (const auto& cell : grid) {
        if (!best.contains(cell.classifier)) {
            throw DataError("select_best: classifier " + classifier_name(cell.classifier) +
                            " has no cell with a defined AUC");
        }
    }
    return best;
}

GridRunResult run_ensemble_stage(const Dataset& ds, const FoldPlan& plan,
                                 const BestChoice& dt_best, const HyperParams& hyper,
                                 std::uint64_t master_seed, std::size_t workers) {
    std::vector<CellSpec> specs{
        {dt_best.method, dt_best.ratio, dt_best.method == Method::None}};
    const std::vector<ClassifierKind> kinds{ClassifierKind::Bagging,
                                            ClassifierKind::Boosting};
    return run_cells(ds, plan, specs, kinds, hyper, master_seed, workers);
}

std::string model_label(ClassifierKind classifier, Method method, double ratio,
                        double original_rate) {
    const bool original = method == Method::None;
    const double shown = (original ? original_rate : ratio) * 100.0;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", shown);
    std::string pct(buf);
    if (pct.size() > 2 && pct.ends_with(".0")) pct.resize(pct.size() - 2);
    std::string base = classifier == ClassifierKind::Bagging ||
                               classifier == ClassifierKind::Boosting
                           ? "DT"
                           : classifier_name(classifier);
    std::string label = base + "_" + (original ? "original" : method_name(method)) + "_" +
                        pct + "%";
    if (classifier == ClassifierKind::Bagging) label += "_bagging";
    if (classifier == ClassifierKind::Boosting) label += "_boosting";
    return label;
}

RefitResult refit_model(const Dataset& ds, ClassifierKind kind, Method method, double ratio,
                        std::optional<double> lambda, const HyperParams& hyper,
                        std::uint64_t master_seed) {
    RefitResult out;
    out.stats = fit_preprocess(ds, hyper.missing_threshold);
    const Dataset full = apply_preprocess(ds, out.stats);
    out.feature_names = full.feature_names;

    ResampleSpec rs;
    rs.method = method;
    rs.target_positive = method == Method::None ? 0.5 : ratio;
    rs.smote_k = hyper.smote_k;
    rs.kmeans_max_iter = hyper.kmeans_max_iter;
    rs.kmeans_tol = hyper.kmeans_tol;
    rs.seed = derive_seed(master_seed, "refit_resample", method_name(method),
                          ratio_key(ratio));
    const Dataset train = method == Method::None ? full : resample(full, rs);

    const std::uint64_t seed =
        derive_seed(master_seed, "refit_train", classifier_name(kind));
    const std::size_t d = full.n_features();
    out.importance.assign(d, 0.0);

    switch (kind) {
        case ClassifierKind::LR:
        case ClassifierKind::L1LR: {
            LinearModel model =
                kind == ClassifierKind::LR
                    ? train_lr(train, hyper.lr_max_iter, hyper.lr_tol)
                    : train_l1lr(train, lambda.value_or(hyper.lambda_grid.front()),
                                 hyper.lr_max_iter, hyper.lr_tol);
            out.lambda_used = kind == ClassifierKind::L1LR
                                  ? std::optional<double>(model.lambda)
                                  : std::nullopt;
            for (std::size_t j = 0; j < d; ++j) {
                out.importance[j] = std::abs(model.coefficients[j]);
            }
            out.importance_kind = "abs_coefficient";
            out.model = std::move(model);
            break;
        }
        case ClassifierKind::DT: {
            DecisionTree tree = train_tree(train, hyper.tree);
            double total = 0.0;
            for (double v : tree.gini_reduction_per_feature) total += v;
            for (std::size_t j = 0; j < d; ++j) {
                out.importance[j] =
                    total > 0.0 ? tree.gini_reduction_per_feature[j] / total : 0.0;
            }
            out.importance_kind = "gini_reduction";
            out.model = std::move(tree);
            break;
        }
        case ClassifierKind::Bagging: {
            Ensemble ens = bagging_train(train, hyper.bagging_estimators, hyper.tree, seed);
            out.importance = ensemble_importance(ens);
            out.importance_kind = "gini_reduction";
            out.model = std::move(ens);
            break;
        }
        case ClassifierKind::Boosting: {
            Ensemble ens =
                boosting_train(train, hyper.boosting_estimators, hyper.boost_tree, seed);
            out.importance = ensemble_importance(ens);
            out.importance_kind = "gini_reduction";
            out.model = std::move(ens);
            break;
        }
    }
    return out;
}

ExperimentReport finalize(const GridRunResult& grid_run, const GridRunResult& ensemble_run,
                          const Dataset& ds, const FoldPlan& plan,
                          const HyperParams& hyper, std::uint64_t master_seed,
                          double auc_tie_tolerance) {
    ExperimentReport report;
    report.grid = grid_run.cells;
    report.ensemble_cells = ensemble_run.cells;
    report.original_rate = positive_rate(ds);
    report.master_seed = master_seed;
    report.best_per_classifier = select_best(grid_run.cells);

    const auto cell_candidate = [&](const GridCell& cell, std::size_t index,
                                    bool is_ensemble) {
        CandidateSummary cand;
        cand.label = model_label(cell.classifier, cell.method, cell.target_positive,
                                 report.original_rate);
        cand.classifier = cell.classifier;
        cand.method = cell.method;
        cand.ratio = cell.target_positive;
        cand.mean_auc = cell.mean_auc;
        cand.mean_recall = cell.mean_recall;
        cand.mean_f1 = cell.mean_f1;
        cand.cell_index = index;
        cand.is_ensemble = is_ensemble;
        return cand;
    };

    for (const auto& [clf, choice] : report.best_per_classifier) {
        report.candidates.push_back(
            cell_candidate(grid_run.cells[choice.cell_index], choice.cell_index, false));
    }
    for (std::size_t i = 0; i < ensemble_run.cells.size(); ++i) {
        report.candidates.push_back(cell_candidate(ensemble_run.cells[i], i, true));
    }

    const auto candidate_better = [](const CandidateSummary& a, const CandidateSummary& b) {
        if (!a.mean_auc) return false;
        if (!b.mean_auc) return true;
        if (*a.mean_auc != *b.mean_auc) return *a.mean_auc > *b.mean_auc;
        const double ar = a.mean_recall.value_or(-1.0);
        const double br = b.mean_recall.value_or(-1.0);
        if (ar != br) return ar > br;
        const double af = a.mean_f1.value_or(-1.0);
        const double bf = b.mean_f1.value_or(-1.0);
        if (af != bf) return af > bf;
        return a.ratio < b.ratio;
    };

    std::size_t leader = 0;
    for (std::size_t i = 1; i < report.candidates.size(); ++i) {
        if (candidate_better(report.candidates[i], report.candidates[leader])) leader = i;
    }
    if (!report.candidates[leader].mean_auc) {
        throw DataError("finalize: no candidate produced a defined AUC");
    }

    // Recall is the secondary criterion: boosting takes the win when its AUC
    // is within the tie tolerance of the leader and its recall is higher.
    for (std::size_t i = 0; i < report.candidates.size(); ++i) {
        const auto& cand = report.candidates[i];
        if (cand.classifier != ClassifierKind::Boosting || i == leader) continue;
        if (!cand.mean_auc) continue;
        const bool auc_tie =
            *report.candidates[leader].mean_auc - *cand.mean_auc <= auc_tie_tolerance;
        const bool recall_wins = cand.mean_recall.value_or(-1.0) >
                                 report.candidates[leader].mean_recall.value_or(-1.0);
        if (auc_tie && recall_wins) {
            leader = i;
            break;
        }
    }
    report.optimal = report.candidates[leader];

    std::optional<double> refit_lambda;
    if (report.optimal.classifier == ClassifierKind::L1LR) {
        // Most frequently selected fold lambda, ties to the smaller value.
        const auto& cell = grid_run.cells[report.optimal.cell_index];
        std::map<double, std::size_t> votes;
        for (const auto& l : cell.fold_lambda) {
            if (l) ++votes[*l];
        }
        std::size_t best_votes = 0;
        for (const auto& [value, count] : votes) {
            if (count > best_votes) {
                best_votes = count;
                refit_lambda = value;
            }
        }
    }

    report.refit = refit_model(ds, report.optimal.classifier, report.optimal.method,
                               report.optimal.ratio, refit_lambda, hyper, master_seed);
    report.importance_kind = report.refit.importance_kind;

    std::vector<std::size_t> order(report.refit.feature_names.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return report.refit.importance[a] > report.refit.importance[b];
    });
    for (std::size_t j : order) {
        report.importance_ranking.emplace_back(report.refit.feature_names[j],
                                               report.refit.importance[j]);
    }

    for (const auto& cell : grid_run.cells) {
        const std::size_t skipped = plan.k - cell.folds_used;
        if (skipped > 0) {
            report.warnings.push_back(
                model_label(cell.classifier, cell.method, cell.target_positive,
                            report.original_rate) +
                ": " + std::to_string(skipped) + " fold(s) skipped (null metrics)");
        }
    }
    for (const auto& cell : ensemble_run.cells) {
        if (cell.weak_learner_warning) {
            report.warnings.push_back(
                model_label(cell.classifier, cell.method, cell.target_positive,
                            report.original_rate) +
                ": first boosting member no better than chance on some fold");
        }
    }
    return report;
}

}  // namespace imbrisk
