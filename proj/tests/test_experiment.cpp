#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "imbrisk/config.hpp"
#include "imbrisk/errors.hpp"
#include "imbrisk/experiment.hpp"
#include "imbrisk/report_io.hpp"
#include "test_support.hpp"

using namespace imbrisk;

namespace {

RunConfig small_config(const std::string& outdir) {
    RunConfig cfg;
    cfg.seed = 555;
    cfg.synthetic = SyntheticSpec{300, 4, 0.15, 1.8};
    cfg.folds = 4;
    cfg.ratios = {0.3, 0.5};
    cfg.methods = {Method::Rus, Method::Smote};
    cfg.classifiers = {ClassifierKind::LR, ClassifierKind::DT};
    cfg.hyper.lr_max_iter = 300;
    cfg.hyper.bagging_estimators = 8;
    cfg.hyper.boosting_estimators = 8;
    cfg.output_dir = outdir;
    cfg.workers = 1;
    return cfg;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("stratified_kfold balances both classes") {
    const Dataset ds = generate_synthetic(1000, 3, 0.074, 1.0, 17);
    const FoldPlan plan = stratified_kfold(ds, 10, 99);
    REQUIRE(plan.assignments.size() == 1000);

    std::vector<std::size_t> rows(10, 0);
    std::vector<std::size_t> positives(10, 0);
    for (std::size_t i = 0; i < ds.n_rows(); ++i) {
        REQUIRE(plan.assignments[i] < 10);
        ++rows[plan.assignments[i]];
        positives[plan.assignments[i]] += ds.labels[i];
    }
    for (std::size_t f = 0; f < 10; ++f) {
        CHECK(rows[f] == 100);
        CHECK(positives[f] >= 7);
        CHECK(positives[f] <= 8);
    }

    const FoldPlan again = stratified_kfold(ds, 10, 99);
    CHECK(plan.assignments == again.assignments);
    const FoldPlan other = stratified_kfold(ds, 10, 100);
    CHECK(plan.assignments != other.assignments);
}

TEST_CASE("stratified_kfold rejects classes smaller than k") {
    const Dataset ds = testsup::make_dataset(
        {{1}, {2}, {3}, {4}, {5}, {6}, {7}, {8}}, {1, 1, 0, 0, 0, 0, 0, 0});
    CHECK_THROWS_AS(stratified_kfold(ds, 3, 1), DataError);
    CHECK_NOTHROW(stratified_kfold(ds, 2, 1));
}

TEST_CASE("run_grid produces the full cell product plus baselines") {
    const Dataset ds = generate_synthetic(200, 3, 0.2, 1.5, 5);
    const FoldPlan plan = stratified_kfold(ds, 3, 7);
    HyperParams hyper;
    hyper.lr_max_iter = 200;
    const auto result =
        run_grid(ds, plan, {0.3, 0.5, 0.7}, {Method::Rus, Method::Ros},
                 {ClassifierKind::LR, ClassifierKind::DT}, hyper, 42, 1);

    CHECK(result.cells.size() == 2 * (1 + 2 * 3));  // per classifier: baseline + 6
    std::size_t baselines = 0;
    for (const auto& cell : result.cells) {
        REQUIRE(cell.per_fold_metrics.size() == 3);
        if (cell.method == Method::None) {
            ++baselines;
            CHECK(cell.target_positive == doctest::Approx(0.2));
        }
    }
    CHECK(baselines == 2);
}

TEST_CASE("run_grid scores only original validation rows") {
    const Dataset ds = generate_synthetic(200, 3, 0.2, 1.5, 6);
    const FoldPlan plan = stratified_kfold(ds, 4, 8);
    HyperParams hyper;
    hyper.lr_max_iter = 100;
    const auto result = run_grid(ds, plan, {0.5}, {Method::Smote},
                                 {ClassifierKind::DT}, hyper, 13, 1);

    // Fold artifacts partition the row set.
    std::set<std::size_t> seen;
    for (const auto& fold : result.folds) {
        for (std::size_t idx : fold.valid_indices) {
            CHECK(idx < ds.n_rows());
            CHECK(seen.insert(idx).second);  // disjoint
        }
    }
    CHECK(seen.size() == ds.n_rows());

    // Every scored row is one of the original rows of its fold.
    for (const auto& scores : result.cell_scores) {
        std::set<std::size_t> scored;
        for (const auto& row : scores) {
            CHECK(row.label == ds.labels[row.row]);
            scored.insert(row.row);
        }
        CHECK(scored.size() == ds.n_rows());
    }
}

TEST_CASE("baseline cells equal training directly on the preprocessed folds") {
    const Dataset ds = generate_synthetic(150, 3, 0.2, 1.5, 9);
    const FoldPlan plan = stratified_kfold(ds, 3, 11);
    HyperParams hyper;
    hyper.lr_max_iter = 400;
    const auto result =
        run_grid(ds, plan, {0.5}, {}, {ClassifierKind::DT}, hyper, 21, 1);
    REQUIRE(result.cells.size() == 1);  // baseline only
    const auto& baseline = result.cells[0];

    for (std::size_t f = 0; f < plan.k; ++f) {
        std::vector<std::size_t> train_idx;
        std::vector<std::size_t> valid_idx;
        for (std::size_t i = 0; i < ds.n_rows(); ++i) {
            (plan.assignments[i] == f ? valid_idx : train_idx).push_back(i);
        }
        const auto stats = fit_preprocess(select_rows(ds, train_idx));
        const Dataset train_p = apply_preprocess(select_rows(ds, train_idx), stats);
        const Dataset valid_p = apply_preprocess(select_rows(ds, valid_idx), stats);
        const auto tree = train_tree(train_p, hyper.tree);
        const auto scores = tree_predict(tree, valid_p.features);
        const auto expected = compute_metrics(scores, valid_p.labels, 0.5);

        REQUIRE(baseline.per_fold_metrics[f].has_value());
        CHECK(baseline.per_fold_metrics[f]->auc == expected.auc);
        CHECK(baseline.per_fold_metrics[f]->counts == expected.counts);
    }
}

TEST_CASE("grid means recompute from the per-fold list") {
    const Dataset ds = generate_synthetic(200, 3, 0.2, 1.5, 10);
    const FoldPlan plan = stratified_kfold(ds, 4, 12);
    HyperParams hyper;
    hyper.lr_max_iter = 150;
    const auto result = run_grid(ds, plan, {0.4}, {Method::Ros},
                                 {ClassifierKind::LR}, hyper, 31, 1);
    for (const auto& cell : result.cells) {
        double sum = 0.0;
        std::size_t used = 0;
        for (const auto& m : cell.per_fold_metrics) {
            if (m && m->auc) {
                sum += *m->auc;
                ++used;
            }
        }
        REQUIRE(used > 0);
        CHECK(*cell.mean_auc == doctest::Approx(sum / used).epsilon(1e-12));
        CHECK(cell.folds_used == used);
    }
}

TEST_CASE("degenerate resampler preconditions yield null folds, not failures") {
    // SMOTE with k=5 needs six minority rows per training fold; give it four.
    const Dataset ds = generate_synthetic(40, 2, 0.15, 1.0, 14);  // 6 positives
    const FoldPlan plan = stratified_kfold(ds, 3, 15);            // ~4 per training fold
    HyperParams hyper;
    hyper.lr_max_iter = 50;
    const auto result = run_grid(ds, plan, {0.5}, {Method::Smote},
                                 {ClassifierKind::DT}, hyper, 51, 1);
    const auto& smote_cell = result.cells[1];
    CHECK(smote_cell.method == Method::Smote);
    CHECK(smote_cell.folds_used == 0);
    for (const auto& m : smote_cell.per_fold_metrics) CHECK_FALSE(m.has_value());
    CHECK_FALSE(smote_cell.mean_auc.has_value());
    // The baseline cell still works.
    CHECK(result.cells[0].folds_used == plan.k);
}

TEST_CASE("select_best applies the tie rules") {
    GridCell a;
    a.classifier = ClassifierKind::DT;
    a.method = Method::Rus;
    a.target_positive = 0.3;
    a.mean_auc = 0.8;
    a.mean_recall = 0.8;
    a.mean_f1 = 0.5;

    SUBCASE("single cell wins by default") {
        const auto best = select_best({a});
        CHECK(best.at(ClassifierKind::DT).method == Method::Rus);
    }

    SUBCASE("equal AUC breaks on recall") {
        GridCell b = a;
        b.method = Method::Smote;
        b.mean_recall = 0.9;
        const auto best = select_best({a, b});
        CHECK(best.at(ClassifierKind::DT).method == Method::Smote);
    }

    SUBCASE("equal AUC and recall breaks on F1, then lower ratio") {
        GridCell b = a;
        b.method = Method::Smote;
        b.mean_f1 = 0.6;
        CHECK(select_best({a, b}).at(ClassifierKind::DT).method == Method::Smote);

        GridCell c = a;
        c.target_positive = 0.2;
        c.method = Method::Ccus;
        CHECK(select_best({a, c}).at(ClassifierKind::DT).method == Method::Ccus);
    }

    SUBCASE("all-null classifier row is an error") {
        GridCell empty;
        empty.classifier = ClassifierKind::LR;
        CHECK_THROWS_AS(select_best({a, empty}), DataError);
    }
}

TEST_CASE("model_label follows the naming convention") {
    CHECK(model_label(ClassifierKind::DT, Method::Smote, 0.5, 0.074) == "DT_SMOTE_50%");
    CHECK(model_label(ClassifierKind::LR, Method::None, 0.0, 0.074) ==
          "LR_original_7.4%");
    CHECK(model_label(ClassifierKind::Boosting, Method::Smote, 0.5, 0.074) ==
          "DT_SMOTE_50%_boosting");
    CHECK(model_label(ClassifierKind::Bagging, Method::Rus, 0.2, 0.074) ==
          "DT_RUS_20%_bagging");
    CHECK(model_label(ClassifierKind::L1LR, Method::Ros, 0.35, 0.074) ==
          "L1LR_ROS_35%");
}

TEST_CASE("ensemble stage reuses the fold protocol at the DT-best cell") {
    const Dataset ds = generate_synthetic(250, 3, 0.2, 1.8, 20);
    const FoldPlan plan = stratified_kfold(ds, 4, 21);
    HyperParams hyper;
    hyper.lr_max_iter = 100;
    hyper.bagging_estimators = 5;
    hyper.boosting_estimators = 5;

    const auto grid = run_grid(ds, plan, {0.5}, {Method::Smote},
                               {ClassifierKind::DT}, hyper, 61, 1);
    const auto best = select_best(grid.cells);
    const auto ens = run_ensemble_stage(ds, plan, best.at(ClassifierKind::DT), hyper, 61, 1);

    REQUIRE(ens.cells.size() == 2);
    CHECK(ens.cells[0].classifier == ClassifierKind::Bagging);
    CHECK(ens.cells[1].classifier == ClassifierKind::Boosting);
    for (std::size_t f = 0; f < plan.k; ++f) {
        CHECK(ens.folds[f].valid_indices == grid.folds[f].valid_indices);
        CHECK(ens.folds[f].stats == grid.folds[f].stats);
    }
    // Boosting cells carry their per-round error traces.
    std::size_t traced = 0;
    for (const auto& trace : ens.cells[1].fold_epsilons) traced += !trace.empty();
    CHECK(traced == plan.k);
}

TEST_CASE("single-member bagging lands near the standalone tree") {
    const Dataset ds = generate_synthetic(300, 3, 0.25, 2.0, 22);
    const FoldPlan plan = stratified_kfold(ds, 3, 23);
    HyperParams hyper;
    hyper.bagging_estimators = 1;
    hyper.boosting_estimators = 1;

    const auto grid = run_grid(ds, plan, {0.5}, {Method::Ros},
                               {ClassifierKind::DT}, hyper, 71, 1);
    const auto best = select_best(grid.cells);
    const auto ens = run_ensemble_stage(ds, plan, best.at(ClassifierKind::DT), hyper, 71, 1);

    const auto& dt_cell = grid.cells[best.at(ClassifierKind::DT).cell_index];
    const auto& bag_cell = ens.cells[0];
    REQUIRE(dt_cell.mean_auc.has_value());
    REQUIRE(bag_cell.mean_auc.has_value());
    CHECK(std::abs(*dt_cell.mean_auc - *bag_cell.mean_auc) < 0.2);  // sanity, not equality
}

TEST_CASE("finalize picks the AUC leader and ranks importances") {
    const auto cfg = small_config("exp_test_out_finalize");
    const Dataset ds = load_config_dataset(cfg);
    const FoldPlan plan = stratified_kfold(ds, cfg.folds, derive_seed(cfg.seed, "folds"));
    const auto grid = run_grid(ds, plan, cfg.ratios, cfg.methods, cfg.classifiers,
                               cfg.hyper, cfg.seed, 1);
    const auto best = select_best(grid.cells);
    const auto ens =
        run_ensemble_stage(ds, plan, best.at(ClassifierKind::DT), cfg.hyper, cfg.seed, 1);
    const auto report = finalize(grid, ens, ds, plan, cfg.hyper, cfg.seed);

    REQUIRE(report.optimal.mean_auc.has_value());
    for (const auto& cand : report.candidates) {
        if (!cand.mean_auc) continue;
        CHECK(*report.optimal.mean_auc >= *cand.mean_auc - 0.005 - 1e-12);
    }

    REQUIRE(report.importance_ranking.size() == ds.n_features());
    for (std::size_t i = 1; i < report.importance_ranking.size(); ++i) {
        CHECK(report.importance_ranking[i - 1].second >=
              report.importance_ranking[i].second);
    }
    if (report.importance_kind == "gini_reduction") {
        double sum = 0.0;
        for (const auto& [name, score] : report.importance_ranking) sum += score;
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("boosting wins AUC near-ties on recall") {
    GridCell dt;
    dt.classifier = ClassifierKind::DT;
    dt.method = Method::Smote;
    dt.target_positive = 0.5;
    dt.mean_auc = 0.850;
    dt.mean_recall = 0.60;
    dt.mean_f1 = 0.6;

    GridRunResult grid;
    grid.cells = {dt};
    grid.folds = {};

    GridCell boost = dt;
    boost.classifier = ClassifierKind::Boosting;
    boost.mean_auc = 0.848;  // within the 0.005 tie window
    boost.mean_recall = 0.80;
    GridCell bag = dt;
    bag.classifier = ClassifierKind::Bagging;
    bag.mean_auc = 0.849;
    bag.mean_recall = 0.55;
    GridRunResult ens;
    ens.cells = {bag, boost};

    const Dataset ds = generate_synthetic(120, 3, 0.2, 1.5, 33);
    const FoldPlan plan = stratified_kfold(ds, 3, 34);
    HyperParams hyper;
    const auto report = finalize(grid, ens, ds, plan, hyper, 99);
    CHECK(report.optimal.classifier == ClassifierKind::Boosting);
    CHECK(report.optimal.label == "DT_SMOTE_50%_boosting");
}

TEST_CASE("leak-freedom: validation perturbation changes nothing fitted") {
    const Dataset ds = generate_synthetic(200, 3, 0.2, 1.5, 40);
    const FoldPlan plan = stratified_kfold(ds, 4, 41);
    HyperParams hyper;
    hyper.lr_max_iter = 50;
    const std::uint64_t master = 77;
    const auto result = run_grid(ds, plan, {0.5}, {Method::Rus, Method::Smote},
                                 {ClassifierKind::DT}, hyper, master, 1);

    for (std::size_t f = 0; f < plan.k; ++f) {
        Dataset perturbed = ds;
        for (std::size_t idx : result.folds[f].valid_indices) {
            for (std::size_t j = 0; j < ds.n_features(); ++j) {
                perturbed.features(idx, j) += 123.456;
            }
        }
        const Dataset train = select_rows(perturbed, result.folds[f].train_indices);
        const auto stats = fit_preprocess(train, hyper.missing_threshold);
        CHECK(stats == result.folds[f].stats);

        // The resampled training sets rebuild identically.
        const Dataset train_p = apply_preprocess(train, stats);
        for (Method m : {Method::Rus, Method::Smote}) {
            ResampleSpec spec;
            spec.method = m;
            spec.target_positive = 0.5;
            spec.smote_k = hyper.smote_k;
            spec.seed = resample_seed(master, f, m, 0.5);
            const Dataset a = resample(train_p, spec);
            const Dataset b = resample(train_p, spec);
            CHECK(testsup::datasets_equal(a, b));
        }
    }
}

TEST_CASE("grid wall time grows roughly linearly with cell count") {
    const Dataset ds = generate_synthetic(400, 4, 0.15, 1.8, 55);
    const FoldPlan plan = stratified_kfold(ds, 4, 56);
    HyperParams hyper;
    hyper.lr_max_iter = 200;

    const auto time_grid = [&](const std::vector<double>& ratios) {
        const auto start = std::chrono::steady_clock::now();
        run_grid(ds, plan, ratios, {Method::Ros, Method::Smote}, {ClassifierKind::LR},
                 hyper, 77, 1);
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    };
    time_grid({0.5});  // warm-up
    const double small = time_grid({0.5});
    const double large = time_grid({0.3, 0.4, 0.5});  // 3x the resampled cells
    // Coarse linearity: 3x the cells must stay within 3x of the linear
    // prediction (and timing noise must not go the other way either).
    CHECK(large < 9.0 * small);
}

TEST_CASE("run_experiment is deterministic across worker counts") {
    namespace fs = std::filesystem;
    auto cfg = small_config("exp_test_out_a");
    const auto a = run_experiment(cfg);

    cfg.output_dir = "exp_test_out_b";
    cfg.workers = 3;
    const auto b = run_experiment(cfg);

    CHECK(slurp(a.report_path) == slurp(b.report_path));
    CHECK(slurp(a.output_dir / "grid.csv") == slurp(b.output_dir / "grid.csv"));
    CHECK(slurp(a.output_dir / "importance.csv") ==
          slurp(b.output_dir / "importance.csv"));
    CHECK(slurp(a.output_dir / "model_optimal.json") ==
          slurp(b.output_dir / "model_optimal.json"));

    for (const auto& dir : {a.output_dir, b.output_dir}) fs::remove_all(dir);
    fs::remove_all("exp_test_out_finalize");
}
