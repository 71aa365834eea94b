#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numeric>

#include "imbrisk/ensemble.hpp"
#include "imbrisk/errors.hpp"
#include "imbrisk/metrics.hpp"
#include "test_support.hpp"

using namespace imbrisk;

namespace {

bool trees_equal(const DecisionTree& a, const DecisionTree& b) {
    if (a.nodes.size() != b.nodes.size()) return false;
    for (std::size_t i = 0; i < a.nodes.size(); ++i) {
        if (a.nodes[i].feature != b.nodes[i].feature ||
            a.nodes[i].threshold != b.nodes[i].threshold ||
            a.nodes[i].probability != b.nodes[i].probability) {
            return false;
        }
    }
    return true;
}

// Constant-probability tree: a single leaf grown from a crafted class mix.
DecisionTree constant_tree(double probability) {
    const int total = 10;
    const int pos = static_cast<int>(std::lround(probability * total));
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    for (int i = 0; i < total; ++i) {
        rows.push_back({0.0});
        labels.push_back(i < pos ? 1 : 0);
    }
    return train_tree(testsup::make_dataset(rows, labels), TreeParams{0, 1});
}

}  // namespace

TEST_CASE("bagging with the identity sample equals the single tree") {
    Rng rng(101);
    const Dataset ds = testsup::random_dataset(rng, 60, 3, 1.2);
    std::vector<std::size_t> identity(ds.n_rows());
    std::iota(identity.begin(), identity.end(), 0);
    const auto ens = bagging_train_on_samples(ds, {identity}, TreeParams{6, 2});
    const auto tree = train_tree(ds, TreeParams{6, 2});
    for (std::size_t i = 0; i < ds.n_rows(); ++i) {
        CHECK(ensemble_predict(ens, ds.features.row(i)).score ==
              tree_predict(tree, ds.features.row(i)));
    }
}

TEST_CASE("bagging members differ and runs are reproducible") {
    Rng rng(103);
    const Dataset ds = testsup::random_dataset(rng, 80, 3, 1.0);
    const auto a = bagging_train(ds, 5, TreeParams{8, 1}, 42);
    const auto b = bagging_train(ds, 5, TreeParams{8, 1}, 42);
    REQUIRE(a.members.size() == 5);

    bool any_member_differs = false;
    for (std::size_t i = 1; i < a.members.size(); ++i) {
        any_member_differs |= !trees_equal(a.members[0], a.members[i]);
    }
    CHECK(any_member_differs);  // distinct derived seeds draw distinct bootstraps

    for (std::size_t i = 0; i < a.members.size(); ++i) {
        CHECK(trees_equal(a.members[i], b.members[i]));
    }

    const auto c = bagging_train(ds, 5, TreeParams{8, 1}, 43);
    bool differs_across_seeds = false;
    for (std::size_t i = 0; i < a.members.size(); ++i) {
        differs_across_seeds |= !trees_equal(a.members[i], c.members[i]);
    }
    CHECK(differs_across_seeds);
}

TEST_CASE("boosting weight update leaves the member at even odds") {
    Rng rng(107);
    const Dataset ds = testsup::random_dataset(rng, 120, 3, 0.9);
    const auto ens = boosting_train(ds, 20, TreeParams{1, 1}, 0);
    REQUIRE(!ens.rounds.empty());
    std::size_t checked = 0;
    for (const auto& round : ens.rounds) {
        if (round.epsilon <= 0.0 || round.epsilon >= 0.5) continue;
        CHECK(std::abs(round.post_update_error - 0.5) <= 1e-12);
        ++checked;
    }
    CHECK(checked > 0);
}

TEST_CASE("boosting starts from uniform weights with positive votes") {
    Rng rng(113);
    const Dataset ds = testsup::random_dataset(rng, 90, 3, 0.8);
    const auto ens = boosting_train(ds, 10, TreeParams{1, 1}, 0);

    // The first round's weighted error equals the plain unweighted error of
    // the tree grown with uniform weights.
    const auto first = train_tree(ds, TreeParams{1, 1});
    std::size_t errors = 0;
    for (std::size_t i = 0; i < ds.n_rows(); ++i) {
        const int predicted = tree_predict(first, ds.features.row(i)) >= 0.5 ? 1 : 0;
        errors += predicted != ds.labels[i];
    }
    CHECK(ens.rounds[0].epsilon ==
          doctest::Approx(static_cast<double>(errors) / ds.n_rows()).epsilon(1e-12));

    REQUIRE_FALSE(ens.weak_learner_warning);
    for (double alpha : ens.member_weights) CHECK(alpha > 0.0);
    for (const auto& round : ens.rounds) CHECK(round.epsilon < 0.5);
}

TEST_CASE("boosting respects the AdaBoost training-error bound") {
    Rng rng(109);
    for (int trial = 0; trial < 5; ++trial) {
        const Dataset ds = testsup::random_dataset(rng, 60, 2, 1.0);
        const auto ens = boosting_train(ds, 15, TreeParams{1, 1}, 0);

        double bound = 1.0;
        for (const auto& round : ens.rounds) {
            bound *= 2.0 * std::sqrt(round.epsilon * (1.0 - round.epsilon));
        }
        std::size_t errors = 0;
        for (std::size_t i = 0; i < ds.n_rows(); ++i) {
            errors += ensemble_predict(ens, ds.features.row(i)).label != ds.labels[i];
        }
        const double training_error =
            static_cast<double>(errors) / static_cast<double>(ds.n_rows());
        CHECK(training_error <= bound + 1e-12);
    }
}

TEST_CASE("boosting stops after a perfect round with a capped vote") {
    const Dataset ds = testsup::make_dataset({{0}, {1}, {2}, {10}, {11}, {12}},
                                             {0, 0, 0, 1, 1, 1});
    const auto ens = boosting_train(ds, 25, TreeParams{3, 1}, 0);
    CHECK(ens.members.size() == 1);
    CHECK(ens.rounds[0].epsilon == 0.0);
    CHECK(ens.member_weights[0] == doctest::Approx(0.5 * std::log((1 - 1e-12) / 1e-12)));
    CHECK(std::isfinite(ens.member_weights[0]));
}

TEST_CASE("boosting falls back to a flagged single member on XOR") {
    // No depth-1 stump beats chance on XOR; the first round hits 0.5 exactly.
    const Dataset ds =
        testsup::make_dataset({{0, 0}, {0, 1}, {1, 0}, {1, 1}}, {0, 1, 1, 0});
    const auto ens = boosting_train(ds, 10, TreeParams{1, 1}, 0);
    CHECK(ens.members.size() == 1);
    CHECK(ens.weak_learner_warning);
    CHECK(ens.member_weights == std::vector<double>{1.0});
}

TEST_CASE("ensemble_predict rules") {
    SUBCASE("unanimous members give class 1 for both kinds") {
        Ensemble ens;
        ens.members = {constant_tree(0.9), constant_tree(0.8)};
        ens.member_weights = {1.0, 1.0};
        ens.kind = EnsembleKind::Bagging;
        CHECK(ensemble_predict(ens, std::vector<double>{0.0}).label == 1);
        ens.kind = EnsembleKind::Boosting;
        CHECK(ensemble_predict(ens, std::vector<double>{0.0}).label == 1);
    }

    SUBCASE("bagging averages member probabilities") {
        Ensemble ens;
        ens.kind = EnsembleKind::Bagging;
        ens.members = {constant_tree(0.2), constant_tree(0.8)};
        ens.member_weights = {1.0, 1.0};
        const auto out = ensemble_predict(ens, std::vector<double>{0.0});
        CHECK(out.score == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(out.label == 1);  // ties go to the risky class
    }

    SUBCASE("boosting tie votes classify positive") {
        Ensemble ens;
        ens.kind = EnsembleKind::Boosting;
        ens.members = {constant_tree(1.0), constant_tree(0.0), constant_tree(0.0)};
        ens.member_weights = {2.0, 1.0, 1.0};  // votes +2 -1 -1 = 0
        const auto out = ensemble_predict(ens, std::vector<double>{0.0});
        CHECK(out.score == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(out.label == 1);
    }

    SUBCASE("empty ensemble is an error") {
        Ensemble ens;
        CHECK_THROWS_AS(ensemble_predict(ens, std::vector<double>{0.0}), DataError);
    }
}

TEST_CASE("member order does not change predictions") {
    Rng rng(127);
    const Dataset ds = testsup::random_dataset(rng, 70, 3, 1.0);
    auto ens = bagging_train(ds, 7, TreeParams{6, 2}, 11);
    const auto probe = testsup::random_dataset(rng, 20, 3, 1.0);
    const auto before = ensemble_scores(ens, probe.features);

    std::reverse(ens.members.begin(), ens.members.end());
    std::reverse(ens.member_weights.begin(), ens.member_weights.end());
    const auto after = ensemble_scores(ens, probe.features);
    for (std::size_t i = 0; i < before.size(); ++i) {
        CHECK(before[i] == doctest::Approx(after[i]).epsilon(1e-12));
    }
}

TEST_CASE("ensemble_importance") {
    SUBCASE("single member equals that tree's normalized importance") {
        Rng rng(131);
        const Dataset ds = testsup::random_dataset(rng, 50, 3, 1.5);
        const auto tree = train_tree(ds, TreeParams{5, 2});
        Ensemble ens;
        ens.members = {tree};
        ens.member_weights = {3.7};
        const auto imp = ensemble_importance(ens);
        double total = 0.0;
        for (double v : tree.gini_reduction_per_feature) total += v;
        for (std::size_t j = 0; j < 3; ++j) {
            CHECK(imp[j] == doctest::Approx(tree.gini_reduction_per_feature[j] / total));
        }
    }

    SUBCASE("a feature never split on scores zero") {
        // Labels depend only on feature 0; feature 1 is constant.
        std::vector<std::vector<double>> rows;
        std::vector<int> labels;
        for (int i = 0; i < 30; ++i) {
            rows.push_back({static_cast<double>(i), 5.0});
            labels.push_back(i < 15 ? 0 : 1);
        }
        const Dataset ds = testsup::make_dataset(rows, labels);
        const auto ens = bagging_train(ds, 5, TreeParams{4, 1}, 3);
        const auto imp = ensemble_importance(ens);
        CHECK(imp[1] == 0.0);
        CHECK(imp[0] == doctest::Approx(1.0));
    }

    SUBCASE("informative feature dominates") {
        Rng rng(137);
        std::vector<std::vector<double>> rows;
        std::vector<int> labels;
        for (int i = 0; i < 200; ++i) {
            const double signal = rng.normal();
            rows.push_back({signal, rng.normal(), rng.normal()});
            labels.push_back(signal > 0.0 ? 1 : 0);
        }
        const Dataset ds = testsup::make_dataset(rows, labels);
        const auto ens = boosting_train(ds, 10, TreeParams{3, 5}, 0);
        const auto imp = ensemble_importance(ens);
        CHECK(imp[0] > 0.9);
        double sum = 0.0;
        for (double v : imp) {
            CHECK(v >= 0.0);
            sum += v;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }

    SUBCASE("all-stump-free ensembles give the zero vector") {
        const Dataset pure = testsup::make_dataset({{1}, {2}, {3}}, {0, 0, 0});
        Ensemble ens;
        ens.members = {train_tree(pure, TreeParams{3, 1})};
        ens.member_weights = {1.0};
        const auto imp = ensemble_importance(ens);
        CHECK(imp == std::vector<double>{0.0});
    }
}
