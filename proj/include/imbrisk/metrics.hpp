#pragma once

#include <array>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "imbrisk/dataset.hpp"

namespace imbrisk {

struct ConfusionCounts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;

    bool operator==(const ConfusionCounts&) const = default;
};

/// Predicted positive iff score >= threshold.
ConfusionCounts confusion(std::span<const double> scores, std::span<const int> labels,
                          double threshold);

double recall(const ConfusionCounts& c);     // throws DataError when tp+fn == 0
double precision(const ConfusionCounts& c);  // throws DataError when tp+fp == 0
double f1(double precision, double recall);  // 0 when both are 0

/// Undefined metrics stay unset rather than being coerced to 0, so fold
/// averages can skip them.
struct MetricSet {
    std::optional<double> auc;
    std::optional<double> recall;
    std::optional<double> precision;
    std::optional<double> f1;
    double threshold = 0.5;
    ConfusionCounts counts;
};

MetricSet compute_metrics(std::span<const double> scores, std::span<const int> labels,
                          double threshold = 0.5);

/// One (fpr, tpr) point per distinct score, descending; tied scores collapse
/// into a single step. Starts at (0,0), ends at (1,1).
std::vector<std::pair<double, double>> roc_points(std::span<const double> scores,
                                                  std::span<const int> labels);

/// Trapezoidal area under roc_points. Equal to the fraction of
/// (positive, negative) pairs ranked correctly, ties counted half.
double auc(std::span<const double> scores, std::span<const int> labels);

struct Pca2Result {
    Matrix projections;  // n x 2
    std::array<std::vector<double>, 2> components;
    std::array<double, 2> variances{};  // variance captured by each component
    bool rank_deficient = false;        // second component zero-filled
};

/// Two-component projection: center columns, power iteration with deflation
/// on the covariance. Each component's largest-magnitude loading is positive.
Pca2Result pca2(const Dataset& ds);

}  // namespace imbrisk
