#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "imbrisk/matrix.hpp"

namespace imbrisk {

/// A feature matrix with binary labels. Missing cells are NaN until imputed.
/// Label 1 is the positive (risky / minority) class.
struct Dataset {
    Matrix features;
    std::vector<int> labels;
    std::vector<std::string> feature_names;

    std::size_t n_rows() const { return features.rows(); }
    std::size_t n_features() const { return features.cols(); }
};

/// Fraction of rows labeled 1. Throws DataError on an empty dataset.
double positive_rate(const Dataset& ds);

std::vector<std::size_t> positive_indices(const Dataset& ds);
std::vector<std::size_t> negative_indices(const Dataset& ds);

/// New dataset holding copies of the given rows, in the given order.
Dataset select_rows(const Dataset& ds, std::span<const std::size_t> rows);

/// Checks structural invariants (shape match, unique names, binary labels).
/// Throws DataError on violation.
void check_dataset(const Dataset& ds);

/// Throws if the dataset is unusable for training: missing or non-finite
/// cells, or fewer than two classes.
void require_trainable(const Dataset& ds);

/// Two Gaussian classes with unit covariance, class means `separation`
/// apart along the first axis. round(n * positive_rate) positive rows.
/// Row order is a seeded shuffle; identical seeds give identical datasets.
Dataset generate_synthetic(std::size_t n, std::size_t d, double positive_rate,
                           double separation, std::uint64_t seed);

/// CSV with a header row; cells equal to missing_token load as NaN.
/// The target column must hold only 0/1 values (missing targets are an error).
Dataset load_csv(const std::string& path, const std::string& target_column,
                 const std::string& missing_token = "");

/// Writes features in column order plus the target as the last column.
/// NaN cells are written as missing_token. Doubles use shortest round-trip form.
void save_csv(const Dataset& ds, const std::string& path,
              const std::string& target_column = "RiskInd",
              const std::string& missing_token = "");

/// Shortest decimal string that parses back to exactly the same double.
std::string format_double(double v);

}  // namespace imbrisk
