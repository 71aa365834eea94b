#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "imbrisk/dataset.hpp"

namespace imbrisk {

/// Column statistics fitted on a training partition only.
/// Columns are matched by name when the stats are applied.
struct PreprocessStats {
    std::vector<std::size_t> kept_columns;  // indices into the fitted dataset
    std::vector<std::string> kept_names;
    std::vector<double> medians;
    std::vector<double> means;
    std::vector<double> stds;  // strictly positive

    bool operator==(const PreprocessStats&) const = default;
};

/// Drops columns whose missing fraction strictly exceeds the threshold.
/// Returns the filtered dataset and the surviving original column indices.
std::pair<Dataset, std::vector<std::size_t>> drop_high_missing(const Dataset& ds,
                                                               double threshold);

/// Fits imputation + standardization statistics on the training partition:
/// high-missing columns dropped, medians over non-missing cells, means and
/// population stds over median-imputed values. Zero-variance columns are
/// dropped (their std would be 0).
PreprocessStats fit_preprocess(const Dataset& train, double missing_threshold = 0.70);

/// Imputes missing cells with the fitted median, then standardizes with the
/// fitted mean/std. Output keeps only the fitted columns, in fitted order.
Dataset apply_preprocess(const Dataset& ds, const PreprocessStats& stats);

}  // namespace imbrisk
