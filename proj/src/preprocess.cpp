#include "imbrisk/preprocess.hpp"

#include <algorithm>
#include <cmath>

#include "imbrisk/errors.hpp"

namespace imbrisk {
namespace {

double median_of(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const std::size_t m = values.size();
    if (m % 2 == 1) return values[m / 2];
    return 0.5 * (values[m / 2 - 1] + values[m / 2]);
}

Dataset keep_columns(const Dataset& ds, const std::vector<std::size_t>& cols) {
    Dataset out;
    out.labels = ds.labels;
    out.features = Matrix(ds.n_rows(), cols.size());
    out.feature_names.reserve(cols.size());
    for (std::size_t c : cols) out.feature_names.push_back(ds.feature_names[c]);
    for (std::size_t i = 0; i < ds.n_rows(); ++i) {
        for (std::size_t j = 0; j < cols.size(); ++j) {
            out.features(i, j) = ds.features(i, cols[j]);
        }
    }
    return out;
}

}  // namespace

std::pair<Dataset, std::vector<std::size_t>> drop_high_missing(const Dataset& ds,
                                                               double threshold) {
    if (!(threshold >= 0.0 && threshold <= 1.0)) {
        throw ConfigError("drop_high_missing: threshold must be in [0, 1]");
    }
    if (ds.n_rows() == 0) throw DataError("drop_high_missing: empty dataset");

    const double n = static_cast<double>(ds.n_rows());
    std::vector<std::size_t> kept;
    for (std::size_t j = 0; j < ds.n_features(); ++j) {
        std::size_t missing = 0;
        for (std::size_t i = 0; i < ds.n_rows(); ++i) {
            if (std::isnan(ds.features(i, j))) ++missing;
        }
        if (static_cast<double>(missing) / n <= threshold) kept.push_back(j);
    }
    if (kept.empty()) throw DataError("drop_high_missing: every column exceeds the threshold");
    return {keep_columns(ds, kept), kept};
}

PreprocessStats fit_preprocess(const Dataset& train, double missing_threshold) {
    if (train.n_rows() == 0) throw DataError("fit_preprocess: empty training set");

    auto [filtered, kept] = drop_high_missing(train, missing_threshold);

    PreprocessStats stats;
    for (std::size_t j = 0; j < filtered.n_features(); ++j) {
        std::vector<double> present;
        present.reserve(filtered.n_rows());
        for (std::size_t i = 0; i < filtered.n_rows(); ++i) {
            const double v = filtered.features(i, j);
            if (!std::isnan(v)) present.push_back(v);
        }
        if (present.empty()) {
            throw DataError("fit_preprocess: column '" + filtered.feature_names[j] +
                            "' has no observed values");
        }
        const double median = median_of(present);

        // Moments over the median-imputed column (imputation precedes
        // standardization in the pipeline).
        double sum = 0.0;
        const double n = static_cast<double>(filtered.n_rows());
        for (std::size_t i = 0; i < filtered.n_rows(); ++i) {
            const double v = filtered.features(i, j);
            sum += std::isnan(v) ? median : v;
        }
        const double mean = sum / n;
        double ss = 0.0;
        for (std::size_t i = 0; i < filtered.n_rows(); ++i) {
            double v = filtered.features(i, j);
            if (std::isnan(v)) v = median;
            ss += (v - mean) * (v - mean);
        }
        const double std_dev = std::sqrt(ss / n);  // population convention
        if (std_dev == 0.0) continue;              // constant column: dropped

        stats.kept_columns.push_back(kept[j]);
        stats.kept_names.push_back(filtered.feature_names[j]);
        stats.medians.push_back(median);
        stats.means.push_back(mean);
        stats.stds.push_back(std_dev);
    }
    if (stats.kept_columns.empty()) {
        throw DataError("fit_preprocess: no usable columns (all constant or too sparse)");
    }
    return stats;
}

Dataset apply_preprocess(const Dataset& ds, const PreprocessStats& stats) {
    std::vector<std::size_t> source_cols;
    source_cols.reserve(stats.kept_names.size());
    for (const auto& name : stats.kept_names) {
        const auto it = std::find(ds.feature_names.begin(), ds.feature_names.end(), name);
        if (it == ds.feature_names.end()) {
            throw DataError("apply_preprocess: column '" + name + "' absent from dataset");
        }
        source_cols.push_back(static_cast<std::size_t>(it - ds.feature_names.begin()));
    }

    Dataset out;
    out.labels = ds.labels;
    out.feature_names = stats.kept_names;
    out.features = Matrix(ds.n_rows(), source_cols.size());
    for (std::size_t j = 0; j < source_cols.size(); ++j) {
        const std::size_t src = source_cols[j];
        for (std::size_t i = 0; i < ds.n_rows(); ++i) {
            double v = ds.features(i, src);
            if (std::isnan(v)) v = stats.medians[j];
            out.features(i, j) = (v - stats.means[j]) / stats.stds[j];
        }
    }
    return out;
}

}  // namespace imbrisk
