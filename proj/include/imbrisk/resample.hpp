#pragma once

#include <cstdint>
#include <string>

#include "imbrisk/dataset.hpp"

namespace imbrisk {

enum class Method { None, Rus, Ccus, Ros, Smote };

std::string method_name(Method m);
Method parse_method(const std::string& name);  // throws ConfigError

struct ResampleSpec {
    Method method = Method::None;
    double target_positive = 0.5;  // in (0, 1)
    int smote_k = 5;
    int kmeans_max_iter = 100;
    double kmeans_tol = 1e-6;
    std::uint64_t seed = 0;
};

enum class Direction { Under, Over };

struct TargetCounts {
    std::size_t positives = 0;
    std::size_t negatives = 0;
};

/// Row counts needed to reach positive fraction p. Undersampling keeps all
/// positives and caps the negative draw at what exists; oversampling keeps
/// all negatives and never drops below the current positive count, so a
/// target "behind" the current rate is a no-op. Rounding is half-up.
TargetCounts target_counts(std::size_t n_pos, std::size_t n_neg, double p,
                           Direction direction);

/// Lloyd's algorithm with k-means++ seeding, one seeded initialization.
/// Empty clusters are reseeded at the point farthest from its centroid.
Matrix kmeans(const Matrix& points, std::size_t k, int max_iter, double tol,
              std::uint64_t seed);

Dataset rus(const Dataset& ds, const ResampleSpec& spec);
Dataset ccus(const Dataset& ds, const ResampleSpec& spec);
Dataset ros(const Dataset& ds, const ResampleSpec& spec);
Dataset smote(const Dataset& ds, const ResampleSpec& spec);

/// Dispatch on spec.method; Method::None returns the input unchanged.
Dataset resample(const Dataset& ds, const ResampleSpec& spec);

}  // namespace imbrisk
