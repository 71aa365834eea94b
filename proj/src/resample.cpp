#include "imbrisk/resample.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "imbrisk/errors.hpp"
#include "imbrisk/rng.hpp"

namespace imbrisk {
namespace {

std::size_t round_half_up(double x) {
    return static_cast<std::size_t>(std::floor(x + 0.5));
}

void check_spec(const ResampleSpec& spec) {
    if (!(spec.target_positive > 0.0 && spec.target_positive < 1.0)) {
        throw ConfigError("resample: target_positive must be strictly inside (0, 1)");
    }
    if (spec.smote_k < 1) throw ConfigError("resample: smote_k must be at least 1");
}

void check_classes(std::size_t n_pos, std::size_t n_neg) {
    if (n_pos == 0 || n_neg == 0) {
        throw DataError("resample: both classes must be present");
    }
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

Dataset concat_rows(const Dataset& base, std::span<const std::size_t> keep,
                    const Matrix& extra, int extra_label) {
    Dataset out;
    out.feature_names = base.feature_names;
    out.features = Matrix(keep.size() + extra.rows(), base.n_features());
    out.labels.reserve(keep.size() + extra.rows());
    std::size_t r = 0;
    for (std::size_t idx : keep) {
        const auto src = base.features.row(idx);
        std::copy(src.begin(), src.end(), out.features.row(r++).begin());
        out.labels.push_back(base.labels[idx]);
    }
    for (std::size_t i = 0; i < extra.rows(); ++i) {
        const auto src = extra.row(i);
        std::copy(src.begin(), src.end(), out.features.row(r++).begin());
        out.labels.push_back(extra_label);
    }
    return out;
}

}  // namespace

std::string method_name(Method m) {
    switch (m) {
        case Method::None: return "NONE";
        case Method::Rus: return "RUS";
        case Method::Ccus: return "CCUS";
        case Method::Ros: return "ROS";
        case Method::Smote: return "SMOTE";
    }
    return "NONE";
}

Method parse_method(const std::string& name) {
    if (name == "NONE" || name == "none") return Method::None;
    if (name == "RUS" || name == "rus") return Method::Rus;
    if (name == "CCUS" || name == "ccus") return Method::Ccus;
    if (name == "ROS" || name == "ros") return Method::Ros;
    if (name == "SMOTE" || name == "smote") return Method::Smote;
    throw ConfigError("unknown resampling method '" + name + "'");
}

TargetCounts target_counts(std::size_t n_pos, std::size_t n_neg, double p,
                           Direction direction) {
    if (n_pos < 1 || n_neg < 1) throw DataError("target_counts: both classes required");
    if (!(p > 0.0 && p < 1.0)) {
        throw ConfigError("target_counts: target fraction must be strictly inside (0, 1)");
    }
    TargetCounts out;
    if (direction == Direction::Under) {
        out.positives = n_pos;
        const double want = static_cast<double>(n_pos) * (1.0 - p) / p;
        out.negatives = std::min(n_neg, round_half_up(want));
    } else {
        out.negatives = n_neg;
        const double want = static_cast<double>(n_neg) * p / (1.0 - p);
        out.positives = std::max(n_pos, round_half_up(want));
    }
    return out;
}

Matrix kmeans(const Matrix& points, std::size_t k, int max_iter, double tol,
              std::uint64_t seed) {
    const std::size_t m = points.rows();
    const std::size_t d = points.cols();
    if (m == 0) throw DataError("kmeans: empty input");
    if (k == 0 || k > m) throw DataError("kmeans: need 1 <= k <= point count");

    Rng rng(derive_seed(seed, "kmeans"));

    // k-means++ seeding.
    Matrix centroids(k, d);
    std::vector<char> chosen(m, 0);
    std::vector<double> min_d2(m, std::numeric_limits<double>::infinity());
    std::size_t first = rng.index(m);
    chosen[first] = 1;
    std::copy(points.row(first).begin(), points.row(first).end(), centroids.row(0).begin());
    for (std::size_t c = 1; c < k; ++c) {
        double total = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double d2 = squared_distance(points.row(i), centroids.row(c - 1));
            if (d2 < min_d2[i]) min_d2[i] = d2;
            total += chosen[i] ? 0.0 : min_d2[i];
        }
        std::size_t pick = m;
        if (total > 0.0) {
            const double u = rng.uniform() * total;
            double acc = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                if (chosen[i]) continue;
                acc += min_d2[i];
                if (acc >= u) {
                    pick = i;
                    break;
                }
            }
        }
        if (pick == m) {  // all remaining mass is zero (duplicates): first unchosen
            for (std::size_t i = 0; i < m; ++i) {
                if (!chosen[i]) {
                    pick = i;
                    break;
                }
            }
        }
        chosen[pick] = 1;
        std::copy(points.row(pick).begin(), points.row(pick).end(), centroids.row(c).begin());
    }

    std::vector<std::size_t> assignment(m, 0);
    std::vector<double> dist_to_own(m, 0.0);
    std::vector<double> sums(k * d);
    std::vector<std::size_t> counts(k);

    for (int iter = 0; iter < max_iter; ++iter) {
        for (std::size_t i = 0; i < m; ++i) {
            double best = std::numeric_limits<double>::infinity();
            std::size_t best_c = 0;
            const auto p = points.row(i);
            for (std::size_t c = 0; c < k; ++c) {
                const double d2 = squared_distance(p, centroids.row(c));
                if (d2 < best) {
                    best = d2;
                    best_c = c;
                }
            }
            assignment[i] = best_c;
            dist_to_own[i] = best;
        }

        std::fill(sums.begin(), sums.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t i = 0; i < m; ++i) {
            const auto p = points.row(i);
            double* s = sums.data() + assignment[i] * d;
            for (std::size_t j = 0; j < d; ++j) s[j] += p[j];
            ++counts[assignment[i]];
        }

        // Reseed empty clusters at the point farthest from its own centroid.
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] > 0) continue;
            std::size_t far = 0;
            double far_d = -1.0;
            for (std::size_t i = 0; i < m; ++i) {
                if (counts[assignment[i]] > 1 && dist_to_own[i] > far_d) {
                    far_d = dist_to_own[i];
                    far = i;
                }
            }
            const std::size_t old = assignment[far];
            double* s_old = sums.data() + old * d;
            double* s_new = sums.data() + c * d;
            const auto p = points.row(far);
            for (std::size_t j = 0; j < d; ++j) {
                s_old[j] -= p[j];
                s_new[j] += p[j];
            }
            --counts[old];
            ++counts[c];
            assignment[far] = c;
            dist_to_own[far] = 0.0;
        }

        double max_shift = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            double shift = 0.0;
            auto row = centroids.row(c);
            const double* s = sums.data() + c * d;
            for (std::size_t j = 0; j < d; ++j) {
                const double next = s[j] / static_cast<double>(counts[c]);
                const double delta = next - row[j];
                shift += delta * delta;
                row[j] = next;
            }
            max_shift = std::max(max_shift, std::sqrt(shift));
        }
        if (max_shift < tol) break;
    }

    for (double v : centroids.storage()) {
        if (!std::isfinite(v)) throw NumericError("kmeans: non-finite centroid");
    }
    return centroids;
}

Dataset rus(const Dataset& ds, const ResampleSpec& spec) {
    check_spec(spec);
    const auto pos = positive_indices(ds);
    auto neg = negative_indices(ds);
    check_classes(pos.size(), neg.size());

    const auto counts = target_counts(pos.size(), neg.size(), spec.target_positive,
                                      Direction::Under);
    if (counts.negatives == neg.size()) return ds;  // at or behind the current rate

    Rng rng(derive_seed(spec.seed, "rus"));
    rng.shuffle(neg);
    neg.resize(counts.negatives);

    std::vector<std::size_t> keep(pos);
    keep.insert(keep.end(), neg.begin(), neg.end());
    return select_rows(ds, keep);
}

Dataset ccus(const Dataset& ds, const ResampleSpec& spec) {
    check_spec(spec);
    const auto pos = positive_indices(ds);
    const auto neg = negative_indices(ds);
    check_classes(pos.size(), neg.size());

    const auto counts = target_counts(pos.size(), neg.size(), spec.target_positive,
                                      Direction::Under);
    if (counts.negatives == neg.size()) return ds;

    const Dataset neg_rows = select_rows(ds, neg);
    const Matrix centroids = kmeans(neg_rows.features, counts.negatives,
                                    spec.kmeans_max_iter, spec.kmeans_tol, spec.seed);
    return concat_rows(ds, pos, centroids, 0);
}

Dataset ros(const Dataset& ds, const ResampleSpec& spec) {
    check_spec(spec);
    const auto pos = positive_indices(ds);
    const auto neg = negative_indices(ds);
    check_classes(pos.size(), neg.size());

    const auto counts = target_counts(pos.size(), neg.size(), spec.target_positive,
                                      Direction::Over);
    if (counts.positives == pos.size()) return ds;

    Rng rng(derive_seed(spec.seed, "ros"));
    std::vector<std::size_t> keep(ds.n_rows());
    std::iota(keep.begin(), keep.end(), 0);
    for (std::size_t i = pos.size(); i < counts.positives; ++i) {
        keep.push_back(pos[rng.index(pos.size())]);
    }
    return select_rows(ds, keep);
}

Dataset smote(const Dataset& ds, const ResampleSpec& spec) {
    check_spec(spec);
    const auto pos = positive_indices(ds);
    const auto neg = negative_indices(ds);
    check_classes(pos.size(), neg.size());

    const auto counts = target_counts(pos.size(), neg.size(), spec.target_positive,
                                      Direction::Over);
    const std::size_t n_new = counts.positives - pos.size();
    if (n_new == 0) return ds;

    const std::size_t m = pos.size();
    const auto k = static_cast<std::size_t>(spec.smote_k);
    if (m < k + 1) {
        throw DataError("smote: need at least smote_k + 1 minority rows, have " +
                        std::to_string(m));
    }

    // Exact k-NN among the minority rows; ties break by row order.
    const std::size_t d = ds.n_features();
    std::vector<std::size_t> neighbors(m * k);
    std::vector<std::pair<double, std::size_t>> dist(m);
    for (std::size_t a = 0; a < m; ++a) {
        for (std::size_t b = 0; b < m; ++b) {
            dist[b] = {squared_distance(ds.features.row(pos[a]), ds.features.row(pos[b])), b};
        }
        dist[a].first = std::numeric_limits<double>::infinity();  // exclude self
        std::partial_sort(dist.begin(), dist.begin() + static_cast<long>(k), dist.end());
        for (std::size_t j = 0; j < k; ++j) neighbors[a * k + j] = dist[j].second;
    }

    Rng rng(derive_seed(spec.seed, "smote"));
    Matrix synth(n_new, d);
    for (std::size_t s = 0; s < n_new; ++s) {
        const std::size_t a = rng.index(m);
        const std::size_t b = neighbors[a * k + rng.index(k)];
        const double u = rng.uniform();
        const auto x = ds.features.row(pos[a]);
        const auto z = ds.features.row(pos[b]);
        auto out = synth.row(s);
        for (std::size_t j = 0; j < d; ++j) out[j] = x[j] + u * (z[j] - x[j]);
    }

    std::vector<std::size_t> all(ds.n_rows());
    std::iota(all.begin(), all.end(), 0);
    return concat_rows(ds, all, synth, 1);
}

Dataset resample(const Dataset& ds, const ResampleSpec& spec) {
    switch (spec.method) {
        case Method::None: return ds;
        case Method::Rus: return rus(ds, spec);
        case Method::Ccus: return ccus(ds, spec);
        case Method::Ros: return ros(ds, spec);
        case Method::Smote: return smote(ds, spec);
    }
    return ds;
}

}  // namespace imbrisk
