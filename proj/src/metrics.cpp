#include "imbrisk/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "imbrisk/errors.hpp"
#include "imbrisk/log.hpp"

namespace imbrisk {
namespace {

void check_scores(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) {
        throw DataError("scores and labels differ in length");
    }
    if (scores.empty()) throw DataError("no scores to evaluate");
}

std::pair<std::size_t, std::size_t> class_totals(std::span<const int> labels) {
    std::size_t pos = 0;
    for (int y : labels) pos += y == 1;
    return {pos, labels.size() - pos};
}

}  // namespace

ConfusionCounts confusion(std::span<const double> scores, std::span<const int> labels,
                          double threshold) {
    check_scores(scores, labels);
    ConfusionCounts c;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool predicted = scores[i] >= threshold;
        if (labels[i] == 1) {
            (predicted ? c.tp : c.fn) += 1;
        } else {
            (predicted ? c.fp : c.tn) += 1;
        }
    }
    return c;
}

double recall(const ConfusionCounts& c) {
    if (c.tp + c.fn == 0) throw DataError("recall undefined: no actual positives");
    return static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
}

double precision(const ConfusionCounts& c) {
    if (c.tp + c.fp == 0) throw DataError("precision undefined: nothing predicted positive");
    return static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
}

double f1(double precision, double recall) {
    if (precision + recall == 0.0) return 0.0;
    return 2.0 * precision * recall / (precision + recall);
}

MetricSet compute_metrics(std::span<const double> scores, std::span<const int> labels,
                          double threshold) {
    MetricSet m;
    m.threshold = threshold;
    m.counts = confusion(scores, labels, threshold);
    if (m.counts.tp + m.counts.fn > 0) m.recall = recall(m.counts);
    if (m.counts.tp + m.counts.fp > 0) m.precision = precision(m.counts);
    if (m.recall && m.precision) m.f1 = f1(*m.precision, *m.recall);
    const auto [pos, neg] = class_totals(labels);
    if (pos > 0 && neg > 0) m.auc = auc(scores, labels);
    return m;
}

std::vector<std::pair<double, double>> roc_points(std::span<const double> scores,
                                                  std::span<const int> labels) {
    check_scores(scores, labels);
    const auto [pos, neg] = class_totals(labels);
    if (pos == 0 || neg == 0) throw DataError("roc_points: both classes required");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return scores[a] > scores[b];
    });

    std::vector<std::pair<double, double>> points;
    points.emplace_back(0.0, 0.0);
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        const double s = scores[order[i]];
        // Consume the whole tie group as a single step.
        while (i < order.size() && scores[order[i]] == s) {
            (labels[order[i]] == 1 ? tp : fp) += 1;
            ++i;
        }
        points.emplace_back(static_cast<double>(fp) / static_cast<double>(neg),
                            static_cast<double>(tp) / static_cast<double>(pos));
    }
    return points;
}

double auc(std::span<const double> scores, std::span<const int> labels) {
    const auto points = roc_points(scores, labels);
    double area = 0.0;
    for (std::size_t i = 1; i < points.size(); ++i) {
        const auto [x0, y0] = points[i - 1];
        const auto [x1, y1] = points[i];
        area += (x1 - x0) * (y0 + y1) / 2.0;
    }
    return area;
}

Pca2Result pca2(const Dataset& ds) {
    const std::size_t n = ds.n_rows();
    const std::size_t d = ds.n_features();
    if (d < 2) throw DataError("pca2: need at least 2 features");
    if (n < 3) throw DataError("pca2: need at least 3 rows");
    for (double v : ds.features.storage()) {
        if (!std::isfinite(v)) throw NumericError("pca2: features must be finite");
    }

    std::vector<double> mean(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = ds.features.row(i);
        for (std::size_t j = 0; j < d; ++j) mean[j] += row[j];
    }
    for (double& m : mean) m /= static_cast<double>(n);

    Matrix cov(d, d);
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = ds.features.row(i);
        for (std::size_t a = 0; a < d; ++a) {
            const double va = row[a] - mean[a];
            for (std::size_t b = a; b < d; ++b) {
                cov(a, b) += va * (row[b] - mean[b]);
            }
        }
    }
    for (std::size_t a = 0; a < d; ++a) {
        for (std::size_t b = a; b < d; ++b) {
            cov(a, b) /= static_cast<double>(n);
            cov(b, a) = cov(a, b);
        }
    }

    const auto power_iterate = [&](const Matrix& m_work) {
        // Deterministic start: axis of the largest diagonal entry.
        std::size_t start = 0;
        for (std::size_t j = 1; j < d; ++j) {
            if (m_work(j, j) > m_work(start, start)) start = j;
        }
        std::vector<double> v(d, 0.0);
        v[start] = 1.0;
        std::vector<double> next(d);
        double eigenvalue = 0.0;
        for (int iter = 0; iter < 1000; ++iter) {
            for (std::size_t a = 0; a < d; ++a) {
                double s = 0.0;
                for (std::size_t b = 0; b < d; ++b) s += m_work(a, b) * v[b];
                next[a] = s;
            }
            double norm = 0.0;
            for (double x : next) norm += x * x;
            norm = std::sqrt(norm);
            if (norm == 0.0) {
                eigenvalue = 0.0;
                break;
            }
            double delta = 0.0;
            for (std::size_t a = 0; a < d; ++a) {
                next[a] /= norm;
                delta = std::max(delta, std::abs(next[a] - v[a]));
            }
            v.swap(next);
            eigenvalue = norm;
            if (delta < 1e-13) break;
        }
        // Largest-magnitude loading positive.
        std::size_t arg = 0;
        for (std::size_t j = 1; j < d; ++j) {
            if (std::abs(v[j]) > std::abs(v[arg])) arg = j;
        }
        if (v[arg] < 0.0) {
            for (double& x : v) x = -x;
        }
        return std::make_pair(v, eigenvalue);
    };

    Pca2Result result;
    auto [v1, lambda1] = power_iterate(cov);
    result.components[0] = v1;
    result.variances[0] = lambda1;

    Matrix deflated = cov;
    for (std::size_t a = 0; a < d; ++a) {
        for (std::size_t b = 0; b < d; ++b) {
            deflated(a, b) -= lambda1 * v1[a] * v1[b];
        }
    }
    auto [v2, lambda2] = power_iterate(deflated);
    const double scale = std::max(lambda1, 1.0);
    if (lambda2 <= 1e-12 * scale) {
        result.rank_deficient = true;
        result.components[1].assign(d, 0.0);
        result.variances[1] = 0.0;
        log_warn("pca2: data rank < 2, second component zero-filled");
    } else {
        result.components[1] = v2;
        result.variances[1] = lambda2;
    }

    result.projections = Matrix(n, 2);
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = ds.features.row(i);
        double p1 = 0.0;
        double p2 = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double centered = row[j] - mean[j];
            p1 += centered * result.components[0][j];
            p2 += centered * result.components[1][j];
        }
        result.projections(i, 0) = p1;
        result.projections(i, 1) = p2;
    }
    return result;
}

}  // namespace imbrisk
