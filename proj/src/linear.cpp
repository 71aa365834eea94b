#include "imbrisk/linear.hpp"

#include <algorithm>
#include <cmath>

#include "imbrisk/errors.hpp"

namespace imbrisk {
namespace {

// softplus(eta) = log(1 + exp(eta)) without overflow.
double softplus(double eta) {
    return std::log1p(std::exp(-std::abs(eta))) + std::max(eta, 0.0);
}

double clamp01(double p) {
    return std::clamp(p, 1e-15, 1.0 - 1e-15);
}

struct LossGrad {
    double loss = 0.0;
    double grad_intercept = 0.0;
    std::vector<double> grad_coef;
};

// Mean negative log-likelihood and gradient in one pass.
LossGrad loss_and_gradient(const Dataset& ds, double intercept,
                           std::span<const double> coef) {
    const std::size_t n = ds.n_rows();
    const std::size_t d = ds.n_features();
    LossGrad out;
    out.grad_coef.assign(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto x = ds.features.row(i);
        double eta = intercept;
        for (std::size_t j = 0; j < d; ++j) eta += x[j] * coef[j];
        const double y = static_cast<double>(ds.labels[i]);
        out.loss += softplus(eta) - y * eta;
        const double r = sigmoid(eta) - y;
        out.grad_intercept += r;
        for (std::size_t j = 0; j < d; ++j) out.grad_coef[j] += r * x[j];
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    out.loss *= inv_n;
    out.grad_intercept *= inv_n;
    for (double& g : out.grad_coef) g *= inv_n;
    return out;
}

double loss_only(const Dataset& ds, double intercept, std::span<const double> coef) {
    double loss = 0.0;
    for (std::size_t i = 0; i < ds.n_rows(); ++i) {
        const auto x = ds.features.row(i);
        double eta = intercept;
        for (std::size_t j = 0; j < x.size(); ++j) eta += x[j] * coef[j];
        loss += softplus(eta) - static_cast<double>(ds.labels[i]) * eta;
    }
    return loss / static_cast<double>(ds.n_rows());
}

double base_rate_intercept(const Dataset& ds) {
    double p = 0.0;
    for (int y : ds.labels) p += y;
    p = clamp01(p / static_cast<double>(ds.labels.size()));
    return std::log(p / (1.0 - p));
}

double l1_norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += std::abs(x);
    return s;
}

}  // namespace

double sigmoid(double eta) {
    if (eta >= 0.0) {
        return 1.0 / (1.0 + std::exp(-eta));
    }
    const double e = std::exp(eta);
    return e / (1.0 + e);
}

double predict_proba_linear(const LinearModel& model, std::span<const double> x) {
    if (x.size() != model.coefficients.size()) {
        throw DataError("predict_proba_linear: dimension mismatch");
    }
    double eta = model.intercept;
    for (std::size_t j = 0; j < x.size(); ++j) eta += x[j] * model.coefficients[j];
    return sigmoid(eta);
}

std::vector<double> predict_proba_linear(const LinearModel& model, const Matrix& x) {
    std::vector<double> out(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        out[i] = predict_proba_linear(model, x.row(i));
    }
    return out;
}

double logistic_loss(const Dataset& ds, double intercept, std::span<const double> coef) {
    return loss_only(ds, intercept, coef);
}

void logistic_gradient(const Dataset& ds, double intercept, std::span<const double> coef,
                       double& grad_intercept, std::vector<double>& grad_coef) {
    auto lg = loss_and_gradient(ds, intercept, coef);
    grad_intercept = lg.grad_intercept;
    grad_coef = std::move(lg.grad_coef);
}

double soft_threshold(double z, double t) {
    if (z > t) return z - t;
    if (z < -t) return z + t;
    return 0.0;
}

LinearModel train_lr(const Dataset& ds, int max_iter, double tol) {
    require_trainable(ds);
    const std::size_t d = ds.n_features();

    LinearModel model;
    model.lambda = 0.0;
    model.coefficients.assign(d, 0.0);
    model.intercept = base_rate_intercept(ds);

    double step = 1.0;
    std::vector<double> trial(d);
    for (int iter = 0; iter < max_iter; ++iter) {
        const auto lg = loss_and_gradient(ds, model.intercept, model.coefficients);
        model.training_log.objective_history.push_back(lg.loss);
        model.training_log.final_objective = lg.loss;

        double max_grad = std::abs(lg.grad_intercept);
        double grad_sq = lg.grad_intercept * lg.grad_intercept;
        for (double g : lg.grad_coef) {
            max_grad = std::max(max_grad, std::abs(g));
            grad_sq += g * g;
        }
        if (max_grad < tol) {
            model.training_log.converged = true;
            break;
        }

        // Backtracking (Armijo); the accepted step seeds the next iteration.
        step *= 2.0;
        bool accepted = false;
        for (int bt = 0; bt < 60; ++bt) {
            const double trial_intercept = model.intercept - step * lg.grad_intercept;
            for (std::size_t j = 0; j < d; ++j) {
                trial[j] = model.coefficients[j] - step * lg.grad_coef[j];
            }
            const double trial_loss = loss_only(ds, trial_intercept, trial);
            if (trial_loss <= lg.loss - 1e-4 * step * grad_sq) {
                model.intercept = trial_intercept;
                model.coefficients.swap(trial);
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) throw NumericError("train_lr: line search failed");
        model.training_log.iterations = static_cast<std::size_t>(iter) + 1;
    }
    return model;
}

LinearModel train_l1lr(const Dataset& ds, double lambda, int max_iter, double tol) {
    require_trainable(ds);
    if (lambda < 0.0) throw ConfigError("train_l1lr: lambda must be non-negative");
    const std::size_t d = ds.n_features();

    LinearModel model;
    model.lambda = lambda;
    model.coefficients.assign(d, 0.0);
    model.intercept = base_rate_intercept(ds);

    double step = 1.0;
    std::vector<double> trial(d);
    for (int iter = 0; iter < max_iter; ++iter) {
        const auto lg = loss_and_gradient(ds, model.intercept, model.coefficients);
        const double objective = lg.loss + lambda * l1_norm(model.coefficients);
        model.training_log.objective_history.push_back(objective);
        model.training_log.final_objective = objective;

        // Subgradient optimality: zero coefficients need |g| <= lambda,
        // active ones need g + lambda*sign(beta) ~ 0.
        bool optimal = std::abs(lg.grad_intercept) <= tol;
        for (std::size_t j = 0; optimal && j < d; ++j) {
            if (model.coefficients[j] == 0.0) {
                optimal = std::abs(lg.grad_coef[j]) <= lambda + tol;
            } else {
                const double sign = model.coefficients[j] > 0.0 ? 1.0 : -1.0;
                optimal = std::abs(lg.grad_coef[j] + lambda * sign) <= tol;
            }
        }
        if (optimal) {
            model.training_log.converged = true;
            break;
        }

        // Proximal step with backtracking on the smooth part's quadratic bound;
        // guarantees the penalized objective never increases.
        step *= 2.0;
        bool accepted = false;
        for (int bt = 0; bt < 60; ++bt) {
            const double trial_intercept = model.intercept - step * lg.grad_intercept;
            for (std::size_t j = 0; j < d; ++j) {
                trial[j] = soft_threshold(model.coefficients[j] - step * lg.grad_coef[j],
                                          step * lambda);
            }
            double linear = (trial_intercept - model.intercept) * lg.grad_intercept;
            double dist_sq = (trial_intercept - model.intercept) *
                             (trial_intercept - model.intercept);
            for (std::size_t j = 0; j < d; ++j) {
                const double delta = trial[j] - model.coefficients[j];
                linear += delta * lg.grad_coef[j];
                dist_sq += delta * delta;
            }
            const double trial_loss = loss_only(ds, trial_intercept, trial);
            if (trial_loss <= lg.loss + linear + dist_sq / (2.0 * step) + 1e-15) {
                model.intercept = trial_intercept;
                model.coefficients.swap(trial);
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) throw NumericError("train_l1lr: proximal line search failed");
        model.training_log.iterations = static_cast<std::size_t>(iter) + 1;
    }
    return model;
}

}  // namespace imbrisk
