#pragma once

#include <span>
#include <vector>

#include "imbrisk/dataset.hpp"

namespace imbrisk {

struct TrainingLog {
    std::size_t iterations = 0;
    double final_objective = 0.0;
    bool converged = false;
    std::vector<double> objective_history;  // one entry per iteration
};

/// Logistic model: p(x) = sigmoid(intercept + x . coefficients).
/// lambda > 0 means the coefficients were fitted under an L1 penalty
/// (the intercept is never penalized).
struct LinearModel {
    double intercept = 0.0;
    std::vector<double> coefficients;
    double lambda = 0.0;
    TrainingLog training_log;
};

/// Numerically stable sigmoid; never overflows for large |eta|.
double sigmoid(double eta);

double predict_proba_linear(const LinearModel& model, std::span<const double> x);
std::vector<double> predict_proba_linear(const LinearModel& model, const Matrix& x);

/// Mean negative log-likelihood and its gradient, exposed so tests can
/// compare the analytic gradient against finite differences.
double logistic_loss(const Dataset& ds, double intercept, std::span<const double> coef);
void logistic_gradient(const Dataset& ds, double intercept, std::span<const double> coef,
                       double& grad_intercept, std::vector<double>& grad_coef);

double soft_threshold(double z, double t);

/// Full-batch gradient descent with backtracking line search on the mean
/// negative log-likelihood. Stops when the gradient max-norm drops below tol.
LinearModel train_lr(const Dataset& ds, int max_iter = 5000, double tol = 1e-6);

/// Proximal gradient (ISTA) for the L1-penalized objective
/// mean_nll + lambda * ||coefficients||_1. The objective never increases;
/// exit satisfies the subgradient optimality conditions within tol.
LinearModel train_l1lr(const Dataset& ds, double lambda, int max_iter = 5000,
                       double tol = 1e-6);

}  // namespace imbrisk
