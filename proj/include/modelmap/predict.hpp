#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "modelmap/types.hpp"

namespace modelmap {

// Explanatory matrix Q~_d W_d^{1/2}: column t scaled by sqrt(c(u_t)/(n pi)).
Matrix feature_matrix(const WeightedCoordinates& W);

// Exact minimizer of ||f - X theta||^2 + alpha ||theta||^2, no intercept.
// Solves the d x d primal system when d <= K, otherwise the K x K dual.
RidgeFit ridge_fit(const Matrix& X, const Vector& f, double alpha);

// Scales the coordinates by W^{1/2} first and records the scaling in the fit.
RidgeFit ridge_fit(const WeightedCoordinates& W, const Vector& f, double alpha);

Vector ridge_predict(const Matrix& X, const RidgeFit& fit);

double pearson_r(std::span<const double> a, std::span<const double> b);
double pearson_r(const Vector& a, const Vector& b);

struct CvConfig {
    std::vector<double> alpha_grid;
    int outer_folds = 5;
    int inner_folds = 5;
    std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
    std::optional<std::pair<double, double>> clip;  // e.g. {0, 100}
};

struct CvResult {
    Matrix predictions;               // K x #seeds
    std::vector<double> r_per_seed;
    double r_mean = 0.0;
    double r_std = 0.0;
    std::vector<double> selected_alphas;  // one per (seed, outer fold)
};

// Outer 5-fold CV with group-aware folds (models of one type stay together),
// inner 5-fold CV selecting alpha by mean validation MSE, optional clipping
// of predictions. Pearson r is computed per seed over all assembled
// predictions.
CvResult nested_cv_predict(const Matrix& X, const ScoreTable& scores,
                           const std::string& task, const CvConfig& cfg);

// alpha in {10^1, ..., 10^9}: benchmark-score targets (clipped to [0,100]).
std::vector<double> alpha_grid_scores();
// alpha in {10^-4, ..., 10^4}: mean log-likelihood target (no clipping).
std::vector<double> alpha_grid_loglik();

}  // namespace modelmap
