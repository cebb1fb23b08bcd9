#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "modelmap/sampling.hpp"
#include "modelmap/types.hpp"

namespace modelmap {

enum class Normalization { relative, absolute };
enum class DuplicateWeighting { weighted, unweighted };

const char* normalization_name(Normalization n);
const char* duplicate_weighting_name(DuplicateWeighting w);

struct ErrorConfig {
    std::size_t R = 100;
    double epsilon0 = 1e-3;
    Normalization normalization = Normalization::relative;
    std::uint64_t base_seed = 0;
    DuplicateWeighting weighting = DuplicateWeighting::weighted;
    RowCenterMode row_center = RowCenterMode::self_normalized;
    int threads = 1;
};

struct ErrorReport {
    Matrix per_pair_mse;  // K x K, mean over replicates of e_ij^2
    double tau = 0.0;     // sqrt of the 1/(K^2 R) double sum
    double tau_se = 0.0;  // standard error of tau^2 across replicates
    std::optional<double> kappa_hat;
    std::optional<double> sigma_hat;
    std::optional<double> tau_unif_N;
    Method method = Method::uniform;
    std::size_t n = 0;
    double mean_d = 0.0;
    double std_d = 0.0;
};

// e~_ij = (g~_ij - g_ij) / max(g_ij, eps0), entry-wise.
Matrix relative_errors(const DistanceMatrix& resampled,
                       const DistanceMatrix& exact, double epsilon0);

// e~_ij = (g~_ij - g_ij) / C with C the grand mean of the exact distances.
Matrix absolute_errors(const DistanceMatrix& resampled,
                       const DistanceMatrix& exact);

// R independent resamples of size n; per replicate the weighted-centered and
// weighted distances are compared against the exact distances. Aggregates
// tau^2 = 1/(K^2 R) sum_{ij,r} e_ij^{(r)2} and the unique-count statistics.
// The overload taking `exact` skips recomputing the full-data distances,
// which dominates at realistic K and N.
ErrorReport resampling_mse(const CenteredMatrix& Q, const SamplingPlan& plan,
                           std::size_t n, const ErrorConfig& cfg);
ErrorReport resampling_mse(const CenteredMatrix& Q, const SamplingPlan& plan,
                           std::size_t n, const ErrorConfig& cfg,
                           const DistanceMatrix& exact);

// Bootstrap estimate of the sampling error of an m-text dataset:
// kappa_hat_m = tau_{unif,m} (n-out-of-N bootstrap, duplicates weighted).
double kappa_hat(const CenteredMatrix& Q, std::size_t m, const ErrorConfig& cfg);
double kappa_hat(const CenteredMatrix& Q, std::size_t m, const ErrorConfig& cfg,
                 const DistanceMatrix& exact);

// sqrt(tau_unif_N^2 + tau_method_n^2).
double sigma_hat(double tau_method_n, double tau_unif_N);

// sqrt(N/d) * kappa_N.
double theoretical_kappa(double kappa_N, std::size_t N, std::size_t d);

// tau_{unif,N} for Q, memoized on (content digest, config).
double tau_unif_full(const CenteredMatrix& Q, const ErrorConfig& cfg);

struct MinNResult {
    std::vector<ErrorReport> trace;       // one report per scanned n
    std::optional<std::size_t> found;     // index into trace, if reached
    double kappa_m = 0.0;

    bool reached() const { return found.has_value(); }
    const ErrorReport& report() const { return trace.at(*found); }
};

// Scans n_grid (ascending) and stops at the smallest n with
// sigma_hat_{method,n} <= kappa_hat_m. Grids where no point qualifies
// return an unreached result.
MinNResult find_min_n(const CenteredMatrix& Q, Method method, std::size_t m,
                      const ErrorConfig& cfg,
                      const std::vector<std::size_t>& n_grid);

// {10,20,...,100, 200,...,1000, 2000,...,10000}
std::vector<std::size_t> default_n_grid();

SamplingPlan make_plan(const CenteredMatrix& Q, Method method);

}  // namespace modelmap
