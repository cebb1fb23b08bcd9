#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "modelmap/types.hpp"

namespace modelmap {
namespace oracle {

// Exact moments of the weighted distance estimator, obtained by walking all
// N^n ordered draws. Follows the convention of the optimality analysis:
// columns are taken from the already-centered Q with per-occurrence weight
// 1/(n*pi), without re-centering.
struct EnumerationResult {
    Matrix expectation;
    Matrix variance;
    std::size_t support_size = 0;  // N^n
};

// Visits every ordered draw over the plan's support (texts with pi > 0) with
// its probability. The tuple holds text indices; `fn(tuple, prob)`.
void for_each_draw(const Vector& probs, std::size_t n,
                   const std::function<void(const std::vector<Index>&, double)>& fn);

// Guard: throws BudgetExceeded when N^n > 10^6.
EnumerationResult enumerate_moments(const CenteredMatrix& Q,
                                    const SamplingPlan& plan, std::size_t n);

// Var(g~_ij) = (1/n) [ sum_s (q_i(x_s)-q_j(x_s))^4 / pi_s  -  ||q_i-q_j||^4 ].
// Terms with zero difference contribute 0 regardless of pi; a nonzero
// difference on a zero-probability text is an InvalidPlan.
Matrix closed_form_variance(const CenteredMatrix& Q, const SamplingPlan& plan,
                            std::size_t n);

// sum_{ij} Var(g~_ij) for arbitrary probabilities; +inf when some text with a
// nonzero fourth-moment contribution has probability 0.
double kl_objective(const CenteredMatrix& Q, const Vector& probs, std::size_t n);

// E || Q~ W Q~^T - Q Q^T ||_F^2, evaluated exactly by enumeration.
double ls_objective(const CenteredMatrix& Q, const Vector& probs, std::size_t n);

struct SimplexResult {
    Vector probs;
    double objective = 0.0;
};

// Grid search over the probability simplex at the given step (stars and
// bars). Objectives as above; infeasible points are skipped.
SimplexResult simplex_search_kl(const CenteredMatrix& Q, std::size_t n,
                                double step);
SimplexResult simplex_search_ls(const CenteredMatrix& Q, std::size_t n,
                                double step);

// Visits every grid point of the simplex {k/m : sum k = m} for external
// slack computations.
void for_each_simplex_point(Index dims, std::size_t steps,
                            const std::function<void(const Vector&)>& fn);

// E[d] = sum_s (1 - (1 - pi_s)^n).
double expected_unique(const SamplingPlan& plan, std::size_t n);

}  // namespace oracle
}  // namespace modelmap
