#pragma once

#include "modelmap/types.hpp"

namespace modelmap {

// Throws InvalidMatrix unless all entries are finite, K >= 2, N >= 2, ids
// match the matrix shape and every entry respects the clip threshold.
void validate(const LikelihoodMatrix& L);

// Threshold at the pct-th percentile of the flattened entries: sort all K*N
// values ascending, h = (pct/100)*(K*N-1), interpolate linearly between the
// floor(h)-th and ceil(h)-th order statistics.
double percentile_threshold(const Matrix& values, double pct);

// Replace every entry below the pct-th percentile value by that value and
// record it as the clip threshold.
LikelihoodMatrix clip_lower_percentile(const LikelihoodMatrix& L, double pct);

// Entry-wise max(entry, threshold); clips new models with a stored threshold.
LikelihoodMatrix apply_threshold(const LikelihoodMatrix& L, double threshold);

// Subtract each row's mean, then each column's mean of the row-centered
// matrix. Idempotent; equals L - rowmean - colmean + grandmean.
CenteredMatrix double_center(const LikelihoodMatrix& L);
Matrix double_center(const Matrix& values);

// g_ij = scale * sum_s (q_i(x_s) - q_j(x_s))^2 with fixed ascending-s
// summation in long double, so results do not depend on `threads`.
DistanceMatrix pairwise_distances(const CenteredMatrix& Q, double scale,
                                  int threads = 1);

// KL_ij = g_ij / (2N). Requires exact distances with scale 1, or resampled
// distances whose weights already carry the N-text comparability.
Matrix kl_estimate(const DistanceMatrix& g, std::size_t N);

}  // namespace modelmap
