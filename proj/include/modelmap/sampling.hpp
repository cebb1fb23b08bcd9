#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "modelmap/types.hpp"

namespace modelmap {

// How the row-wise weighted mean is normalized before subtraction.
// `self_normalized` divides by the sum of weights (exact in the n = N
// uniform case); `horvitz_thompson` divides by N.
enum class RowCenterMode { self_normalized, horvitz_thompson };

const char* row_center_mode_name(RowCenterMode mode);

// pi_s = 1/N for every text.
SamplingPlan plan_uniform(const CenteredMatrix& Q);

// Length-Squared sampling: pi_s proportional to the squared Euclidean norm
// of column s. Zero-norm columns get probability 0.
SamplingPlan plan_ls(const CenteredMatrix& Q);

// pi_s proportional to sqrt(sum_{i,j} (q_i(x_s) - q_j(x_s))^4), the
// resampling distribution that minimizes the expected squared error of the
// pairwise squared-distance estimates.
SamplingPlan plan_kl(const CenteredMatrix& Q);

// Walker/Vose alias table; O(N) construction, O(1) per sample. Entries with
// probability exactly 0 are never returned.
class AliasTable {
public:
    explicit AliasTable(const Vector& probs);

    Index sample(std::mt19937_64& rng) const;
    Index size() const { return static_cast<Index>(prob_.size()); }

private:
    std::vector<double> prob_;
    std::vector<Index> alias_;
};

// n categorical draws with replacement; deterministic given (plan, n, seed).
ResampleDraw draw(const SamplingPlan& plan, std::size_t n, std::uint64_t seed);
ResampleDraw draw(const AliasTable& table, const SamplingPlan& plan,
                  std::size_t n, std::uint64_t seed);

// Columns of `values` picked at the given indices, in index order.
Matrix restrict_columns(const Matrix& values, const std::vector<Index>& indices);

// Weighted double centering of a K x d matrix whose columns are the draw's
// unique texts: subtract from each row its weighted mean, then subtract each
// column's unweighted mean over models.
WeightedCoordinates weighted_center(const Matrix& unique_columns,
                                    const ResampleDraw& draw,
                                    RowCenterMode mode = RowCenterMode::self_normalized,
                                    std::vector<std::string> model_ids = {});
WeightedCoordinates weighted_center(const LikelihoodMatrix& restricted,
                                    const ResampleDraw& draw,
                                    RowCenterMode mode = RowCenterMode::self_normalized);

// Same, but with explicit weights instead of the draw's inverse-probability
// weights (used by the unweighted-duplicates error mode).
WeightedCoordinates weighted_center_with_weights(
    const Matrix& unique_columns, const ResampleDraw& draw,
    const Vector& weights, RowCenterMode mode = RowCenterMode::self_normalized,
    std::vector<std::string> model_ids = {});

// g~_ij = sum_t w_t (q~_i(x_{u_t}) - q~_j(x_{u_t}))^2. The weights already
// carry the N/n comparability factor, so no extra scale is applied.
DistanceMatrix weighted_distance(const WeightedCoordinates& W);

}  // namespace modelmap
