#include "modelmap/sampling.hpp"

#include <algorithm>
#include <cmath>

#include "modelmap/digest.hpp"
#include "modelmap/rng.hpp"

namespace modelmap {

const char* row_center_mode_name(RowCenterMode mode) {
    return mode == RowCenterMode::self_normalized ? "self-normalized"
                                                  : "horvitz-thompson";
}

namespace {

Vector normalized_or_throw(Vector raw, const char* what) {
    const double total = raw.sum();
    if (!(total > 0.0)) throw DegenerateMatrix(what);
    return raw / total;
}

}  // namespace

SamplingPlan plan_uniform(const CenteredMatrix& Q) {
    const Index N = Q.values.cols();
    Vector probs = Vector::Constant(N, 1.0 / static_cast<double>(N));
    return SamplingPlan{Method::uniform, std::move(probs),
                        matrix_digest(Q.values)};
}

SamplingPlan plan_ls(const CenteredMatrix& Q) {
    const Index K = Q.values.rows();
    const Index N = Q.values.cols();
    Vector raw(N);
    for (Index s = 0; s < N; ++s) {
        long double acc = 0.0L;
        for (Index i = 0; i < K; ++i) {
            const double v = Q.values(i, s);
            acc += static_cast<long double>(v) * v;
        }
        raw(s) = static_cast<double>(acc);
    }
    return SamplingPlan{Method::ls,
                        normalized_or_throw(std::move(raw),
                                            "length-squared plan: all columns zero"),
                        matrix_digest(Q.values)};
}

SamplingPlan plan_kl(const CenteredMatrix& Q) {
    const Index K = Q.values.rows();
    const Index N = Q.values.cols();
    // sum_{i,j} (a_i - a_j)^4 expands to 2K*S4 - 8*S1*S3 + 6*S2^2 with
    // S_k = sum_i a_i^k, which drops the O(K^2) pair loop per column.
    Vector raw(N);
    for (Index s = 0; s < N; ++s) {
        long double s1 = 0.0L, s2 = 0.0L, s3 = 0.0L, s4 = 0.0L;
        for (Index i = 0; i < K; ++i) {
            const long double a = Q.values(i, s);
            const long double a2 = a * a;
            s1 += a;
            s2 += a2;
            s3 += a2 * a;
            s4 += a2 * a2;
        }
        long double fourth =
            2.0L * static_cast<long double>(K) * s4 - 8.0L * s1 * s3 + 6.0L * s2 * s2;
        if (fourth < 0.0L) fourth = 0.0L;  // cancellation guard
        raw(s) = static_cast<double>(std::sqrt(static_cast<double>(fourth)));
    }
    return SamplingPlan{Method::kl,
                        normalized_or_throw(std::move(raw),
                                            "kl plan: all columns zero"),
                        matrix_digest(Q.values)};
}

AliasTable::AliasTable(const Vector& probs) {
    const Index N = probs.size();
    if (N == 0) throw InvalidArgument("alias table needs at least one entry");
    prob_.assign(static_cast<std::size_t>(N), 0.0);
    alias_.assign(static_cast<std::size_t>(N), 0);

    std::vector<double> scaled(static_cast<std::size_t>(N));
    for (Index s = 0; s < N; ++s) {
        if (!(probs(s) >= 0.0))
            throw InvalidArgument("alias table probabilities must be >= 0");
        scaled[static_cast<std::size_t>(s)] =
            probs(s) * static_cast<double>(N);
    }

    std::vector<Index> small, large;
    for (Index s = 0; s < N; ++s) {
        (scaled[static_cast<std::size_t>(s)] < 1.0 ? small : large).push_back(s);
    }
    while (!small.empty() && !large.empty()) {
        const Index s = small.back();
        small.pop_back();
        const Index l = large.back();
        large.pop_back();
        prob_[static_cast<std::size_t>(s)] = scaled[static_cast<std::size_t>(s)];
        alias_[static_cast<std::size_t>(s)] = l;
        scaled[static_cast<std::size_t>(l)] -=
            1.0 - scaled[static_cast<std::size_t>(s)];
        (scaled[static_cast<std::size_t>(l)] < 1.0 ? small : large).push_back(l);
    }
    // Leftovers are 1 up to rounding. Zero-probability entries stay at
    // prob 0 because they always pair up through the small stack first.
    for (const Index l : large) prob_[static_cast<std::size_t>(l)] = 1.0;
    for (const Index s : small)
        prob_[static_cast<std::size_t>(s)] =
            scaled[static_cast<std::size_t>(s)] == 0.0 ? 0.0 : 1.0;
}

Index AliasTable::sample(std::mt19937_64& rng) const {
    const auto N = static_cast<std::size_t>(size());
    const double u1 = uniform01(rng);
    auto cell = static_cast<std::size_t>(u1 * static_cast<double>(N));
    if (cell >= N) cell = N - 1;
    const double u2 = uniform01(rng);
    return u2 < prob_[cell] ? static_cast<Index>(cell) : alias_[cell];
}

ResampleDraw draw(const SamplingPlan& plan, std::size_t n, std::uint64_t seed) {
    return draw(AliasTable(plan.probs), plan, n, seed);
}

ResampleDraw draw(const AliasTable& table, const SamplingPlan& plan,
                  std::size_t n, std::uint64_t seed) {
    if (n == 0) throw InvalidArgument("draw size n must be >= 1");
    const Index N = plan.probs.size();
    if (table.size() != N)
        throw InvalidArgument("alias table does not match the plan");

    std::mt19937_64 rng(seed);
    std::vector<std::uint64_t> counts(static_cast<std::size_t>(N), 0);
    for (std::size_t t = 0; t < n; ++t)
        ++counts[static_cast<std::size_t>(table.sample(rng))];

    ResampleDraw out;
    out.n = n;
    out.seed = seed;
    out.population_size = N;
    for (Index s = 0; s < N; ++s) {
        const std::uint64_t c = counts[static_cast<std::size_t>(s)];
        if (c == 0) continue;
        out.unique_indices.push_back(s);
        out.counts.push_back(c);
    }
    const auto d = out.unique_indices.size();
    out.weights.resize(static_cast<Index>(d));
    for (std::size_t t = 0; t < d; ++t) {
        const double pi = plan.probs(out.unique_indices[t]);
        out.weights(static_cast<Index>(t)) =
            static_cast<double>(out.counts[t]) /
            (static_cast<double>(n) * pi);
    }
    return out;
}

Matrix restrict_columns(const Matrix& values, const std::vector<Index>& indices) {
    Matrix out(values.rows(), static_cast<Index>(indices.size()));
    for (std::size_t t = 0; t < indices.size(); ++t) {
        if (indices[t] < 0 || indices[t] >= values.cols())
            throw InvalidArgument("column index out of range");
        out.col(static_cast<Index>(t)) = values.col(indices[t]);
    }
    return out;
}

WeightedCoordinates weighted_center_with_weights(
    const Matrix& unique_columns, const ResampleDraw& draw,
    const Vector& weights, RowCenterMode mode,
    std::vector<std::string> model_ids) {
    const Index K = unique_columns.rows();
    const Index d = unique_columns.cols();
    if (d != static_cast<Index>(draw.unique_count()))
        throw InvalidArgument(
            "matrix columns do not match the draw's unique texts");
    if (weights.size() != d)
        throw InvalidArgument("weight count does not match unique texts");

    const double wsum = weights.sum();
    const double denom = mode == RowCenterMode::self_normalized
                             ? wsum
                             : static_cast<double>(draw.population_size);
    if (!(denom > 0.0) || wsum == 0.0)
        throw DegenerateDraw("weighted centering with zero total weight");

    Matrix Q(K, d);
    for (Index i = 0; i < K; ++i) {
        long double acc = 0.0L;
        for (Index t = 0; t < d; ++t)
            acc += static_cast<long double>(weights(t)) * unique_columns(i, t);
        const double mean = static_cast<double>(acc) / denom;
        for (Index t = 0; t < d; ++t) Q(i, t) = unique_columns(i, t) - mean;
    }
    const Eigen::RowVectorXd col_means = Q.colwise().mean();
    Q.rowwise() -= col_means;

    return WeightedCoordinates{std::move(Q), weights, draw,
                               std::move(model_ids)};
}

WeightedCoordinates weighted_center(const Matrix& unique_columns,
                                    const ResampleDraw& draw,
                                    RowCenterMode mode,
                                    std::vector<std::string> model_ids) {
    return weighted_center_with_weights(unique_columns, draw, draw.weights,
                                        mode, std::move(model_ids));
}

WeightedCoordinates weighted_center(const LikelihoodMatrix& restricted,
                                    const ResampleDraw& draw,
                                    RowCenterMode mode) {
    return weighted_center(restricted.values, draw, mode, restricted.model_ids);
}

DistanceMatrix weighted_distance(const WeightedCoordinates& W) {
    const Index K = W.values.rows();
    const Index d = W.values.cols();
    Matrix g = Matrix::Zero(K, K);
    for (Index i = 0; i < K; ++i) {
        for (Index j = i + 1; j < K; ++j) {
            long double acc = 0.0L;
            for (Index t = 0; t < d; ++t) {
                const double diff = W.values(i, t) - W.values(j, t);
                acc += static_cast<long double>(W.weights(t)) * diff * diff;
            }
            const double gij = static_cast<double>(acc);
            g(i, j) = gij;
            g(j, i) = gij;
        }
    }
    return DistanceMatrix{std::move(g), 1.0, DistanceKind::resampled,
                          W.model_ids};
}

}  // namespace modelmap
