#include "modelmap/matrixcore.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "modelmap/parallel.hpp"

namespace modelmap {

const char* method_name(Method m) {
    switch (m) {
        case Method::uniform: return "uniform";
        case Method::ls: return "ls";
        case Method::kl: return "kl";
    }
    return "?";
}

Method method_from_name(const std::string& name) {
    if (name == "uniform") return Method::uniform;
    if (name == "ls") return Method::ls;
    if (name == "kl") return Method::kl;
    throw InvalidArgument("unknown sampling method: " + name);
}

void validate(const LikelihoodMatrix& L) {
    if (L.values.rows() < 2 || L.values.cols() < 2)
        throw InvalidMatrix("likelihood matrix must be at least 2x2");
    if (!L.values.allFinite())
        throw InvalidMatrix("likelihood matrix has non-finite entries");
    if (!L.model_ids.empty() &&
        static_cast<Index>(L.model_ids.size()) != L.values.rows())
        throw InvalidMatrix("model id count does not match row count");
    if (!L.text_ids.empty() &&
        static_cast<Index>(L.text_ids.size()) != L.values.cols())
        throw InvalidMatrix("text id count does not match column count");
    if (L.clip_threshold && L.values.minCoeff() < *L.clip_threshold)
        throw InvalidMatrix("entries fall below the recorded clip threshold");
}

double percentile_threshold(const Matrix& values, double pct) {
    if (!values.allFinite())
        throw InvalidMatrix("percentile of a non-finite matrix");
    if (!(pct >= 0.0 && pct < 100.0))
        throw InvalidArgument("percentile must lie in [0, 100)");

    std::vector<double> flat(values.data(), values.data() + values.size());
    std::sort(flat.begin(), flat.end());
    const double h = pct / 100.0 * static_cast<double>(flat.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = static_cast<std::size_t>(std::ceil(h));
    const double t = h - static_cast<double>(lo);
    return flat[lo] + t * (flat[hi] - flat[lo]);
}

LikelihoodMatrix clip_lower_percentile(const LikelihoodMatrix& L, double pct) {
    if (!L.values.allFinite())
        throw InvalidMatrix("cannot clip a non-finite matrix");
    const double threshold = percentile_threshold(L.values, pct);
    LikelihoodMatrix out = apply_threshold(L, threshold);
    out.clip_threshold = threshold;
    return out;
}

LikelihoodMatrix apply_threshold(const LikelihoodMatrix& L, double threshold) {
    if (!std::isfinite(threshold))
        throw InvalidArgument("clip threshold must be finite");
    LikelihoodMatrix out = L;
    out.values = L.values.cwiseMax(threshold);
    return out;
}

Matrix double_center(const Matrix& values) {
    Matrix Q = values;
    const Vector row_means = Q.rowwise().mean();
    Q.colwise() -= row_means;
    const Eigen::RowVectorXd col_means = Q.colwise().mean();
    Q.rowwise() -= col_means;
    return Q;
}

CenteredMatrix double_center(const LikelihoodMatrix& L) {
    if (!L.values.allFinite())
        throw InvalidMatrix("cannot center a non-finite matrix");
    return CenteredMatrix{double_center(L.values), L.model_ids, L.text_ids};
}

DistanceMatrix pairwise_distances(const CenteredMatrix& Q, double scale,
                                  int threads) {
    if (!(scale > 0.0)) throw InvalidArgument("distance scale must be > 0");

    const Index K = Q.values.rows();
    const Index N = Q.values.cols();
    // Row-major copy keeps the per-pair inner loop contiguous.
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>
        R = Q.values;

    Matrix g = Matrix::Zero(K, K);
    parallel_for(0, static_cast<std::size_t>(K), threads, [&](std::size_t ii) {
        const auto i = static_cast<Index>(ii);
        const double* qi = R.data() + i * N;
        for (Index j = i + 1; j < K; ++j) {
            const double* qj = R.data() + j * N;
            long double acc = 0.0L;
            for (Index s = 0; s < N; ++s) {
                const double diff = qi[s] - qj[s];
                acc += static_cast<long double>(diff) * diff;
            }
            const double gij = scale * static_cast<double>(acc);
            g(i, j) = gij;
            g(j, i) = gij;
        }
    });

    return DistanceMatrix{std::move(g), scale, DistanceKind::exact,
                          Q.model_ids};
}

Matrix kl_estimate(const DistanceMatrix& g, std::size_t N) {
    if (N == 0) throw InvalidArgument("kl_estimate requires N >= 1");
    if (g.kind == DistanceKind::exact && g.scale != 1.0)
        throw InvalidArgument(
            "kl_estimate needs exact distances with scale 1 (or resampled "
            "distances with N-text comparability)");
    return g.values / (2.0 * static_cast<double>(N));
}

}  // namespace modelmap
