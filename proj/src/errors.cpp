#include "modelmap/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <mutex>
#include <tuple>

#include "modelmap/digest.hpp"
#include "modelmap/matrixcore.hpp"
#include "modelmap/parallel.hpp"
#include "modelmap/rng.hpp"

namespace modelmap {

const char* normalization_name(Normalization n) {
    return n == Normalization::relative ? "relative" : "absolute";
}

const char* duplicate_weighting_name(DuplicateWeighting w) {
    return w == DuplicateWeighting::weighted ? "weighted"
                                             : "unweighted-duplicates";
}

SamplingPlan make_plan(const CenteredMatrix& Q, Method method) {
    switch (method) {
        case Method::uniform: return plan_uniform(Q);
        case Method::ls: return plan_ls(Q);
        case Method::kl: return plan_kl(Q);
    }
    throw InvalidArgument("unknown method");
}

Matrix relative_errors(const DistanceMatrix& resampled,
                       const DistanceMatrix& exact, double epsilon0) {
    if (resampled.values.rows() != exact.values.rows() ||
        resampled.values.cols() != exact.values.cols())
        throw InvalidArgument("distance matrices have mismatched shapes");
    if (!(epsilon0 > 0.0)) throw InvalidArgument("epsilon0 must be > 0");
    const Index K = exact.values.rows();
    Matrix e(K, K);
    for (Index j = 0; j < K; ++j)
        for (Index i = 0; i < K; ++i)
            e(i, j) = (resampled.values(i, j) - exact.values(i, j)) /
                      std::max(exact.values(i, j), epsilon0);
    return e;
}

Matrix absolute_errors(const DistanceMatrix& resampled,
                       const DistanceMatrix& exact) {
    if (resampled.values.rows() != exact.values.rows() ||
        resampled.values.cols() != exact.values.cols())
        throw InvalidArgument("distance matrices have mismatched shapes");
    const Index K = exact.values.rows();
    const double C = exact.values.sum() / static_cast<double>(K * K);
    if (!(C > 0.0))
        throw DegenerateDistances("grand-mean normalizer C is zero");
    return (resampled.values - exact.values) / C;
}

namespace {

constexpr std::size_t kReplicateBlock = 32;

// Everything one replicate contributes to the aggregate.
struct ReplicateStat {
    double sq_sum = 0.0;  // sum_{ij} e_ij^2
    double d = 0.0;       // unique-text count
};

}  // namespace

ErrorReport resampling_mse(const CenteredMatrix& Q, const SamplingPlan& plan,
                           std::size_t n, const ErrorConfig& cfg) {
    return resampling_mse(Q, plan, n, cfg,
                          pairwise_distances(Q, 1.0, cfg.threads));
}

ErrorReport resampling_mse(const CenteredMatrix& Q, const SamplingPlan& plan,
                           std::size_t n, const ErrorConfig& cfg,
                           const DistanceMatrix& exact) {
    if (n == 0) throw InvalidArgument("resampling_mse requires n >= 1");
    if (cfg.R == 0) throw InvalidArgument("replicate count R must be >= 1");
    if (plan.probs.size() != Q.values.cols())
        throw InvalidArgument("plan does not match the matrix");
    if (exact.values.rows() != Q.values.rows())
        throw InvalidArgument("exact distances do not match the matrix");

    const Index K = Q.values.rows();
    const Index N = Q.values.cols();

    const AliasTable table(plan.probs);
    const std::size_t R = cfg.R;
    const std::size_t nblocks = (R + kReplicateBlock - 1) / kReplicateBlock;

    // Per-replicate scalars plus per-block partial pair sums. Blocks are a
    // fixed partition of the replicate range, so the reduction below is
    // identical for every thread count.
    std::vector<ReplicateStat> stats(R);
    std::vector<Matrix> block_sums(nblocks);

    parallel_for(0, nblocks, cfg.threads, [&](std::size_t b) {
        Matrix pair_sum = Matrix::Zero(K, K);
        const std::size_t lo = b * kReplicateBlock;
        const std::size_t hi = std::min(R, lo + kReplicateBlock);
        for (std::size_t r = lo; r < hi; ++r) {
            const std::uint64_t seed = derive_seed(cfg.base_seed, r);
            const ResampleDraw dr = draw(table, plan, n, seed);

            WeightedCoordinates wc = [&] {
                const Matrix cols = restrict_columns(Q.values, dr.unique_indices);
                if (cfg.weighting == DuplicateWeighting::weighted)
                    return weighted_center(cols, dr, cfg.row_center);
                // Unweighted duplicates: every unique text once with the
                // plain N/d comparability weight.
                const auto d = static_cast<Index>(dr.unique_count());
                const Vector w = Vector::Constant(
                    d, static_cast<double>(N) / static_cast<double>(d));
                return weighted_center_with_weights(cols, dr, w, cfg.row_center);
            }();

            const DistanceMatrix g_tilde = weighted_distance(wc);
            const Matrix e = cfg.normalization == Normalization::relative
                                 ? relative_errors(g_tilde, exact, cfg.epsilon0)
                                 : absolute_errors(g_tilde, exact);

            long double sq = 0.0L;
            for (Index j = 0; j < K; ++j)
                for (Index i = 0; i < K; ++i) {
                    const double v = e(i, j);
                    sq += static_cast<long double>(v) * v;
                }
            stats[r].sq_sum = static_cast<double>(sq);
            stats[r].d = static_cast<double>(dr.unique_count());
            pair_sum += e.cwiseProduct(e);
        }
        block_sums[b] = std::move(pair_sum);
    });

    Matrix per_pair = Matrix::Zero(K, K);
    for (std::size_t b = 0; b < nblocks; ++b) per_pair += block_sums[b];
    per_pair /= static_cast<double>(R);

    long double tau2_acc = 0.0L, d_acc = 0.0L;
    for (std::size_t r = 0; r < R; ++r) {
        tau2_acc += stats[r].sq_sum;
        d_acc += stats[r].d;
    }
    const double kk = static_cast<double>(K) * static_cast<double>(K);
    const double tau2 =
        static_cast<double>(tau2_acc) / (kk * static_cast<double>(R));
    const double mean_d = static_cast<double>(d_acc) / static_cast<double>(R);

    long double d_var = 0.0L, m_var = 0.0L;
    for (std::size_t r = 0; r < R; ++r) {
        const double dd = stats[r].d - mean_d;
        d_var += static_cast<long double>(dd) * dd;
        const double dm = stats[r].sq_sum / kk - tau2;
        m_var += static_cast<long double>(dm) * dm;
    }
    const double std_d =
        R > 1 ? std::sqrt(static_cast<double>(d_var) / static_cast<double>(R - 1))
              : 0.0;
    const double tau_se =
        R > 1 ? std::sqrt(static_cast<double>(m_var) /
                          (static_cast<double>(R - 1) * static_cast<double>(R)))
              : 0.0;

    ErrorReport rep;
    rep.per_pair_mse = std::move(per_pair);
    rep.tau = std::sqrt(tau2);
    rep.tau_se = tau_se;
    rep.method = plan.method;
    rep.n = n;
    rep.mean_d = mean_d;
    rep.std_d = std_d;
    return rep;
}

double kappa_hat(const CenteredMatrix& Q, std::size_t m, const ErrorConfig& cfg) {
    return kappa_hat(Q, m, cfg, pairwise_distances(Q, 1.0, cfg.threads));
}

double kappa_hat(const CenteredMatrix& Q, std::size_t m, const ErrorConfig& cfg,
                 const DistanceMatrix& exact) {
    if (m == 0) throw InvalidArgument("kappa_hat requires m >= 1");
    ErrorConfig c = cfg;
    // The baseline is the canonical bootstrap: duplicates always weighted.
    c.weighting = DuplicateWeighting::weighted;
    return resampling_mse(Q, plan_uniform(Q), m, c, exact).tau;
}

double sigma_hat(double tau_method_n, double tau_unif_N) {
    if (tau_method_n < 0.0 || tau_unif_N < 0.0)
        throw InvalidArgument("sigma_hat components must be >= 0");
    return std::hypot(tau_method_n, tau_unif_N);
}

double theoretical_kappa(double kappa_N, std::size_t N, std::size_t d) {
    if (d == 0) throw InvalidArgument("theoretical_kappa requires d >= 1");
    return std::sqrt(static_cast<double>(N) / static_cast<double>(d)) * kappa_N;
}

double tau_unif_full(const CenteredMatrix& Q, const ErrorConfig& cfg) {
    using Key = std::tuple<std::uint64_t, std::size_t, std::uint64_t,
                           std::uint64_t, int, int>;
    static std::map<Key, double> cache;
    static std::mutex mutex;

    std::uint64_t eps_bits;
    static_assert(sizeof eps_bits == sizeof cfg.epsilon0);
    std::memcpy(&eps_bits, &cfg.epsilon0, sizeof eps_bits);
    const Key key{matrix_digest(Q.values),      cfg.R,
                  cfg.base_seed,                eps_bits,
                  static_cast<int>(cfg.normalization),
                  static_cast<int>(cfg.row_center)};
    {
        std::lock_guard<std::mutex> lock(mutex);
        const auto it = cache.find(key);
        if (it != cache.end()) return it->second;
    }
    const double tau =
        kappa_hat(Q, static_cast<std::size_t>(Q.values.cols()), cfg);
    std::lock_guard<std::mutex> lock(mutex);
    cache.emplace(key, tau);
    return tau;
}

MinNResult find_min_n(const CenteredMatrix& Q, Method method, std::size_t m,
                      const ErrorConfig& cfg,
                      const std::vector<std::size_t>& n_grid) {
    if (n_grid.empty()) throw InvalidArgument("n_grid must not be empty");
    for (std::size_t i = 1; i < n_grid.size(); ++i)
        if (n_grid[i] <= n_grid[i - 1])
            throw InvalidArgument("n_grid must be strictly ascending");

    // Independent sub-streams for the baseline, the full-N term and each
    // grid point, all derived from the one base seed.
    const DistanceMatrix exact_for_kappa = pairwise_distances(Q, 1.0, cfg.threads);
    ErrorConfig kappa_cfg = cfg;
    kappa_cfg.base_seed = derive_seed(cfg.base_seed, 0x6b61);
    const double km = kappa_hat(Q, m, kappa_cfg, exact_for_kappa);

    ErrorConfig full_cfg = cfg;
    full_cfg.base_seed = derive_seed(cfg.base_seed, 0x7546);
    const double tau_full = tau_unif_full(Q, full_cfg);

    const SamplingPlan plan = make_plan(Q, method);
    const DistanceMatrix& exact = exact_for_kappa;

    MinNResult result;
    result.kappa_m = km;
    for (std::size_t i = 0; i < n_grid.size(); ++i) {
        ErrorConfig row_cfg = cfg;
        row_cfg.base_seed = derive_seed(cfg.base_seed, 0x100 + i);
        ErrorReport rep = resampling_mse(Q, plan, n_grid[i], row_cfg, exact);
        rep.kappa_hat = km;
        rep.tau_unif_N = tau_full;
        rep.sigma_hat = sigma_hat(rep.tau, tau_full);
        const bool hit = *rep.sigma_hat <= km;
        result.trace.push_back(std::move(rep));
        if (hit) {
            result.found = result.trace.size() - 1;
            break;
        }
    }
    return result;
}

std::vector<std::size_t> default_n_grid() {
    std::vector<std::size_t> grid;
    for (std::size_t n = 10; n <= 100; n += 10) grid.push_back(n);
    for (std::size_t n = 200; n <= 1000; n += 100) grid.push_back(n);
    for (std::size_t n = 2000; n <= 10000; n += 1000) grid.push_back(n);
    return grid;
}

}  // namespace modelmap
