#include "modelmap/oracle.hpp"

#include <cmath>
#include <limits>

namespace modelmap {
namespace oracle {

namespace {

std::vector<Index> support_of(const Vector& probs) {
    std::vector<Index> support;
    for (Index s = 0; s < probs.size(); ++s)
        if (probs(s) > 0.0) support.push_back(s);
    if (support.empty())
        throw InvalidPlan("plan has empty support");
    return support;
}

double pow_count(double base, std::size_t exp) {
    return std::pow(base, static_cast<double>(exp));
}

}  // namespace

void for_each_draw(const Vector& probs, std::size_t n,
                   const std::function<void(const std::vector<Index>&, double)>& fn) {
    if (n == 0) throw InvalidArgument("enumeration requires n >= 1");
    const std::vector<Index> support = support_of(probs);
    const std::size_t S = support.size();

    std::vector<std::size_t> odo(n, 0);
    std::vector<Index> tuple(n);
    for (;;) {
        double p = 1.0;
        for (std::size_t t = 0; t < n; ++t) {
            tuple[t] = support[odo[t]];
            p *= probs(tuple[t]);
        }
        fn(tuple, p);

        std::size_t t = 0;
        while (t < n && ++odo[t] == S) {
            odo[t] = 0;
            ++t;
        }
        if (t == n) break;
    }
}

EnumerationResult enumerate_moments(const CenteredMatrix& Q,
                                    const SamplingPlan& plan, std::size_t n) {
    const Index K = Q.values.rows();
    const Index N = Q.values.cols();
    if (plan.probs.size() != N)
        throw InvalidArgument("plan does not match the matrix");
    if (pow_count(static_cast<double>(N), n) > 1e6)
        throw BudgetExceeded("N^n exceeds the enumeration budget of 1e6");

    using LMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
    LMatrix first = LMatrix::Zero(K, K);
    LMatrix second = LMatrix::Zero(K, K);
    long double total_prob = 0.0L;

    Matrix g_draw(K, K);
    for_each_draw(plan.probs, n, [&](const std::vector<Index>& tuple, double p) {
        g_draw.setZero();
        for (const Index u : tuple) {
            const double w = 1.0 / (static_cast<double>(n) * plan.probs(u));
            for (Index i = 0; i < K; ++i)
                for (Index j = i + 1; j < K; ++j) {
                    const double diff = Q.values(i, u) - Q.values(j, u);
                    g_draw(i, j) += w * diff * diff;
                }
        }
        total_prob += p;
        for (Index i = 0; i < K; ++i)
            for (Index j = i + 1; j < K; ++j) {
                const long double v = g_draw(i, j);
                first(i, j) += p * v;
                second(i, j) += p * v * v;
            }
    });

    EnumerationResult out;
    out.support_size = static_cast<std::size_t>(
        std::llround(pow_count(static_cast<double>(N), n)));
    out.expectation = Matrix::Zero(K, K);
    out.variance = Matrix::Zero(K, K);
    for (Index i = 0; i < K; ++i)
        for (Index j = i + 1; j < K; ++j) {
            const long double e = first(i, j) / total_prob;
            long double var = second(i, j) / total_prob - e * e;
            if (var < 0.0L) var = 0.0L;
            out.expectation(i, j) = static_cast<double>(e);
            out.expectation(j, i) = out.expectation(i, j);
            out.variance(i, j) = static_cast<double>(var);
            out.variance(j, i) = out.variance(i, j);
        }
    return out;
}

Matrix closed_form_variance(const CenteredMatrix& Q, const SamplingPlan& plan,
                            std::size_t n) {
    if (n == 0) throw InvalidArgument("closed_form_variance requires n >= 1");
    const Index K = Q.values.rows();
    const Index N = Q.values.cols();
    if (plan.probs.size() != N)
        throw InvalidArgument("plan does not match the matrix");

    Matrix var = Matrix::Zero(K, K);
    for (Index i = 0; i < K; ++i)
        for (Index j = i + 1; j < K; ++j) {
            long double fourth = 0.0L, norm2 = 0.0L;
            for (Index s = 0; s < N; ++s) {
                const double diff = Q.values(i, s) - Q.values(j, s);
                const long double d2 =
                    static_cast<long double>(diff) * diff;
                norm2 += d2;
                if (d2 == 0.0L) continue;  // 0/0 convention
                if (!(plan.probs(s) > 0.0))
                    throw InvalidPlan(
                        "nonzero coordinate difference on a zero-probability "
                        "text");
                fourth += d2 * d2 / plan.probs(s);
            }
            const long double v =
                (fourth - norm2 * norm2) / static_cast<long double>(n);
            var(i, j) = static_cast<double>(v);
            var(j, i) = var(i, j);
        }
    return var;
}

double kl_objective(const CenteredMatrix& Q, const Vector& probs,
                    std::size_t n) {
    if (n == 0) throw InvalidArgument("objective requires n >= 1");
    const Index K = Q.values.rows();
    const Index N = Q.values.cols();
    long double total = 0.0L;
    for (Index i = 0; i < K; ++i)
        for (Index j = i + 1; j < K; ++j) {
            long double fourth = 0.0L, norm2 = 0.0L;
            for (Index s = 0; s < N; ++s) {
                const double diff = Q.values(i, s) - Q.values(j, s);
                const long double d2 = static_cast<long double>(diff) * diff;
                norm2 += d2;
                if (d2 == 0.0L) continue;
                if (!(probs(s) > 0.0))
                    return std::numeric_limits<double>::infinity();
                fourth += d2 * d2 / probs(s);
            }
            total += (fourth - norm2 * norm2) / static_cast<long double>(n);
        }
    return 2.0 * static_cast<double>(total);  // both (i,j) and (j,i)
}

double ls_objective(const CenteredMatrix& Q, const Vector& probs,
                    std::size_t n) {
    const Index K = Q.values.rows();
    // The optimality family is full-support: putting probability 0 on a
    // nonzero column makes the estimator biased and leaves the Frobenius
    // criterion discontinuous there. Mirror the variance objective and
    // treat such points as infeasible.
    for (Index s = 0; s < Q.values.cols(); ++s)
        if (!(probs(s) > 0.0) && Q.values.col(s).squaredNorm() > 0.0)
            return std::numeric_limits<double>::infinity();
    const Matrix gram = Q.values * Q.values.transpose();

    long double acc = 0.0L;
    long double total_prob = 0.0L;
    Matrix est(K, K);
    for_each_draw(probs, n, [&](const std::vector<Index>& tuple, double p) {
        est.setZero();
        for (const Index u : tuple) {
            const double w = 1.0 / (static_cast<double>(n) * probs(u));
            est += w * (Q.values.col(u) * Q.values.col(u).transpose());
        }
        const double frob = (est - gram).squaredNorm();
        acc += static_cast<long double>(p) * frob;
        total_prob += p;
    });
    return static_cast<double>(acc / total_prob);
}

void for_each_simplex_point(Index dims, std::size_t steps,
                            const std::function<void(const Vector&)>& fn) {
    if (dims < 1) throw InvalidArgument("simplex needs at least one dimension");
    std::vector<std::size_t> counts(static_cast<std::size_t>(dims), 0);
    Vector point(dims);
    const auto emit = [&] {
        for (Index s = 0; s < dims; ++s)
            point(s) = static_cast<double>(counts[static_cast<std::size_t>(s)]) /
                       static_cast<double>(steps);
        fn(point);
    };
    // Stars and bars: counts over dims entries summing to `steps`.
    const std::function<void(std::size_t, std::size_t)> rec =
        [&](std::size_t pos, std::size_t remaining) {
            if (pos + 1 == counts.size()) {
                counts[pos] = remaining;
                emit();
                return;
            }
            for (std::size_t k = 0; k <= remaining; ++k) {
                counts[pos] = k;
                rec(pos + 1, remaining - k);
            }
        };
    rec(0, steps);
}

namespace {

SimplexResult simplex_search(const CenteredMatrix& Q, std::size_t n, double step,
                             double (*objective)(const CenteredMatrix&,
                                                 const Vector&, std::size_t)) {
    if (!(step > 0.0)) throw InvalidArgument("grid step must be > 0");
    const Index N = Q.values.cols();
    const auto steps = static_cast<std::size_t>(std::llround(1.0 / step));
    if (steps == 0) throw InvalidArgument("grid step too large");
    // C(steps + N - 1, N - 1) points; keep the search tractable.
    double points = 1.0;
    for (Index k = 1; k < N; ++k)
        points *= static_cast<double>(steps + static_cast<std::size_t>(k)) /
                  static_cast<double>(k);
    if (points > 1e6)
        throw BudgetExceeded("simplex grid exceeds the budget of 1e6 points");

    SimplexResult best;
    best.objective = std::numeric_limits<double>::infinity();
    for_each_simplex_point(N, steps, [&](const Vector& p) {
        const double obj = objective(Q, p, n);
        if (obj < best.objective) {
            best.objective = obj;
            best.probs = p;
        }
    });
    if (!std::isfinite(best.objective))
        throw DegenerateMatrix("no feasible simplex grid point");
    return best;
}

}  // namespace

SimplexResult simplex_search_kl(const CenteredMatrix& Q, std::size_t n,
                                double step) {
    return simplex_search(Q, n, step, &kl_objective);
}

SimplexResult simplex_search_ls(const CenteredMatrix& Q, std::size_t n,
                                double step) {
    return simplex_search(Q, n, step, &ls_objective);
}

double expected_unique(const SamplingPlan& plan, std::size_t n) {
    long double acc = 0.0L;
    for (Index s = 0; s < plan.probs.size(); ++s)
        acc += 1.0L - std::pow(1.0L - static_cast<long double>(plan.probs(s)),
                               static_cast<long double>(n));
    return static_cast<double>(acc);
}

}  // namespace oracle
}  // namespace modelmap
