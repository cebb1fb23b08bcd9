#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "modelmap/oracle.hpp"
#include "modelmap/sampling.hpp"

using namespace modelmap;
using testutil::random_centered;

TEST_CASE("enumeration expectation equals the exact distances") {
    for (const Index N : {2, 3, 4}) {
        const CenteredMatrix Q = random_centered(3, N, 400 + N);
        const DistanceMatrix g = pairwise_distances(Q, 1.0);
        for (const auto& plan : {plan_uniform(Q), plan_ls(Q), plan_kl(Q)}) {
            for (const std::size_t n : {1u, 2u, 3u}) {
                const auto res = oracle::enumerate_moments(Q, plan, n);
                CHECK((res.expectation - g.values).cwiseAbs().maxCoeff() <
                      1e-10);
                CHECK(res.variance.minCoeff() >= 0.0);
            }
        }
    }
}

TEST_CASE("closed-form variance equals enumeration") {
    for (const Index N : {2, 3, 4}) {
        for (const Index K : {2, 4}) {
            const CenteredMatrix Q = random_centered(K, N, 500 + 7 * N + K);
            for (const auto& plan : {plan_uniform(Q), plan_ls(Q), plan_kl(Q)}) {
                for (const std::size_t n : {1u, 2u, 3u}) {
                    const auto res = oracle::enumerate_moments(Q, plan, n);
                    const Matrix cf = oracle::closed_form_variance(Q, plan, n);
                    CHECK((res.variance - cf).cwiseAbs().maxCoeff() < 1e-10);
                }
            }
        }
    }
}

TEST_CASE("plan concentrated on one text has zero variance") {
    CenteredMatrix Q = random_centered(3, 3, 77);
    // Zero every column except the supported one so the plan is valid.
    Q.values.col(1).setZero();
    Q.values.col(2).setZero();
    SamplingPlan plan;
    plan.method = Method::ls;
    plan.probs.resize(3);
    plan.probs << 1.0, 0.0, 0.0;
    const auto res = oracle::enumerate_moments(Q, plan, 2);
    CHECK(res.variance.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("duplicate columns coalesce into one with doubled probability") {
    CenteredMatrix Q = random_centered(3, 3, 88);
    Q.values.col(2) = Q.values.col(1);

    SamplingPlan uni;
    uni.method = Method::uniform;
    uni.probs = Vector::Constant(3, 1.0 / 3.0);

    // Drawing either duplicate adds (3/n) * diff^2; the merged text must add
    // the same value at probability 2/3, so its column carries sqrt(2) times
    // the coordinates and twice the probability.
    CenteredMatrix merged;
    merged.values.resize(3, 2);
    merged.values.col(0) = Q.values.col(0);
    merged.values.col(1) = std::sqrt(2.0) * Q.values.col(1);
    SamplingPlan merged_plan;
    merged_plan.method = Method::uniform;
    merged_plan.probs.resize(2);
    merged_plan.probs << 1.0 / 3.0, 2.0 / 3.0;

    const auto a = oracle::enumerate_moments(Q, uni, 2);
    const auto b = oracle::enumerate_moments(merged, merged_plan, 2);
    CHECK((a.expectation - b.expectation).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((a.variance - b.variance).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("doubling n halves the closed-form variance") {
    const CenteredMatrix Q = random_centered(4, 3, 99);
    const SamplingPlan plan = plan_kl(Q);
    const Matrix v1 = oracle::closed_form_variance(Q, plan, 1);
    const Matrix v2 = oracle::closed_form_variance(Q, plan, 2);
    CHECK((v1 / 2.0 - v2).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(v1.diagonal().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("closed form rejects zero probability on an informative text") {
    const CenteredMatrix Q = random_centered(3, 3, 111);
    SamplingPlan plan;
    plan.method = Method::ls;
    plan.probs.resize(3);
    plan.probs << 0.5, 0.5, 0.0;
    CHECK_THROWS_AS(oracle::closed_form_variance(Q, plan, 2), InvalidPlan);
}

TEST_CASE("enumeration budget guard") {
    const CenteredMatrix Q = random_centered(2, 4, 3);
    const SamplingPlan plan = plan_uniform(Q);
    CHECK_THROWS_AS(oracle::enumerate_moments(Q, plan, 12), BudgetExceeded);
}

TEST_CASE("kl plan beats every simplex grid point") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const CenteredMatrix Q = random_centered(3, 3, 600 + seed);
        const SamplingPlan plan = plan_kl(Q);
        const auto grid = oracle::simplex_search_kl(Q, 2, 0.02);
        const double plan_obj = oracle::kl_objective(Q, plan.probs, 2);
        CHECK(plan_obj <= grid.objective + 1e-9 * (1.0 + std::abs(grid.objective)));
    }
}

TEST_CASE("kl optimum puts all mass on the only informative column") {
    CenteredMatrix Q = random_centered(3, 3, 55);
    Q.values.col(0).setZero();
    Q.values.col(2).setZero();
    const auto grid = oracle::simplex_search_kl(Q, 1, 0.05);
    CHECK(grid.probs(1) == doctest::Approx(1.0));
}

TEST_CASE("symmetric columns give a uniform kl optimum") {
    // Columns are sign flips of each other: equal fourth-moment sums. Use a
    // step whose grid contains (1/3, 1/3, 1/3) exactly.
    CenteredMatrix Q;
    Q.values.resize(2, 3);
    Q.values << 1, -1, 1, -1, 1, -1;
    const auto grid = oracle::simplex_search_kl(Q, 1, 1.0 / 60.0);
    for (Index s = 0; s < 3; ++s)
        CHECK(grid.probs(s) == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
    const double uniform_obj =
        oracle::kl_objective(Q, Vector::Constant(3, 1.0 / 3.0), 1);
    CHECK(std::abs(grid.objective - uniform_obj) < 1e-9);
}

TEST_CASE("ls plan beats every simplex grid point") {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const CenteredMatrix Q = random_centered(3, 3, 700 + seed);
        const SamplingPlan plan = plan_ls(Q);
        const auto grid = oracle::simplex_search_ls(Q, 2, 0.02);
        const double plan_obj = oracle::ls_objective(Q, plan.probs, 2);
        CHECK(plan_obj <= grid.objective + 1e-9 * (1.0 + std::abs(grid.objective)));
    }
}

TEST_CASE("equal-norm columns give a uniform ls optimum") {
    CenteredMatrix Q;
    Q.values.resize(2, 3);
    Q.values << 1, -1, 1, -1, 1, -1;
    const auto grid = oracle::simplex_search_ls(Q, 1, 0.05);
    for (Index s = 0; s < 3; ++s)
        CHECK(grid.probs(s) == doctest::Approx(1.0 / 3.0).epsilon(0.11));
}

TEST_CASE("a dominant column attracts the ls optimum mass") {
    // Column norms^2 in ratio 100:1:1.
    CenteredMatrix Q;
    Q.values.resize(2, 3);
    Q.values << 10, 1, -1, -10, -1, 1;
    const auto grid = oracle::simplex_search_ls(Q, 2, 0.02);
    const SamplingPlan plan = plan_ls(Q);
    // Feasible grid points keep at least one step of mass on every nonzero
    // column, so the match is up to ~1.5 steps on the dominant one.
    for (Index s = 0; s < 3; ++s)
        CHECK(std::abs(grid.probs(s) - plan.probs(s)) <= 0.03 + 1e-12);
}

TEST_CASE("expected unique count") {
    SamplingPlan degenerate;
    degenerate.probs.resize(3);
    degenerate.probs << 1.0, 0.0, 0.0;
    CHECK(oracle::expected_unique(degenerate, 10) == doctest::Approx(1.0));

    SamplingPlan uni2;
    uni2.probs = Vector::Constant(2, 0.5);
    CHECK(oracle::expected_unique(uni2, 2) == doctest::Approx(1.5));
}

TEST_CASE("expected unique count matches Monte Carlo") {
    const CenteredMatrix Q = random_centered(3, 6, 123);
    const SamplingPlan plan = plan_ls(Q);
    const std::size_t n = 8;
    const double expectation = oracle::expected_unique(plan, n);

    const std::size_t trials = 100000;
    const AliasTable table(plan.probs);
    double sum = 0.0, sumsq = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
        const ResampleDraw dr = draw(table, plan, n, derive_seed(9, t));
        const double d = static_cast<double>(dr.unique_count());
        sum += d;
        sumsq += d * d;
    }
    const double mean = sum / static_cast<double>(trials);
    const double var =
        (sumsq - sum * sum / static_cast<double>(trials)) /
        static_cast<double>(trials - 1);
    const double se = std::sqrt(var / static_cast<double>(trials));
    CHECK(std::abs(mean - expectation) < 3.0 * se + 1e-9);
}
