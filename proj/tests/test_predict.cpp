#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>

#include "helpers.hpp"
#include "modelmap/oracle.hpp"
#include "modelmap/predict.hpp"
#include "modelmap/sampling.hpp"

using namespace modelmap;
using testutil::ids;
using testutil::random_centered;
using testutil::random_matrix;

namespace {

ScoreTable synthetic_scores(const Vector& f, Index groups_of = 5) {
    ScoreTable t;
    const Index K = f.size();
    t.model_ids = ids("m", K);
    t.task_names = {"task"};
    t.scores = f;
    for (Index i = 0; i < K; ++i)
        t.group_labels.push_back("type" + std::to_string(i / groups_of));
    return t;
}

}  // namespace

TEST_CASE("feature_matrix scales columns by sqrt(w)") {
    WeightedCoordinates wc;
    wc.values = random_matrix(3, 4, 1);
    wc.weights.resize(4);
    wc.weights << 1.0, 4.0, 1.0, 1.0;

    const Matrix X = feature_matrix(wc);
    CHECK((X.col(0) - wc.values.col(0)).cwiseAbs().maxCoeff() == 0.0);
    CHECK((X.col(1) - 2.0 * wc.values.col(1)).cwiseAbs().maxCoeff() < 1e-15);

    wc.weights(2) = -0.1;
    CHECK_THROWS_AS(feature_matrix(wc), InvalidArgument);
}

TEST_CASE("feature gram identity: E[(QW^1/2)(QW^1/2)^T] = QQ^T by enumeration") {
    const CenteredMatrix Q = random_centered(3, 3, 5);
    const SamplingPlan plan = plan_ls(Q);
    const std::size_t n = 2;
    const Matrix target = Q.values * Q.values.transpose();

    Matrix accum = Matrix::Zero(3, 3);
    double total = 0.0;
    oracle::for_each_draw(plan.probs, n, [&](const std::vector<Index>& tuple,
                                             double prob) {
        ResampleDraw dr;
        dr.n = n;
        dr.population_size = 3;
        std::vector<Index> sorted = tuple;
        std::sort(sorted.begin(), sorted.end());
        for (const Index u : sorted) {
            if (!dr.unique_indices.empty() && dr.unique_indices.back() == u) {
                ++dr.counts.back();
                continue;
            }
            dr.unique_indices.push_back(u);
            dr.counts.push_back(1);
        }
        dr.weights.resize(static_cast<Index>(dr.unique_count()));
        for (std::size_t t = 0; t < dr.unique_count(); ++t)
            dr.weights(static_cast<Index>(t)) =
                static_cast<double>(dr.counts[t]) /
                (static_cast<double>(n) * plan.probs(dr.unique_indices[t]));

        // Unbiased-estimator convention: columns straight from Q, no
        // re-centering, so the Gram identity is exact.
        WeightedCoordinates wc;
        wc.values = restrict_columns(Q.values, dr.unique_indices);
        wc.weights = dr.weights;
        wc.draw = dr;
        const Matrix X = feature_matrix(wc);
        accum += prob * (X * X.transpose());
        total += prob;
    });
    accum /= total;
    CHECK((accum - target).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("weighted ridge records the feature scaling") {
    WeightedCoordinates wc;
    wc.values = random_matrix(6, 3, 99);
    wc.weights.resize(3);
    wc.weights << 1.0, 4.0, 9.0;
    const Vector f = random_matrix(6, 1, 98);
    const RidgeFit fit = ridge_fit(wc, f, 2.0);
    CHECK(fit.feature_scaling.size() == 3);
    CHECK(fit.feature_scaling(1) == doctest::Approx(2.0));
    CHECK(fit.feature_scaling(2) == doctest::Approx(3.0));
    const RidgeFit plain = ridge_fit(feature_matrix(wc), f, 2.0);
    CHECK((fit.theta - plain.theta).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("ridge interpolates with tiny alpha and vanishes with huge alpha") {
    const Matrix X = random_matrix(20, 7, 3);
    const Vector theta_star = random_matrix(7, 1, 4);
    const Vector f = X * theta_star;

    const RidgeFit tiny = ridge_fit(X, f, 1e-10);
    CHECK((ridge_predict(X, tiny) - f).cwiseAbs().maxCoeff() < 1e-6);

    const RidgeFit huge = ridge_fit(X, f, 1e12);
    CHECK(huge.theta.norm() < 1e-6);
    CHECK(ridge_predict(X, huge).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("ridge matches the normal-equation oracle") {
    const Matrix X = random_matrix(20, 7, 11);
    const Vector f = random_matrix(20, 1, 12);
    const double alpha = 3.5;

    const RidgeFit fit = ridge_fit(X, f, alpha);
    const Matrix A = X.transpose() * X + alpha * Matrix::Identity(7, 7);
    const Vector oracle = A.fullPivLu().solve(X.transpose() * f);
    CHECK((fit.theta - oracle).cwiseAbs().maxCoeff() < 1e-8);

    CHECK_THROWS_AS(ridge_fit(X, f, 0.0), InvalidArgument);
    CHECK_THROWS_AS(ridge_fit(X, f, -1.0), InvalidArgument);
}

TEST_CASE("primal and dual ridge solves agree") {
    // d > K triggers the dual path; compare against the primal formula.
    const Matrix X = random_matrix(6, 15, 13);
    const Vector f = random_matrix(6, 1, 14);
    const double alpha = 0.8;

    const RidgeFit fit = ridge_fit(X, f, alpha);  // dual internally
    const Matrix A =
        X.transpose() * X + alpha * Matrix::Identity(15, 15);
    const Vector primal = A.fullPivLu().solve(X.transpose() * f);
    CHECK((fit.theta - primal).cwiseAbs().maxCoeff() < 1e-8);

    const Vector pred_d = ridge_predict(X, fit);
    const Vector pred_p = X * primal;
    CHECK((pred_d - pred_p).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("pearson_r basics") {
    std::vector<double> a{1, 2, 3, 4, 5};
    std::vector<double> b{2, 4, 6, 8, 10};
    CHECK(pearson_r(a, a) == doctest::Approx(1.0));
    CHECK(pearson_r(a, b) == doctest::Approx(1.0));
    std::vector<double> neg{-1, -2, -3, -4, -5};
    CHECK(pearson_r(a, neg) == doctest::Approx(-1.0));

    // Hand-computed 5-point instance: r = cov/sqrt(var_a var_b).
    std::vector<double> x{1.0, 2.0, 4.0, 5.0, 8.0};
    std::vector<double> y{2.0, 1.0, 5.0, 3.0, 9.0};
    // means 4, 4; cov = (3*2 + 2*3 + 0 + 1*(-1) + 4*5)/... -> compute directly
    double sxy = 0, sxx = 0, syy = 0;
    for (int i = 0; i < 5; ++i) {
        sxy += (x[i] - 4.0) * (y[i] - 4.0);
        sxx += (x[i] - 4.0) * (x[i] - 4.0);
        syy += (y[i] - 4.0) * (y[i] - 4.0);
    }
    CHECK(pearson_r(x, y) ==
          doctest::Approx(sxy / std::sqrt(sxx * syy)).epsilon(1e-12));

    std::vector<double> flat{3, 3, 3};
    std::vector<double> rising{1, 2, 3};
    CHECK_THROWS_AS(pearson_r(flat, rising), DegenerateInput);
    std::vector<double> one{1};
    CHECK_THROWS_AS(pearson_r(one, one), DegenerateInput);
}

TEST_CASE("pearson_r is invariant under positive affine maps") {
    const Vector a = random_matrix(30, 1, 21);
    const Vector b = random_matrix(30, 1, 22);
    const double base = pearson_r(a, b);
    const Vector a2 = 3.0 * a.array() + 7.0;
    const Vector b2 = 0.5 * b.array() - 2.0;
    CHECK(pearson_r(a2, b2) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("nested CV recovers a noiseless linear target") {
    const Index K = 100, d = 12;
    const Matrix X = random_matrix(K, d, 31);
    const Vector theta_star = random_matrix(d, 1, 32);
    const Vector f = X * theta_star;

    CvConfig cfg;
    cfg.alpha_grid = alpha_grid_loglik();
    cfg.seeds = {1, 2, 3};
    const CvResult res = nested_cv_predict(X, synthetic_scores(f), "task", cfg);
    for (const double r : res.r_per_seed) CHECK(r > 0.999);
}

TEST_CASE("nested CV on pure noise stays near zero correlation") {
    const Index K = 100, d = 10;
    const Matrix X = random_matrix(K, d, 41);
    const Vector f = random_matrix(K, 1, 42);  // independent of X

    CvConfig cfg;
    cfg.alpha_grid = alpha_grid_loglik();
    cfg.seeds = {1, 2, 3, 4, 5};
    const CvResult res = nested_cv_predict(X, synthetic_scores(f), "task", cfg);
    for (const double r : res.r_per_seed) CHECK(std::abs(r) < 0.3);
}

TEST_CASE("nested CV respects model-type groups and clipping") {
    const Index K = 60, d = 5;
    const Matrix X = random_matrix(K, d, 51);
    Vector f = 50.0 + 30.0 * X.col(0).array();

    CvConfig cfg;
    cfg.alpha_grid = alpha_grid_scores();
    cfg.seeds = {7};
    cfg.clip = {{0.0, 100.0}};
    ScoreTable scores = synthetic_scores(f, 6);
    const CvResult res = nested_cv_predict(X, scores, "task", cfg);
    CHECK(res.predictions.minCoeff() >= 0.0);
    CHECK(res.predictions.maxCoeff() <= 100.0);

    // Too few groups for 5 folds.
    ScoreTable few = scores;
    for (auto& g : few.group_labels) g = "all";
    CHECK_THROWS_AS(nested_cv_predict(X, few, "task", cfg), InvalidFolds);

    CHECK_THROWS_AS(nested_cv_predict(X, scores, "missing", cfg),
                    InvalidArgument);
}

TEST_CASE("nested CV is deterministic given the seed list") {
    const Index K = 50, d = 4;
    const Matrix X = random_matrix(K, d, 61);
    const Vector f = X * random_matrix(d, 1, 62) + 0.1 * random_matrix(K, 1, 63);

    CvConfig cfg;
    cfg.alpha_grid = alpha_grid_loglik();
    cfg.seeds = {11, 12};
    const ScoreTable scores = synthetic_scores(f);
    const CvResult a = nested_cv_predict(X, scores, "task", cfg);
    const CvResult b = nested_cv_predict(X, scores, "task", cfg);
    CHECK(a.predictions == b.predictions);
    CHECK(a.r_per_seed == b.r_per_seed);
    CHECK(a.selected_alphas == b.selected_alphas);
}

TEST_CASE("selected alpha trends upward with target noise") {
    const Index K = 80, d = 8;
    const Matrix X = random_matrix(K, d, 71);
    const Vector clean = X * random_matrix(d, 1, 72);

    CvConfig cfg;
    cfg.alpha_grid = alpha_grid_loglik();
    cfg.seeds = {1, 2, 3};
    const ScoreTable low_noise = synthetic_scores(
        clean + 0.01 * clean.norm() / std::sqrt(K) * random_matrix(K, 1, 73));
    const ScoreTable high_noise = synthetic_scores(
        clean + 5.0 * clean.norm() / std::sqrt(K) * random_matrix(K, 1, 74));

    const CvResult lo = nested_cv_predict(X, low_noise, "task", cfg);
    const CvResult hi = nested_cv_predict(X, high_noise, "task", cfg);
    double lo_mean = 0, hi_mean = 0;
    for (const double a : lo.selected_alphas) lo_mean += std::log10(a);
    for (const double a : hi.selected_alphas) hi_mean += std::log10(a);
    lo_mean /= static_cast<double>(lo.selected_alphas.size());
    hi_mean /= static_cast<double>(hi.selected_alphas.size());
    CHECK(hi_mean > lo_mean);
}
