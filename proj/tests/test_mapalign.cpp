#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <numbers>

#include "helpers.hpp"
#include "modelmap/mapalign.hpp"
#include "modelmap/matrixcore.hpp"

using namespace modelmap;
using testutil::ids;
using testutil::random_matrix;

namespace {

Eigen::Matrix2d rotation(double rad) {
    Eigen::Matrix2d R;
    R << std::cos(rad), -std::sin(rad), std::sin(rad), std::cos(rad);
    return R;
}

Embedding2D embedding_from(const Matrix& coords, const char* trial = "") {
    return Embedding2D{coords, ids("m", coords.rows()), trial};
}

}  // namespace

TEST_CASE("pca recovers a planar point cloud up to an orthogonal map") {
    // 12 points in a 2-D plane, embedded in 5 dimensions by a random basis.
    const Matrix plane = random_matrix(12, 2, 1);
    Eigen::HouseholderQR<Matrix> qr(random_matrix(5, 5, 2));
    const Matrix basis = Matrix(qr.householderQ()).leftCols(2);
    const Matrix lifted = plane * basis.transpose();

    const Embedding2D e = pca_embed(lifted, ids("m", 12));

    // Pairwise distances of the embedding match the plane's.
    for (Index i = 0; i < 12; ++i)
        for (Index j = 0; j < 12; ++j) {
            const double da = (e.coords.row(i) - e.coords.row(j)).norm();
            const double db = (plane.row(i) - plane.row(j)).norm();
            CHECK(da == doctest::Approx(db).epsilon(1e-9));
        }
}

TEST_CASE("duplicated model rows embed to identical points") {
    Matrix m = random_matrix(6, 4, 5);
    m.row(3) = m.row(0);
    const Embedding2D e = pca_embed(m, ids("m", 6));
    CHECK((e.coords.row(3) - e.coords.row(0)).norm() < 1e-12);
}

TEST_CASE("projection variance equals the top-2 covariance eigenvalues") {
    const Matrix m = random_matrix(10, 6, 7);
    const Embedding2D e = pca_embed(m, ids("m", 10));

    Matrix centered = m;
    centered.rowwise() -= m.colwise().mean();
    const Matrix cov =
        centered.transpose() * centered / static_cast<double>(10 - 1);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
    const Vector evals = eig.eigenvalues();  // ascending

    for (Index c = 0; c < 2; ++c) {
        const double var = e.coords.col(c).squaredNorm() / 9.0;
        CHECK(var ==
              doctest::Approx(evals(evals.size() - 1 - c)).epsilon(1e-9));
    }
}

TEST_CASE("pca is deterministic and rejects degenerate input") {
    const Matrix m = random_matrix(8, 3, 9);
    const Embedding2D a = pca_embed(m, ids("m", 8));
    const Embedding2D b = pca_embed(m, ids("m", 8));
    CHECK(a.coords == b.coords);

    CHECK_THROWS_AS(pca_embed(Matrix::Constant(4, 3, 2.0), ids("m", 4)),
                    DegenerateMatrix);
    CHECK_THROWS_AS(pca_embed(Matrix::Zero(1, 3), ids("m", 1)), InvalidArgument);
}

TEST_CASE("procrustes: identity, rotation, reflection") {
    const Matrix base = random_matrix(30, 2, 11);
    Embedding2D ref = center_embedding(embedding_from(base, "ref"));

    const Embedding2D same = procrustes_align(ref, ref);
    CHECK((same.coords - ref.coords).cwiseAbs().maxCoeff() < 1e-12);

    Embedding2D rotated = ref;
    rotated.coords = ref.coords * rotation(37.0 * std::numbers::pi / 180.0);
    const Embedding2D back = procrustes_align(ref, rotated);
    CHECK((back.coords - ref.coords).cwiseAbs().maxCoeff() < 1e-8);

    Embedding2D reflected = ref;
    reflected.coords.col(0) *= -1.0;
    const Embedding2D back2 = procrustes_align(ref, reflected);
    CHECK((back2.coords - ref.coords).cwiseAbs().maxCoeff() < 1e-8);

    Embedding2D wrong = ref;
    wrong.model_ids[0] = "other";
    CHECK_THROWS_AS(procrustes_align(ref, wrong), InvalidArgument);
}

TEST_CASE("procrustes never increases the distance to the reference") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Matrix a = random_matrix(15, 2, 100 + seed);
        const Matrix b = random_matrix(15, 2, 200 + seed);
        Embedding2D ref = center_embedding(embedding_from(a));
        Embedding2D trial = center_embedding(embedding_from(b));
        const Embedding2D aligned = procrustes_align(ref, trial);
        const double before = (trial.coords - ref.coords).norm();
        const double after = (aligned.coords - ref.coords).norm();
        CHECK(after <= before + 1e-12);
    }
}

TEST_CASE("centrography: identical trials give zero-area ellipses") {
    const Embedding2D e = embedding_from(random_matrix(5, 2, 13));
    const auto ellipses = centrography({e, e, e});
    for (const auto& ell : ellipses) {
        CHECK(ell.width < 1e-12);
        CHECK(ell.height < 1e-12);
        CHECK(ell.cov.cwiseAbs().maxCoeff() < 1e-24);
    }
    CHECK_THROWS_AS(centrography({e}), InsufficientTrials);
}

TEST_CASE("centrography: alternating +-sigma trials give the hand covariance") {
    const double sigma = 0.75;
    const std::size_t R = 6;
    const Matrix base = random_matrix(4, 2, 17);
    std::vector<Embedding2D> trials;
    for (std::size_t r = 0; r < R; ++r) {
        Matrix coords = base;
        coords.col(0).array() += (r % 2 == 0 ? sigma : -sigma);
        trials.push_back(embedding_from(coords));
    }
    const auto ellipses = centrography(trials);
    const double expect =
        sigma * std::sqrt(static_cast<double>(R) / static_cast<double>(R - 1));
    for (const auto& ell : ellipses) {
        CHECK(ell.width == doctest::Approx(expect).epsilon(1e-12));
        CHECK(ell.height == doctest::Approx(0.0));
        CHECK(ell.angle == doctest::Approx(0.0));
    }
}

TEST_CASE("centrography: isotropic jitter gives near-circular ellipses") {
    const double sigma = 0.2;
    const Matrix base = random_matrix(3, 2, 19);
    std::mt19937_64 rng(23);
    std::normal_distribution<double> noise(0.0, sigma);
    std::vector<Embedding2D> trials;
    for (std::size_t r = 0; r < 4000; ++r) {
        Matrix coords = base;
        for (Index i = 0; i < coords.rows(); ++i)
            for (Index c = 0; c < 2; ++c) coords(i, c) += noise(rng);
        trials.push_back(embedding_from(coords));
    }
    for (const auto& ell : centrography(trials)) {
        CHECK(ell.width == doctest::Approx(sigma).epsilon(0.1));
        CHECK(ell.height == doctest::Approx(sigma).epsilon(0.1));
    }
}

TEST_CASE("ellipse area is invariant under a common rotation of all trials") {
    const Matrix base = random_matrix(4, 2, 29);
    std::vector<Embedding2D> trials;
    std::mt19937_64 rng(31);
    std::normal_distribution<double> noise(0.0, 0.3);
    for (std::size_t r = 0; r < 40; ++r) {
        Matrix coords = base;
        for (Index i = 0; i < coords.rows(); ++i) coords(i, 0) += noise(rng);
        trials.push_back(embedding_from(coords));
    }
    const auto plain = centrography(trials);

    const Eigen::Matrix2d R = rotation(0.9);
    std::vector<Embedding2D> rotated = trials;
    for (auto& e : rotated) e.coords = e.coords * R;
    const auto turned = centrography(rotated);

    for (std::size_t i = 0; i < plain.size(); ++i)
        CHECK(plain[i].width * plain[i].height ==
              doctest::Approx(turned[i].width * turned[i].height)
                  .epsilon(1e-9));
}

TEST_CASE("add_models: no-op, duplicate row and clipping behavior") {
    // Existing map: 4 models on 5 unique texts from a draw over N = 8.
    const Matrix L_full = random_matrix(4, 8, 37, 5.0);
    ResampleDraw dr;
    dr.n = 10;
    dr.population_size = 8;
    dr.unique_indices = {0, 2, 3, 5, 7};
    dr.counts = {3, 2, 2, 2, 1};
    dr.weights.resize(5);
    for (std::size_t t = 0; t < 5; ++t)
        dr.weights(static_cast<Index>(t)) =
            static_cast<double>(dr.counts[t]) / (10.0 * (1.0 / 8.0));

    LikelihoodMatrix existing;
    existing.values = restrict_columns(L_full, dr.unique_indices);
    existing.model_ids = ids("m", 4);
    for (const Index u : dr.unique_indices)
        existing.text_ids.push_back("t" + std::to_string(u));

    const double threshold = -4.0;

    // Adding zero models reproduces the plain weighted centering.
    LikelihoodMatrix none;
    none.values.resize(0, 0);
    const WeightedCoordinates same =
        add_models(existing, none, threshold, dr);
    const WeightedCoordinates direct = weighted_center(existing.values, dr);
    CHECK((same.values - direct.values).cwiseAbs().maxCoeff() == 0.0);

    // Adding an exact copy of model 0 lands on model 0.
    LikelihoodMatrix copy;
    copy.values = existing.values.row(0);
    copy.model_ids = {"copy"};
    copy.text_ids = existing.text_ids;
    const WeightedCoordinates with_copy =
        add_models(existing, copy, -1e9, dr);
    CHECK((with_copy.values.row(4) - with_copy.values.row(0))
              .cwiseAbs()
              .maxCoeff() < 1e-10);

    // New rows below the threshold are clipped before centering.
    LikelihoodMatrix low;
    low.values = Matrix::Constant(1, 5, -100.0);
    low.model_ids = {"low"};
    low.text_ids = existing.text_ids;
    const WeightedCoordinates clipped = add_models(existing, low, threshold, dr);

    Matrix stacked(5, 5);
    stacked.topRows(4) = existing.values;
    stacked.bottomRows(1) =
        apply_threshold(low, threshold).values;
    const WeightedCoordinates oracle_wc = weighted_center(stacked, dr);
    CHECK((clipped.values - oracle_wc.values).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("add_models matches texts by id and rejects mismatches") {
    const Matrix L_full = random_matrix(3, 6, 41, 2.0);
    ResampleDraw dr;
    dr.n = 4;
    dr.population_size = 6;
    dr.unique_indices = {1, 4};
    dr.counts = {2, 2};
    dr.weights.resize(2);
    dr.weights << 3.0, 3.0;

    LikelihoodMatrix existing;
    existing.values = restrict_columns(L_full, dr.unique_indices);
    existing.model_ids = ids("m", 3);
    existing.text_ids = {"t1", "t4"};

    // New rows arrive with columns swapped; ids drive the match.
    LikelihoodMatrix swapped;
    swapped.values.resize(1, 2);
    swapped.values << 10.0, 20.0;
    swapped.model_ids = {"new"};
    swapped.text_ids = {"t4", "t1"};
    const WeightedCoordinates wc = add_models(existing, swapped, -1e9, dr);

    Matrix stacked(4, 2);
    stacked.topRows(3) = existing.values;
    stacked(3, 0) = 20.0;  // t1
    stacked(3, 1) = 10.0;  // t4
    const WeightedCoordinates expect = weighted_center(stacked, dr);
    CHECK((wc.values - expect.values).cwiseAbs().maxCoeff() == 0.0);

    LikelihoodMatrix missing = swapped;
    missing.text_ids = {"t4", "t9"};
    CHECK_THROWS_AS(add_models(existing, missing, -1e9, dr), InvalidArgument);
}

TEST_CASE("adding models leaves old pairwise weighted distances unchanged") {
    const Matrix L_full = random_matrix(5, 7, 43, 3.0);
    ResampleDraw dr;
    dr.n = 9;
    dr.population_size = 7;
    dr.unique_indices = {0, 1, 3, 4, 6};
    dr.counts = {2, 2, 2, 2, 1};
    dr.weights.resize(5);
    for (std::size_t t = 0; t < 5; ++t)
        dr.weights(static_cast<Index>(t)) =
            static_cast<double>(dr.counts[t]) / (9.0 / 7.0);

    LikelihoodMatrix existing;
    existing.values = restrict_columns(L_full, dr.unique_indices);
    existing.model_ids = ids("m", 5);
    for (const Index u : dr.unique_indices)
        existing.text_ids.push_back("t" + std::to_string(u));

    LikelihoodMatrix extra;
    extra.values = random_matrix(2, 5, 47, 3.0);
    extra.model_ids = {"n0", "n1"};
    extra.text_ids = existing.text_ids;

    const DistanceMatrix before =
        weighted_distance(weighted_center(existing.values, dr));
    const DistanceMatrix after =
        weighted_distance(add_models(existing, extra, -1e9, dr));

    // Column re-centering shifts per-text constants only, which cancel in
    // every row difference.
    for (Index i = 0; i < 5; ++i)
        for (Index j = 0; j < 5; ++j)
            CHECK(after.values(i, j) ==
                  doctest::Approx(before.values(i, j)).epsilon(1e-10));
}
