#include "modelmap/predict.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "modelmap/rng.hpp"

namespace modelmap {

Matrix feature_matrix(const WeightedCoordinates& W) {
    Matrix X = W.values;
    for (Index t = 0; t < X.cols(); ++t) {
        const double w = W.weights(t);
        if (!(w >= 0.0))
            throw InvalidArgument("feature weights must be >= 0");
        X.col(t) *= std::sqrt(w);
    }
    return X;
}

RidgeFit ridge_fit(const Matrix& X, const Vector& f, double alpha) {
    if (!(alpha > 0.0)) throw InvalidArgument("ridge alpha must be > 0");
    if (!X.allFinite() || !f.allFinite())
        throw InvalidArgument("ridge_fit inputs must be finite");
    if (X.rows() != f.size())
        throw InvalidArgument("ridge_fit: rows of X must match f");

    const Index K = X.rows();
    const Index d = X.cols();
    RidgeFit fit;
    fit.alpha = alpha;
    if (d <= K) {
        const Matrix A =
            X.transpose() * X + alpha * Matrix::Identity(d, d);
        fit.theta = A.ldlt().solve(X.transpose() * f);
    } else {
        const Matrix A =
            X * X.transpose() + alpha * Matrix::Identity(K, K);
        fit.theta = X.transpose() * A.ldlt().solve(f);
    }
    return fit;
}

RidgeFit ridge_fit(const WeightedCoordinates& W, const Vector& f,
                   double alpha) {
    RidgeFit fit = ridge_fit(feature_matrix(W), f, alpha);
    fit.feature_scaling = W.weights.cwiseSqrt();
    return fit;
}

Vector ridge_predict(const Matrix& X, const RidgeFit& fit) {
    if (X.cols() != fit.theta.size())
        throw InvalidArgument("ridge_predict: feature width mismatch");
    return X * fit.theta;
}

double pearson_r(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw InvalidArgument("pearson_r inputs must have equal length");
    const std::size_t n = a.size();
    if (n < 2) throw DegenerateInput("pearson_r needs at least 2 points");

    long double ma = 0.0L, mb = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= static_cast<long double>(n);
    mb /= static_cast<long double>(n);

    long double saa = 0.0L, sbb = 0.0L, sab = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
        const long double da = a[i] - ma;
        const long double db = b[i] - mb;
        saa += da * da;
        sbb += db * db;
        sab += da * db;
    }
    if (saa == 0.0L || sbb == 0.0L)
        throw DegenerateInput("pearson_r input has zero variance");
    const double r = static_cast<double>(sab / std::sqrt(saa * sbb));
    return std::clamp(r, -1.0, 1.0);
}

double pearson_r(const Vector& a, const Vector& b) {
    return pearson_r(std::span<const double>(a.data(),
                                             static_cast<std::size_t>(a.size())),
                     std::span<const double>(b.data(),
                                             static_cast<std::size_t>(b.size())));
}

namespace {

// Groups are shuffled with the seed, then each group lands in the currently
// smallest fold, so one model type never straddles folds.
std::vector<std::vector<Index>> grouped_folds(
    const std::vector<std::string>& labels, int folds, std::uint64_t seed) {
    std::vector<std::string> group_names;
    std::vector<std::vector<Index>> members;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        auto it = std::find(group_names.begin(), group_names.end(), labels[i]);
        if (it == group_names.end()) {
            group_names.push_back(labels[i]);
            members.emplace_back();
            it = group_names.end() - 1;
        }
        members[static_cast<std::size_t>(it - group_names.begin())].push_back(
            static_cast<Index>(i));
    }
    if (group_names.size() < static_cast<std::size_t>(folds))
        throw InvalidFolds("fewer model-type groups than folds");

    std::vector<std::size_t> order(group_names.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(derive_seed(seed, 0xf01d));
    for (std::size_t i = order.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(
            uniform01(rng) * static_cast<double>(i));
        std::swap(order[i - 1], order[std::min(j, i - 1)]);
    }

    std::vector<std::vector<Index>> fold_members(static_cast<std::size_t>(folds));
    for (const std::size_t g : order) {
        std::size_t target = 0;
        for (std::size_t f = 1; f < fold_members.size(); ++f)
            if (fold_members[f].size() < fold_members[target].size()) target = f;
        fold_members[target].insert(fold_members[target].end(),
                                    members[g].begin(), members[g].end());
    }
    return fold_members;
}

std::vector<std::vector<Index>> plain_folds(const std::vector<Index>& rows,
                                            int folds, std::uint64_t seed) {
    std::vector<Index> shuffled = rows;
    std::mt19937_64 rng(seed);
    for (std::size_t i = shuffled.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(
            uniform01(rng) * static_cast<double>(i));
        std::swap(shuffled[i - 1], shuffled[std::min(j, i - 1)]);
    }
    std::vector<std::vector<Index>> out(static_cast<std::size_t>(folds));
    for (std::size_t i = 0; i < shuffled.size(); ++i)
        out[i % static_cast<std::size_t>(folds)].push_back(shuffled[i]);
    return out;
}

Matrix take_rows(const Matrix& X, const std::vector<Index>& rows) {
    Matrix out(static_cast<Index>(rows.size()), X.cols());
    for (std::size_t i = 0; i < rows.size(); ++i)
        out.row(static_cast<Index>(i)) = X.row(rows[i]);
    return out;
}

Vector take(const Vector& v, const std::vector<Index>& rows) {
    Vector out(static_cast<Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        out(static_cast<Index>(i)) = v(rows[i]);
    return out;
}

double select_alpha(const Matrix& X, const Vector& f,
                    const std::vector<Index>& train_rows,
                    const std::vector<double>& alpha_grid, int inner_folds,
                    std::uint64_t seed) {
    const auto chunks = plain_folds(train_rows, inner_folds, seed);
    double best_alpha = alpha_grid.front();
    double best_mse = std::numeric_limits<double>::infinity();
    for (const double alpha : alpha_grid) {
        long double sq = 0.0L;
        std::size_t count = 0;
        for (std::size_t v = 0; v < chunks.size(); ++v) {
            if (chunks[v].empty()) continue;
            std::vector<Index> fit_rows;
            for (std::size_t u = 0; u < chunks.size(); ++u)
                if (u != v)
                    fit_rows.insert(fit_rows.end(), chunks[u].begin(),
                                    chunks[u].end());
            if (fit_rows.empty()) continue;
            const RidgeFit fit =
                ridge_fit(take_rows(X, fit_rows), take(f, fit_rows), alpha);
            const Vector pred = ridge_predict(take_rows(X, chunks[v]), fit);
            const Vector truth = take(f, chunks[v]);
            sq += (pred - truth).squaredNorm();
            count += chunks[v].size();
        }
        const double mse = count ? static_cast<double>(sq) /
                                       static_cast<double>(count)
                                 : std::numeric_limits<double>::infinity();
        if (mse < best_mse) {
            best_mse = mse;
            best_alpha = alpha;
        }
    }
    return best_alpha;
}

}  // namespace

CvResult nested_cv_predict(const Matrix& X, const ScoreTable& scores,
                           const std::string& task, const CvConfig& cfg) {
    if (cfg.alpha_grid.empty())
        throw InvalidArgument("alpha grid must not be empty");
    if (cfg.outer_folds < 2 || cfg.inner_folds < 2)
        throw InvalidArgument("fold counts must be >= 2");
    if (cfg.seeds.empty()) throw InvalidArgument("need at least one seed");
    if (X.rows() != scores.model_count())
        throw InvalidArgument("feature rows must match the score table");

    const auto task_it =
        std::find(scores.task_names.begin(), scores.task_names.end(), task);
    if (task_it == scores.task_names.end())
        throw InvalidArgument("unknown task: " + task);
    const Vector f =
        scores.scores.col(task_it - scores.task_names.begin());

    std::vector<double> alpha_grid = cfg.alpha_grid;
    std::sort(alpha_grid.begin(), alpha_grid.end());

    const Index K = X.rows();
    CvResult result;
    result.predictions = Matrix::Zero(K, static_cast<Index>(cfg.seeds.size()));

    for (std::size_t si = 0; si < cfg.seeds.size(); ++si) {
        const std::uint64_t seed = cfg.seeds[si];
        const auto folds =
            grouped_folds(scores.group_labels, cfg.outer_folds, seed);

        Vector pred = Vector::Zero(K);
        for (std::size_t fo = 0; fo < folds.size(); ++fo) {
            if (folds[fo].empty()) continue;
            std::vector<Index> train_rows;
            for (std::size_t u = 0; u < folds.size(); ++u)
                if (u != fo)
                    train_rows.insert(train_rows.end(), folds[u].begin(),
                                      folds[u].end());
            const double alpha =
                select_alpha(X, f, train_rows, alpha_grid, cfg.inner_folds,
                             derive_seed(seed, 0x1dd0 + fo));
            result.selected_alphas.push_back(alpha);
            const RidgeFit fit =
                ridge_fit(take_rows(X, train_rows), take(f, train_rows), alpha);
            const Vector fold_pred = ridge_predict(take_rows(X, folds[fo]), fit);
            for (std::size_t i = 0; i < folds[fo].size(); ++i)
                pred(folds[fo][i]) = fold_pred(static_cast<Index>(i));
        }
        if (cfg.clip) {
            for (Index i = 0; i < K; ++i)
                pred(i) = std::clamp(pred(i), cfg.clip->first, cfg.clip->second);
        }
        result.predictions.col(static_cast<Index>(si)) = pred;
        result.r_per_seed.push_back(pearson_r(pred, f));
    }

    long double mean = 0.0L;
    for (const double r : result.r_per_seed) mean += r;
    mean /= static_cast<long double>(result.r_per_seed.size());
    long double var = 0.0L;
    for (const double r : result.r_per_seed) {
        const long double dv = r - mean;
        var += dv * dv;
    }
    result.r_mean = static_cast<double>(mean);
    result.r_std =
        result.r_per_seed.size() > 1
            ? std::sqrt(static_cast<double>(
                  var / static_cast<long double>(result.r_per_seed.size() - 1)))
            : 0.0;
    return result;
}

std::vector<double> alpha_grid_scores() {
    std::vector<double> grid;
    for (int e = 1; e <= 9; ++e) grid.push_back(std::pow(10.0, e));
    return grid;
}

std::vector<double> alpha_grid_loglik() {
    std::vector<double> grid;
    for (int e = -4; e <= 4; ++e) grid.push_back(std::pow(10.0, e));
    return grid;
}

}  // namespace modelmap
