#include "modelmap/mapalign.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <unordered_map>

#include "modelmap/matrixcore.hpp"

namespace modelmap {

Embedding2D pca_embed(const Matrix& row_coords,
                      std::vector<std::string> model_ids,
                      std::string trial_id) {
    const Index K = row_coords.rows();
    if (K < 2) throw InvalidArgument("pca_embed needs at least two models");

    Matrix centered = row_coords;
    const Eigen::RowVectorXd mean = centered.colwise().mean();
    centered.rowwise() -= mean;
    if (centered.lpNorm<Eigen::Infinity>() == 0.0)
        throw DegenerateMatrix("pca_embed on a rank-0 point cloud");

    Eigen::BDCSVD<Matrix> svd(centered, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Index comps = std::min<Index>(2, svd.matrixV().cols());

    Matrix coords = Matrix::Zero(K, 2);
    for (Index c = 0; c < comps; ++c) {
        Vector loading = svd.matrixV().col(c);
        Index peak = 0;
        loading.cwiseAbs().maxCoeff(&peak);
        const double sign = loading(peak) < 0.0 ? -1.0 : 1.0;
        coords.col(c) = sign * (centered * loading);
    }
    return Embedding2D{std::move(coords), std::move(model_ids),
                       std::move(trial_id)};
}

Embedding2D pca_embed(const CenteredMatrix& Q, std::string trial_id) {
    return pca_embed(Q.values, Q.model_ids, std::move(trial_id));
}

Embedding2D pca_embed(const WeightedCoordinates& W, std::string trial_id) {
    return pca_embed(W.values, W.model_ids, std::move(trial_id));
}

Embedding2D center_embedding(const Embedding2D& e) {
    Embedding2D out = e;
    const Eigen::RowVectorXd mean = out.coords.colwise().mean();
    out.coords.rowwise() -= mean;
    return out;
}

Embedding2D procrustes_align(const Embedding2D& reference,
                             const Embedding2D& trial) {
    if (reference.model_ids != trial.model_ids)
        throw InvalidArgument("procrustes_align: model sets differ");
    if (reference.coords.rows() != trial.coords.rows())
        throw InvalidArgument("procrustes_align: row counts differ");

    // argmin_U ||A U - B||_F over orthogonal U is W V^T from the SVD of
    // A^T B = W S V^T; the classical solution admits reflections.
    const Eigen::Matrix2d M =
        trial.coords.transpose() * reference.coords;
    Eigen::JacobiSVD<Eigen::Matrix2d> svd(
        M, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::Matrix2d U = svd.matrixU() * svd.matrixV().transpose();

    Embedding2D out = trial;
    out.coords = trial.coords * U;
    return out;
}

std::vector<EllipseSummary> centrography(const std::vector<Embedding2D>& aligned) {
    const std::size_t R = aligned.size();
    if (R < 2) throw InsufficientTrials("centrography needs at least 2 trials");
    const Index K = aligned.front().coords.rows();
    for (const auto& e : aligned)
        if (e.coords.rows() != K || e.model_ids != aligned.front().model_ids)
            throw InvalidArgument("centrography: trials disagree on models");

    std::vector<EllipseSummary> out(static_cast<std::size_t>(K));
    for (Index i = 0; i < K; ++i) {
        Eigen::Vector2d mean = Eigen::Vector2d::Zero();
        for (const auto& e : aligned) mean += e.coords.row(i).transpose();
        mean /= static_cast<double>(R);

        Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
        for (const auto& e : aligned) {
            const Eigen::Vector2d dev = e.coords.row(i).transpose() - mean;
            cov += dev * dev.transpose();
        }
        cov /= static_cast<double>(R - 1);

        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
        const double lo = std::max(eig.eigenvalues()(0), 0.0);
        const double hi = std::max(eig.eigenvalues()(1), 0.0);

        EllipseSummary& ell = out[static_cast<std::size_t>(i)];
        ell.mean = mean;
        ell.cov = cov;
        ell.width = std::sqrt(hi);
        ell.height = std::sqrt(lo);
        const double gap = hi - lo;
        if (gap <= 1e-12 * std::max(hi, 1e-300)) {
            ell.angle = 0.0;  // tie-break for circular clouds
        } else {
            const Eigen::Vector2d lead = eig.eigenvectors().col(1);
            double angle = std::atan2(lead(1), lead(0));
            if (angle < 0.0) angle += std::numbers::pi;
            if (angle >= std::numbers::pi) angle -= std::numbers::pi;
            ell.angle = angle;
        }
    }
    return out;
}

WeightedCoordinates add_models(const LikelihoodMatrix& existing,
                               const LikelihoodMatrix& new_rows,
                               double threshold, const ResampleDraw& draw,
                               RowCenterMode mode) {
    const Index d = existing.values.cols();
    if (static_cast<std::size_t>(d) != draw.unique_count())
        throw InvalidArgument("existing matrix does not live on the draw");

    if (new_rows.values.rows() == 0)
        return weighted_center(existing.values, draw, mode, existing.model_ids);

    if (new_rows.values.cols() != d)
        throw InvalidArgument("new rows do not cover the draw's unique texts");

    // Reorder new columns to the existing text order; any mismatch in the
    // text sets is an error.
    Matrix new_vals = new_rows.values;
    if (!existing.text_ids.empty() && !new_rows.text_ids.empty()) {
        std::unordered_map<std::string, Index> pos;
        for (std::size_t t = 0; t < new_rows.text_ids.size(); ++t)
            pos.emplace(new_rows.text_ids[t], static_cast<Index>(t));
        if (pos.size() != new_rows.text_ids.size())
            throw InvalidArgument("duplicate text ids among new rows");
        Matrix reordered(new_rows.values.rows(), d);
        for (Index t = 0; t < d; ++t) {
            const auto it = pos.find(existing.text_ids[static_cast<std::size_t>(t)]);
            if (it == pos.end())
                throw InvalidArgument("new rows miss text " +
                                      existing.text_ids[static_cast<std::size_t>(t)]);
            reordered.col(t) = new_rows.values.col(it->second);
        }
        new_vals = std::move(reordered);
    }

    const Index K_old = existing.values.rows();
    const Index K_new = new_vals.rows();
    Matrix stacked(K_old + K_new, d);
    stacked.topRows(K_old) = existing.values;
    stacked.bottomRows(K_new) = new_vals.cwiseMax(threshold);

    std::vector<std::string> ids = existing.model_ids;
    ids.insert(ids.end(), new_rows.model_ids.begin(), new_rows.model_ids.end());
    return weighted_center(stacked, draw, mode, std::move(ids));
}

}  // namespace modelmap
