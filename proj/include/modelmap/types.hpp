#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "modelmap/common.hpp"

namespace modelmap {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

enum class Method { uniform, ls, kl };

const char* method_name(Method m);
Method method_from_name(const std::string& name);

// Raw K x N log-likelihoods (nats). Rows are models, columns are texts.
struct LikelihoodMatrix {
    Matrix values;
    std::vector<std::string> model_ids;
    std::vector<std::string> text_ids;
    std::optional<double> clip_threshold;

    Index model_count() const { return values.rows(); }
    Index text_count() const { return values.cols(); }
};

// Doubly centered coordinates Q. Row i is the coordinate vector of model i;
// all row and column means are zero.
struct CenteredMatrix {
    Matrix values;
    std::vector<std::string> model_ids;
    std::vector<std::string> text_ids;

    Index model_count() const { return values.rows(); }
    Index text_count() const { return values.cols(); }
};

enum class DistanceKind { exact, resampled };

// K x K squared distances between model coordinates. `scale` records the
// comparability factor already multiplied into the entries (N/n style);
// resampled distances carry it through their weights and store scale = 1.
struct DistanceMatrix {
    Matrix values;
    double scale = 1.0;
    DistanceKind kind = DistanceKind::exact;
    std::vector<std::string> model_ids;
};

// Resampling probabilities over the N texts of one centered matrix.
struct SamplingPlan {
    Method method = Method::uniform;
    Vector probs;
    std::uint64_t source_hash = 0;

    Index text_count() const { return probs.size(); }
};

// One with-replacement resample of n texts: the d unique indices (ascending),
// how often each was drawn, and the inverse-probability weights
// w_t = c(u_t) / (n * pi_{u_t}).
struct ResampleDraw {
    std::size_t n = 0;
    std::vector<Index> unique_indices;
    std::vector<std::uint64_t> counts;
    Vector weights;
    std::uint64_t seed = 0;
    Index population_size = 0;  // N of the source plan

    std::size_t unique_count() const { return unique_indices.size(); }
};

// K x d weighted-centered coordinates on the unique texts of one draw.
struct WeightedCoordinates {
    Matrix values;
    Vector weights;
    ResampleDraw draw;
    std::vector<std::string> model_ids;

    Index model_count() const { return values.rows(); }
    Index unique_count() const { return values.cols(); }
};

// 2-D map coordinates for K models from one embedding trial.
struct Embedding2D {
    Matrix coords;  // K x 2
    std::vector<std::string> model_ids;
    std::string trial_id;

    Index model_count() const { return coords.rows(); }
};

// Per-model positional summary across aligned trials: mean, covariance and
// the 1-standard-deviation ellipse derived from it.
struct EllipseSummary {
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
    double width = 0.0;   // sqrt of leading eigenvalue
    double height = 0.0;  // sqrt of trailing eigenvalue
    double angle = 0.0;   // radians in [0, pi)
};

// Benchmark scores (or other targets) for K models across T tasks, plus the
// model-type labels used to build grouped CV folds.
struct ScoreTable {
    std::vector<std::string> model_ids;
    std::vector<std::string> task_names;
    Matrix scores;  // K x T
    std::vector<std::string> group_labels;

    Index model_count() const { return scores.rows(); }
    Index task_count() const { return scores.cols(); }
};

struct RidgeFit {
    Vector theta;
    double alpha = 0.0;
    Vector feature_scaling;  // diagonal of W^{1/2}, when known
};

}  // namespace modelmap
