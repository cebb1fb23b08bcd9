#pragma once

#include <string>
#include <vector>

#include "modelmap/sampling.hpp"
#include "modelmap/types.hpp"

namespace modelmap {

// Projection of row coordinates onto the top-2 principal directions.
// Deterministic sign convention: the largest-magnitude loading of each
// direction is made positive.
Embedding2D pca_embed(const Matrix& row_coords,
                      std::vector<std::string> model_ids,
                      std::string trial_id = {});
Embedding2D pca_embed(const CenteredMatrix& Q, std::string trial_id = {});
Embedding2D pca_embed(const WeightedCoordinates& W, std::string trial_id = {});

// Coordinates minus their mean point.
Embedding2D center_embedding(const Embedding2D& e);

// Z = Y_r U with orthogonal U minimizing ||Y_r U - Y_ref||_F (reflections
// allowed). Both inputs must be centered and share the model ordering.
Embedding2D procrustes_align(const Embedding2D& reference,
                             const Embedding2D& trial);

// Per-model mean and sample covariance across aligned trials, and the
// 1-standard-deviation ellipse from the covariance eigenstructure.
std::vector<EllipseSummary> centrography(const std::vector<Embedding2D>& aligned);

// New-model workflow: clip the new rows at the stored threshold, stack them
// under the existing rows and redo weighted centering with the stored draw.
// Both matrices live on the draw's unique texts, matched by text id.
WeightedCoordinates add_models(const LikelihoodMatrix& existing,
                               const LikelihoodMatrix& new_rows,
                               double threshold, const ResampleDraw& draw,
                               RowCenterMode mode = RowCenterMode::self_normalized);

}  // namespace modelmap
