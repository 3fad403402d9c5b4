#pragma once

#include <variant>
#include <vector>

#include "specmap/fmap.hpp"

namespace specmap {

struct ZoomOutConfig {
  enum class Mode { Hard, Soft };

  int k_init = 30;
  int k_final = 130;
  int step = 10;
  double sigma = 1e-2;  // blur of the soft-map substitution
  Mode mode = Mode::Hard;
  bool keep_snapshots = true;

  // k_init, k_init+step, ..., capped at k_final.
  std::vector<int> schedule() const;
  // Throws ConfigError / KTooLarge for invalid sizes.
  void validate(int basis1_size, int basis2_size) const;
};

struct RefinementTrace {
  std::vector<int> sizes;                // k of every iteration
  std::vector<FunctionalMap> snapshots;  // per-iteration maps (may be empty)
  FunctionalMap final_fmap;              // last iteration, always kept
  std::variant<VertexMap, ScalableSoftMap> final_map;

  const VertexMap& final_vertex_map() const { return std::get<VertexMap>(final_map); }
  const ScalableSoftMap& final_soft_map() const { return std::get<ScalableSoftMap>(final_map); }
};

// Spectral upsampling refinement: for each k in the schedule, pull the
// current pointwise map back to a k x k functional map, then recover a
// pointwise map by (hard) nearest neighbor between the rows of phi1 * c' and
// phi2, or (soft) the differentiable soft-map substitution with the
// configured blur. Every emitted map is proper by construction. In hard
// mode the nearest-neighbor search is warm-started from the previous
// iteration's map.
RefinementTrace zoomout(const VertexMap& init, const EigenBasis& basis1,
                        const EigenBasis& basis2, const ZoomOutConfig& config);
RefinementTrace zoomout(const ScalableSoftMap& init, const EigenBasis& basis1,
                        const EigenBasis& basis2, const ZoomOutConfig& config);

struct DiffZoomOutResult {
  FunctionalMap c_init;     // k_init x k_init
  FunctionalMap c_refined;  // final size
  RefinementTrace trace;
};

// Soft-mode refinement from raw features: builds the initial soft map from
// (f1, f2, sigma) and runs the loop. The whole forward pass is a composition
// of soft-map applications and projections, hence differentiable in the
// features; it shares the code path of zoomout(), so values agree exactly.
DiffZoomOutResult differentiable_zoomout(const Eigen::MatrixXd& f1, const Eigen::MatrixXd& f2,
                                         const EigenBasis& basis1, const EigenBasis& basis2,
                                         const ZoomOutConfig& config);

// |c'c - I|_F^2
double orthogonality_loss(const FunctionalMap& fmap);

// |c_init - top-left block of c_refined|_F^2; throws DimensionMismatch if
// the refined map is smaller than the initial one.
double consistency_loss(const FunctionalMap& c_init, const FunctionalMap& c_refined);

// |mask o c|_F^2 with the resolvent mask built from the two spectra.
double laplacian_commutativity_loss(const FunctionalMap& fmap,
                                    const Eigen::Ref<const Eigen::VectorXd>& lambda1,
                                    const Eigen::Ref<const Eigen::VectorXd>& lambda2);

struct LossWeights {
  double orth = 1.0;
  double consist = 1e-4;
  double lap = 1e2;
};

struct LossBreakdown {
  double total = 0.0;
  double orth = 0.0;
  double consist = 0.0;
  double lap = 0.0;
};

struct LossGradients {
  Eigen::MatrixXd df1;  // n1 x p
  Eigen::MatrixXd df2;  // n2 x p
  LossBreakdown loss;
  DiffZoomOutResult forward;
};

// Gradient of
//   w_orth * L_orth(c_init) + w_consist * L_consist(c_init, c_refined)
//     + w_lap * L_lap(c_init)
// with respect to both feature matrices, chained through every soft-map
// iteration. The backward pass rebuilds each iteration's soft map from the
// stored snapshots instead of caching kernel state, so memory stays linear
// in the vertex counts. stop_refined_gradient treats c_refined as a fixed
// target (no backpropagation through the refinement loop); the default lets
// gradients flow through the whole chain.
LossGradients loss_gradients(const Eigen::MatrixXd& f1, const Eigen::MatrixXd& f2,
                             const EigenBasis& basis1, const EigenBasis& basis2,
                             const ZoomOutConfig& config, const LossWeights& weights,
                             bool stop_refined_gradient = false);

}  // namespace specmap
