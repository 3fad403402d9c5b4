#include "specmap/zoomout.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

namespace specmap {

std::vector<int> ZoomOutConfig::schedule() const {
  std::vector<int> sizes;
  for (int k = k_init; k <= k_final; k += step) sizes.push_back(k);
  return sizes;
}

void ZoomOutConfig::validate(int basis1_size, int basis2_size) const {
  if (k_init < 2) throw ConfigError("k_init must be at least 2");
  if (step < 1) throw ConfigError("step must be at least 1");
  if (k_final < k_init) throw ConfigError("k_final must be >= k_init");
  if (mode == Mode::Soft && !(sigma > 0.0)) throw ConfigError("soft mode needs a positive blur");
  if (k_final > std::min(basis1_size, basis2_size))
    throw KTooLarge("k_final exceeds the available basis sizes");
}

namespace {

struct LoopState {
  // Exactly one of these is the current pointwise map.
  std::optional<VertexMap> hard;
  std::optional<ScalableSoftMap> soft;
};

RefinementTrace run_zoomout(LoopState state, const EigenBasis& basis1, const EigenBasis& basis2,
                            const ZoomOutConfig& config) {
  config.validate(basis1.size(), basis2.size());
  const int n1 = basis1.n(), n2 = basis2.n();
  const int state_n1 = state.hard ? state.hard->source_count : state.soft->n1();
  const int state_n2 = state.hard ? state.hard->n2() : state.soft->n2();
  if (state_n1 != n1 || state_n2 != n2)
    throw DimensionMismatch("initial map and bases disagree on vertex counts");

  RefinementTrace trace;
  trace.sizes = config.schedule();
  if (config.keep_snapshots) trace.snapshots.reserve(trace.sizes.size());

  for (size_t it = 0; it < trace.sizes.size(); ++it) {
    const int k = trace.sizes[it];
    FunctionalMap fmap = state.hard ? pullback(basis1, basis2, *state.hard, k, k)
                                    : pullback(basis1, basis2, *state.soft, k, k);
    if (config.keep_snapshots) trace.snapshots.push_back(fmap);

    if (config.mode == ZoomOutConfig::Mode::Hard) {
      // The previous map seeds the pruned nearest-neighbor search.
      const std::vector<int>* seed = state.hard ? &state.hard->indices : nullptr;
      state.hard = fmap_to_pointwise_hard(fmap, basis1, basis2, seed);
      state.soft.reset();
    } else {
      state.soft = fmap_to_pointwise_soft(fmap, basis1, basis2, config.sigma);
      state.hard.reset();
    }
    if (it + 1 == trace.sizes.size()) trace.final_fmap = std::move(fmap);
  }

  if (config.mode == ZoomOutConfig::Mode::Hard) trace.final_map = std::move(*state.hard);
  else trace.final_map = std::move(*state.soft);
  return trace;
}

}  // namespace

RefinementTrace zoomout(const VertexMap& init, const EigenBasis& basis1, const EigenBasis& basis2,
                        const ZoomOutConfig& config) {
  LoopState state;
  state.hard = init;
  return run_zoomout(std::move(state), basis1, basis2, config);
}

RefinementTrace zoomout(const ScalableSoftMap& init, const EigenBasis& basis1,
                        const EigenBasis& basis2, const ZoomOutConfig& config) {
  LoopState state;
  state.soft = init;
  return run_zoomout(std::move(state), basis1, basis2, config);
}

DiffZoomOutResult differentiable_zoomout(const Eigen::MatrixXd& f1, const Eigen::MatrixXd& f2,
                                         const EigenBasis& basis1, const EigenBasis& basis2,
                                         const ZoomOutConfig& config) {
  if (config.mode != ZoomOutConfig::Mode::Soft)
    throw ConfigError("differentiable refinement requires soft mode");
  ZoomOutConfig cfg = config;
  cfg.keep_snapshots = true;
  DiffZoomOutResult result;
  result.trace = zoomout(ScalableSoftMap(f1, f2, cfg.sigma), basis1, basis2, cfg);
  result.c_init = result.trace.snapshots.front();
  result.c_refined = result.trace.final_fmap;
  return result;
}

double orthogonality_loss(const FunctionalMap& fmap) {
  const Eigen::MatrixXd gram = fmap.c.transpose() * fmap.c;
  return (gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).squaredNorm();
}

double consistency_loss(const FunctionalMap& c_init, const FunctionalMap& c_refined) {
  if (c_refined.k1() < c_init.k1() || c_refined.k2() < c_init.k2())
    throw DimensionMismatch("refined map smaller than the initial map");
  return (c_init.c - c_refined.c.topLeftCorner(c_init.k2(), c_init.k1())).squaredNorm();
}

double laplacian_commutativity_loss(const FunctionalMap& fmap,
                                    const Eigen::Ref<const Eigen::VectorXd>& lambda1,
                                    const Eigen::Ref<const Eigen::VectorXd>& lambda2) {
  if (lambda1.size() < fmap.k1() || lambda2.size() < fmap.k2())
    throw DimensionMismatch("eigenvalue lists shorter than the map");
  const Eigen::MatrixXd mask =
      resolvent_mask_squared(lambda1.head(fmap.k1()), lambda2.head(fmap.k2()));
  return (mask.array() * fmap.c.array().square()).sum();
}

LossGradients loss_gradients(const Eigen::MatrixXd& f1, const Eigen::MatrixXd& f2,
                             const EigenBasis& basis1, const EigenBasis& basis2,
                             const ZoomOutConfig& config, const LossWeights& weights,
                             bool stop_refined_gradient) {
  LossGradients out;
  out.forward = differentiable_zoomout(f1, f2, basis1, basis2, config);
  const auto& snapshots = out.forward.trace.snapshots;
  const auto& sizes = out.forward.trace.sizes;
  const int iterations = static_cast<int>(sizes.size());
  const FunctionalMap& c_init = out.forward.c_init;
  const FunctionalMap& c_refined = out.forward.c_refined;
  const int k0 = c_init.k2();

  out.loss.orth = orthogonality_loss(c_init);
  out.loss.consist = consistency_loss(c_init, c_refined);
  out.loss.lap = laplacian_commutativity_loss(c_init, basis1.lambda(), basis2.lambda());
  out.loss.total = weights.orth * out.loss.orth + weights.consist * out.loss.consist +
                   weights.lap * out.loss.lap;

  // Direct loss gradients with respect to the two maps the loss reads.
  const Eigen::MatrixXd consist_diff =
      c_init.c - c_refined.c.topLeftCorner(k0, k0);  // k0 x k0
  Eigen::MatrixXd dc_init =
      weights.orth * 4.0 *
      (c_init.c * (c_init.c.transpose() * c_init.c -
                   Eigen::MatrixXd::Identity(c_init.k1(), c_init.k1())));
  dc_init += weights.consist * 2.0 * consist_diff;
  dc_init += weights.lap * 2.0 *
             (resolvent_mask_squared(basis1.lambda().head(c_init.k1()),
                                     basis2.lambda().head(c_init.k2()))
                  .array() *
              c_init.c.array())
                 .matrix();

  const Eigen::VectorXd& area2 = basis2.areas();

  // Reverse sweep: each iteration t computed
  //   c_t = phi2_k' A2 apply(M_t, phi1_k),  M_t = soft(phi1_kp * c_{t-1}', phi2_kp)
  // so a cotangent on c_t flows into c_{t-1} through the adjoint of the
  // soft-map application. Maps are rebuilt from the snapshots; nothing of
  // size n1 x n2 is ever stored.
  Eigen::MatrixXd dc = Eigen::MatrixXd::Zero(c_refined.k2(), c_refined.k1());
  if (!stop_refined_gradient && iterations > 1)
    dc.topLeftCorner(k0, k0) = weights.consist * -2.0 * consist_diff;

  for (int t = iterations - 1; t >= 1; --t) {
    const int k = sizes[static_cast<size_t>(t)];
    const int kp = sizes[static_cast<size_t>(t) - 1];
    if (dc.isZero(0.0)) {
      dc = Eigen::MatrixXd::Zero(kp, kp);
      continue;
    }
    const Eigen::MatrixXd dy =
        area2.asDiagonal() * (basis2.phi().leftCols(k) * dc);  // n2 x k
    const Eigen::MatrixXd embedding =
        basis1.phi().leftCols(kp) * snapshots[static_cast<size_t>(t) - 1].c.transpose();
    const ScalableSoftMap soft(embedding, basis2.phi().leftCols(kp), config.sigma);
    const Eigen::MatrixXd de =
        apply_adjoint(soft, dy, basis1.phi().leftCols(k), true, false).df1;  // n1 x kp
    dc = de.transpose() * basis1.phi().leftCols(kp);  // kp x kp
  }

  // Through the initial map, whose features are the actual parameters.
  Eigen::MatrixXd dc0 = dc_init;
  if (iterations > 1) dc0 += dc;
  else if (!stop_refined_gradient) dc0 += weights.consist * -2.0 * consist_diff;
  const Eigen::MatrixXd dy0 = area2.asDiagonal() * (basis2.phi().leftCols(k0) * dc0);
  const ScalableSoftMap initial(f1, f2, config.sigma);
  AdjointResult adjoint = apply_adjoint(initial, dy0, basis1.phi().leftCols(k0), true, true);
  out.df1 = std::move(adjoint.df1);
  out.df2 = std::move(adjoint.df2);
  return out;
}

}  // namespace specmap
