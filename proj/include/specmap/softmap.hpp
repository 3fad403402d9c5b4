#pragma once

#include <Eigen/Core>
#include <vector>

#include "specmap/errors.hpp"

namespace specmap {

// Hard correspondence: one source-vertex index per target vertex.
struct VertexMap {
  std::vector<int> indices;  // length n2, values in [0, source_count)
  int source_count = 0;      // n1

  int n2() const { return static_cast<int>(indices.size()); }
};

VertexMap identity_vertex_map(int n);

enum class KernelType { GaussianRowSoftmax };

// Implicit row-stochastic map Pi in R^{n2 x n1} with
//   Pi_ij = exp(d_ij) / sum_k exp(d_ik),  d_ij = -|f2_i - f1_j|^2 / (2 sigma^2).
// Only the two feature matrices and the blur are stored; products against
// Pi are evaluated by blockwise streaming reductions, so nothing of size
// n1*n2 ever exists.
class ScalableSoftMap {
 public:
  ScalableSoftMap(Eigen::MatrixXd f1, Eigen::MatrixXd f2, double sigma,
                  KernelType kernel = KernelType::GaussianRowSoftmax);

  int n1() const { return static_cast<int>(f1_.rows()); }
  int n2() const { return static_cast<int>(f2_.rows()); }
  int feature_dim() const { return static_cast<int>(f1_.cols()); }
  double sigma() const { return sigma_; }
  KernelType kernel() const { return kernel_; }
  const Eigen::MatrixXd& f1() const { return f1_; }
  const Eigen::MatrixXd& f2() const { return f2_; }

 private:
  Eigen::MatrixXd f1_;  // n1 x p, source features
  Eigen::MatrixXd f2_;  // n2 x p, target features
  double sigma_ = 0.0;
  KernelType kernel_ = KernelType::GaussianRowSoftmax;
};

// Blocking parameters for the streaming kernels. source_block is the
// granularity of the running log-sum-exp rescaling; accumulation over
// source blocks is always in ascending order, which makes repeated runs
// bitwise identical.
struct BlockSpec {
  int target_tile = 1024;
  int source_block = 256;
};

// Pi * b without forming Pi: per target tile, source blocks are folded into
// a running stabilized log-sum-exp accumulator (online max rescaling).
// b is n1 x d; the result is n2 x d.
Eigen::MatrixXd apply(const ScalableSoftMap& map, const Eigen::Ref<const Eigen::MatrixXd>& b,
                      const BlockSpec& blocks = {});

struct AdjointResult {
  Eigen::MatrixXd df1;  // n1 x p
  Eigen::MatrixXd df2;  // n2 x p
};

// Gradient of <g, Pi*b> with respect to both feature matrices, streamed with
// the same blocking: one pass recomputes the row normalizers, a second pass
// accumulates the weighted contributions. Kernel weights are recomputed
// rather than cached, keeping memory linear.
AdjointResult apply_adjoint(const ScalableSoftMap& map,
                            const Eigen::Ref<const Eigen::MatrixXd>& g,
                            const Eigen::Ref<const Eigen::MatrixXd>& b,
                            bool want_df1 = true, bool want_df2 = true,
                            const BlockSpec& blocks = {});

// Per-row argmax of Pi, i.e. the nearest source feature row for every target
// row. Ties break to the lowest source index.
VertexMap extract_pointwise(const ScalableSoftMap& map);

// Gather: output row i = b row vmap[i].
Eigen::MatrixXd pointwise_apply(const VertexMap& vmap,
                                const Eigen::Ref<const Eigen::MatrixXd>& b);

// Exact blockwise nearest neighbor between rows: for every query row, the
// index of the closest database row in Euclidean distance (ties to the
// lowest index). The database is partitioned into contiguous cells whose
// centroid/radius give triangle-inequality lower bounds, so cells that
// provably cannot beat the current best are skipped; results are identical
// to a full scan. An optional seed (a guess per query, e.g. the previous
// iteration of a refinement loop) tightens the initial bound.
std::vector<int> nearest_rows(const Eigen::MatrixXd& database,
                              const Eigen::MatrixXd& queries,
                              const std::vector<int>* seed = nullptr);

}  // namespace specmap
