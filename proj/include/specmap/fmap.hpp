#pragma once

#include <Eigen/Core>
#include <cstdint>

#include "specmap/softmap.hpp"
#include "specmap/spectral.hpp"

namespace specmap {

// Spectral map coefficients. Direction convention, fixed repo-wide: the
// pointwise map sends shape 2 to shape 1 (Pi is n2 x n1), so c maps
// functions on shape 1 to functions on shape 2 and is k2 x k1.
struct FunctionalMap {
  Eigen::MatrixXd c;
  std::uint64_t source_basis = 0;  // basis of shape 1
  std::uint64_t target_basis = 0;  // basis of shape 2

  int k1() const { return static_cast<int>(c.cols()); }
  int k2() const { return static_cast<int>(c.rows()); }
};

// c = phi2^+ (Pi phi1) at sizes k2 x k1, computed through the streaming map
// application followed by spectral projection; Pi is never materialized.
FunctionalMap pullback(const EigenBasis& basis1, const EigenBasis& basis2,
                       const ScalableSoftMap& map, int k1, int k2);
FunctionalMap pullback(const EigenBasis& basis1, const EigenBasis& basis2,
                       const VertexMap& map, int k1, int k2);

// Pointwise map recovery: nearest neighbor between the rows of phi1 * c' and
// the rows of phi2. The optional seed warm-starts the pruned search.
VertexMap fmap_to_pointwise_hard(const FunctionalMap& fmap, const EigenBasis& basis1,
                                 const EigenBasis& basis2,
                                 const std::vector<int>* seed = nullptr);

// Differentiable substitution of the nearest-neighbor step: a soft map with
// source features phi1 * c' and target features phi2.
ScalableSoftMap fmap_to_pointwise_soft(const FunctionalMap& fmap, const EigenBasis& basis1,
                                       const EigenBasis& basis2, double sigma);

// Elementwise resolvent penalty mask (squared), k2 x k1:
//   mask_ij = (sqrt(l2_i)/(1+l2_i) - sqrt(l1_j)/(1+l1_j))^2
//           + (1/(1+l2_i) - 1/(1+l1_j))^2
Eigen::MatrixXd resolvent_mask_squared(const Eigen::Ref<const Eigen::VectorXd>& lambda1,
                                       const Eigen::Ref<const Eigen::VectorXd>& lambda2);

// Least-squares baseline min_c |c a1 - a2|^2 + reg * |mask o c|^2, solved one
// row at a time (each row is an independent SPD system). Rank deficiency at
// p < k1 gets an automatic ridge of 1e-9 * trace(a1 a1')/k1; a singular
// system with reg_weight = 0 throws SingularSystem.
FunctionalMap solve_least_squares_fmap(const Eigen::MatrixXd& a1, const Eigen::MatrixXd& a2,
                                       const Eigen::Ref<const Eigen::VectorXd>& lambda1,
                                       const Eigen::Ref<const Eigen::VectorXd>& lambda2,
                                       double reg_weight);

// Top-left k2 x k1 block; basis identities preserved.
FunctionalMap principal_submatrix(const FunctionalMap& fmap, int k2, int k1);

}  // namespace specmap
