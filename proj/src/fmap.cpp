#include "specmap/fmap.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace specmap {

namespace {

void check_sizes(const EigenBasis& basis1, const EigenBasis& basis2, int n1, int n2, int k1,
                 int k2) {
  if (basis1.n() != n1 || basis2.n() != n2)
    throw DimensionMismatch("pullback: map and bases disagree on vertex counts");
  if (k1 < 1 || k1 > basis1.size() || k2 < 1 || k2 > basis2.size())
    throw KTooLarge("pullback: requested sizes exceed the bases");
}

}  // namespace

FunctionalMap pullback(const EigenBasis& basis1, const EigenBasis& basis2,
                       const ScalableSoftMap& map, int k1, int k2) {
  check_sizes(basis1, basis2, map.n1(), map.n2(), k1, k2);
  const EigenBasis b2 = basis2.truncated(k2);
  FunctionalMap fmap;
  fmap.c = b2.project(apply(map, basis1.phi().leftCols(k1)));
  fmap.source_basis = basis1.id();
  fmap.target_basis = basis2.id();
  return fmap;
}

FunctionalMap pullback(const EigenBasis& basis1, const EigenBasis& basis2, const VertexMap& map,
                       int k1, int k2) {
  check_sizes(basis1, basis2, map.source_count, map.n2(), k1, k2);
  const EigenBasis b2 = basis2.truncated(k2);
  FunctionalMap fmap;
  fmap.c = b2.project(pointwise_apply(map, basis1.phi().leftCols(k1)));
  fmap.source_basis = basis1.id();
  fmap.target_basis = basis2.id();
  return fmap;
}

namespace {

Eigen::MatrixXd spectral_embedding(const FunctionalMap& fmap, const EigenBasis& basis1) {
  if (fmap.k1() > basis1.size())
    throw DimensionMismatch("functional map wider than the source basis");
  return basis1.phi().leftCols(fmap.k1()) * fmap.c.transpose();  // n1 x k2
}

}  // namespace

VertexMap fmap_to_pointwise_hard(const FunctionalMap& fmap, const EigenBasis& basis1,
                                 const EigenBasis& basis2, const std::vector<int>* seed) {
  if (fmap.k2() > basis2.size())
    throw DimensionMismatch("functional map taller than the target basis");
  const Eigen::MatrixXd database = spectral_embedding(fmap, basis1);
  const Eigen::MatrixXd queries = basis2.phi().leftCols(fmap.k2());
  VertexMap map;
  map.source_count = basis1.n();
  map.indices = nearest_rows(database, queries, seed);
  return map;
}

ScalableSoftMap fmap_to_pointwise_soft(const FunctionalMap& fmap, const EigenBasis& basis1,
                                       const EigenBasis& basis2, double sigma) {
  if (fmap.k2() > basis2.size())
    throw DimensionMismatch("functional map taller than the target basis");
  return ScalableSoftMap(spectral_embedding(fmap, basis1), basis2.phi().leftCols(fmap.k2()),
                         sigma);
}

Eigen::MatrixXd resolvent_mask_squared(const Eigen::Ref<const Eigen::VectorXd>& lambda1,
                                       const Eigen::Ref<const Eigen::VectorXd>& lambda2) {
  const Eigen::Index k1 = lambda1.size();
  const Eigen::Index k2 = lambda2.size();
  Eigen::MatrixXd mask(k2, k1);
  for (Eigen::Index i = 0; i < k2; ++i) {
    const double li = lambda2[i];
    const double hi = std::sqrt(li) / (1.0 + li);
    const double gi = 1.0 / (1.0 + li);
    for (Eigen::Index j = 0; j < k1; ++j) {
      const double lj = lambda1[j];
      const double hj = std::sqrt(lj) / (1.0 + lj);
      const double gj = 1.0 / (1.0 + lj);
      mask(i, j) = (hi - hj) * (hi - hj) + (gi - gj) * (gi - gj);
    }
  }
  return mask;
}

FunctionalMap solve_least_squares_fmap(const Eigen::MatrixXd& a1, const Eigen::MatrixXd& a2,
                                       const Eigen::Ref<const Eigen::VectorXd>& lambda1,
                                       const Eigen::Ref<const Eigen::VectorXd>& lambda2,
                                       double reg_weight) {
  const int k1 = static_cast<int>(a1.rows());
  const int k2 = static_cast<int>(a2.rows());
  const int p = static_cast<int>(a1.cols());
  if (a2.cols() != p) throw DimensionMismatch("coefficient matrices disagree on column count");
  if (lambda1.size() < k1 || lambda2.size() < k2)
    throw DimensionMismatch("eigenvalue lists shorter than the coefficient matrices");
  if (reg_weight < 0.0) throw ConfigError("regularization weight must be nonnegative");

  Eigen::MatrixXd gram = a1 * a1.transpose();  // k1 x k1, shared across rows
  const double ridge = p < k1 ? 1e-9 * gram.trace() / k1 : 0.0;
  gram.diagonal().array() += ridge;
  const Eigen::MatrixXd rhs = a1 * a2.transpose();  // k1 x k2
  const Eigen::MatrixXd mask =
      resolvent_mask_squared(lambda1.head(k1), lambda2.head(k2));

  FunctionalMap fmap;
  fmap.c.resize(k2, k1);
  Eigen::MatrixXd system(k1, k1);
  for (int i = 0; i < k2; ++i) {
    system = gram;
    if (reg_weight > 0.0)
      system.diagonal() += reg_weight * mask.row(i).transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> spectrum(system);
    if (spectrum.info() != Eigen::Success)
      throw SingularSystem("row system " + std::to_string(i) + " failed to factor");
    const double largest = spectrum.eigenvalues().maxCoeff();
    const double smallest = spectrum.eigenvalues().minCoeff();
    if (!(largest > 0.0))
      throw SingularSystem("row system " + std::to_string(i) + " is identically zero");
    if (reg_weight == 0.0 && !(smallest > largest * 1e-12))
      throw SingularSystem("row system " + std::to_string(i) +
                           " is singular and no regularization was requested");
    fmap.c.row(i) =
        (spectrum.eigenvectors() *
         (spectrum.eigenvalues().cwiseMax(largest * 1e-300).cwiseInverse().asDiagonal() *
          (spectrum.eigenvectors().transpose() * rhs.col(i))))
            .transpose();
  }
  return fmap;
}

FunctionalMap principal_submatrix(const FunctionalMap& fmap, int k2, int k1) {
  if (k2 < 1 || k2 > fmap.k2() || k1 < 1 || k1 > fmap.k1())
    throw DimensionMismatch("principal submatrix larger than the map");
  FunctionalMap out;
  out.c = fmap.c.topLeftCorner(k2, k1);
  out.source_basis = fmap.source_basis;
  out.target_basis = fmap.target_basis;
  return out;
}

}  // namespace specmap
