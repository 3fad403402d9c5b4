#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <memory>
#include <string>

#include "specmap/mesh.hpp"

namespace specmap {

// K Laplace-Beltrami eigenpairs of the pencil L phi = lambda A phi with
// area-weighted orthonormal columns. Truncation shares the backing storage,
// so passing around small views of a large precomputed basis is free.
class EigenBasis {
 public:
  EigenBasis() = default;
  EigenBasis(Eigen::MatrixXd phi, Eigen::VectorXd lambda, Eigen::VectorXd areas,
             double total_area);

  int n() const { return store_ ? static_cast<int>(store_->phi.rows()) : 0; }
  int size() const { return k_; }       // active basis size
  int full_size() const { return store_ ? static_cast<int>(store_->lambda.size()) : 0; }
  std::uint64_t id() const { return store_ ? store_->id : 0; }  // shared across truncations

  Eigen::Ref<const Eigen::MatrixXd> phi() const { return store_->phi.leftCols(k_); }
  Eigen::Ref<const Eigen::VectorXd> lambda() const { return store_->lambda.head(k_); }
  const Eigen::VectorXd& areas() const { return store_->areas; }
  double total_area() const { return store_->total_area; }

  // First k columns as a view over the same storage.
  EigenBasis truncated(int k) const;

  // Spectral coefficients phi' * diag(areas) * funcs; k x d.
  Eigen::MatrixXd project(const Eigen::Ref<const Eigen::MatrixXd>& funcs) const;

 private:
  struct Store {
    Eigen::MatrixXd phi;
    Eigen::VectorXd lambda;
    Eigen::VectorXd areas;
    double total_area = 0.0;
    std::uint64_t id = 0;
  };
  std::shared_ptr<const Store> store_;
  int k_ = 0;
};

struct EigenSolveOptions {
  double tolerance = 1e-9;      // relative Ritz residual on the inverted operator
  int max_subspace = 0;         // 0 = automatic (roughly 2K + 80)
  int dense_cutoff = 1024;      // below this n, solve the pencil densely
};

// K smallest eigenpairs of L phi = lambda A phi. Small problems go through a
// dense generalized solve; larger ones use shift-invert Lanczos with full
// reorthogonalization on top of a sparse LDL^T factorization of L - shift*A
// (shift = -1e-8 * mean(diag L), so the factored matrix stays positive
// definite). Column signs are fixed by making the entry of largest magnitude
// positive. Throws KTooLarge / ConvergenceFailure / DegenerateGeometry.
EigenBasis compute_eigenbasis(const SparseOperator& L, const AreaVector& A, int K,
                              const EigenSolveOptions& options = {});

// Binary sidecar cache. Layout: magic "SPECB01", u64 n, u64 K,
// f64 total_area, f64 lambda[K], f64 phi[n*K] column-major, f64 areas[n],
// little-endian throughout.
void save_eigenbasis(const std::string& path, const EigenBasis& basis);
EigenBasis load_eigenbasis(const std::string& path);

// FNV-1a over the raw vertex and face bytes; used to key cache file names.
std::uint64_t mesh_content_hash(const TriangleMesh& mesh);

}  // namespace specmap
