#include "specmap/spectral.hpp"

#include "specmap/parallel.hpp"
#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <atomic>
#include <cstring>
#include <fstream>
#include <optional>
#include <random>
#include <vector>

namespace specmap {

namespace {
std::atomic<std::uint64_t> g_next_basis_id{1};
}

EigenBasis::EigenBasis(Eigen::MatrixXd phi, Eigen::VectorXd lambda, Eigen::VectorXd areas,
                       double total_area) {
  if (phi.cols() != lambda.size() || phi.rows() != areas.size())
    throw DimensionMismatch("eigenbasis fields disagree on sizes");
  auto store = std::make_shared<Store>();
  store->phi = std::move(phi);
  store->lambda = std::move(lambda);
  store->areas = std::move(areas);
  store->total_area = total_area;
  store->id = g_next_basis_id.fetch_add(1);
  k_ = static_cast<int>(store->lambda.size());
  store_ = std::move(store);
}

EigenBasis EigenBasis::truncated(int k) const {
  if (!store_) throw DimensionMismatch("empty eigenbasis");
  if (k < 2 || k > k_) throw KTooLarge("truncation size " + std::to_string(k) +
                                       " outside [2, " + std::to_string(k_) + "]");
  EigenBasis view = *this;
  view.k_ = k;
  return view;
}

Eigen::MatrixXd EigenBasis::project(const Eigen::Ref<const Eigen::MatrixXd>& funcs) const {
  if (!store_) throw DimensionMismatch("empty eigenbasis");
  if (funcs.rows() != store_->phi.rows())
    throw DimensionMismatch("project: expected " + std::to_string(store_->phi.rows()) +
                            " rows, got " + std::to_string(funcs.rows()));
  if (!funcs.allFinite()) throw NonFiniteInput("project: non-finite function values");
  return phi().transpose() * (store_->areas.asDiagonal() * funcs);
}

namespace {

void fix_column_signs(Eigen::MatrixXd& phi) {
  for (Eigen::Index c = 0; c < phi.cols(); ++c) {
    Eigen::Index argmax = 0;
    double best = 0.0;
    for (Eigen::Index r = 0; r < phi.rows(); ++r) {
      const double mag = std::abs(phi(r, c));
      if (mag > best) {
        best = mag;
        argmax = r;
      }
    }
    if (phi(argmax, c) < 0.0) phi.col(c) = -phi.col(c);
  }
}

EigenBasis finish_basis(Eigen::MatrixXd phi, Eigen::VectorXd lambda, const AreaVector& areas) {
  for (Eigen::Index i = 0; i < lambda.size(); ++i) lambda[i] = std::max(lambda[i], 0.0);
  fix_column_signs(phi);
  return EigenBasis(std::move(phi), std::move(lambda), areas.lumped, areas.total);
}

EigenBasis dense_eigenbasis(const SparseOperator& laplacian, const AreaVector& areas, int K) {
  Eigen::MatrixXd dense_l = Eigen::MatrixXd(laplacian);
  Eigen::MatrixXd dense_a = areas.lumped.asDiagonal();
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(dense_l, dense_a);
  if (solver.info() != Eigen::Success)
    throw ConvergenceFailure("dense generalized eigensolver failed");
  return finish_basis(solver.eigenvectors().leftCols(K), solver.eigenvalues().head(K), areas);
}

struct LanczosResult {
  Eigen::MatrixXd phi;
  Eigen::VectorXd lambda;
};

// One shift-invert Lanczos sweep with full reorthogonalization in the
// area-weighted inner product. Returns nothing if fewer than K Ritz pairs
// converged within max_subspace steps.
std::optional<LanczosResult> lanczos_sweep(
    const Eigen::SimplicialLDLT<SparseOperator>& inverse, const Eigen::VectorXd& area,
    double shift, int K, int max_subspace, double tolerance, std::mt19937_64& rng) {
  const Eigen::Index n = area.size();
  const int m_cap = static_cast<int>(std::min<Eigen::Index>(max_subspace, n));

  Eigen::MatrixXd basis(n, m_cap);          // A-orthonormal Lanczos vectors
  Eigen::MatrixXd projected =               // H = V' A Op V, column by column
      Eigen::MatrixXd::Zero(m_cap + 1, m_cap);

  std::normal_distribution<double> gauss;
  auto random_vector = [&]() {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = gauss(rng);
    return v;
  };
  auto a_norm = [&](const Eigen::VectorXd& v) { return std::sqrt(v.dot(area.cwiseProduct(v))); };

  // Orthonormalize v against the first j basis vectors (two passes) and
  // append it; returns false when v is numerically in their span.
  auto append_orthonormalized = [&](Eigen::VectorXd v, int j) {
    for (int pass = 0; pass < 2; ++pass) {
      if (j > 0) {
        Eigen::VectorXd coef = basis.leftCols(j).transpose() * area.cwiseProduct(v);
        v.noalias() -= basis.leftCols(j) * coef;
      }
    }
    const double norm = a_norm(v);
    if (!(norm > 1e-10)) return false;
    basis.col(j) = v / norm;
    return true;
  };

  if (!append_orthonormalized(random_vector(), 0)) return std::nullopt;

  int j = 0;
  while (true) {
    // w = Op v_j with Op = (L - shift A)^{-1} A
    Eigen::VectorXd w = inverse.solve(area.cwiseProduct(basis.col(j)));
    Eigen::VectorXd coefficients = Eigen::VectorXd::Zero(j + 1);
    for (int pass = 0; pass < 2; ++pass) {
      Eigen::VectorXd c = basis.leftCols(j + 1).transpose() * area.cwiseProduct(w);
      w.noalias() -= basis.leftCols(j + 1) * c;
      coefficients += c;
    }
    projected.col(j).head(j + 1) = coefficients;
    const double beta = a_norm(w);
    projected(j + 1, j) = beta;

    const bool at_cap = j + 1 >= m_cap;
    bool grew = false;
    if (!at_cap) {
      if (beta > 1e-10) {
        basis.col(j + 1) = w / beta;
        grew = true;
      } else {
        // Invariant subspace hit; continue in a fresh random direction so
        // remaining eigenvector copies can still be found.
        projected(j + 1, j) = 0.0;
        grew = append_orthonormalized(random_vector(), j + 1);
      }
    }

    const int m = j + 1;
    const bool must_check = at_cap || !grew;
    if (m >= K + 2 && (must_check || m % 8 == 0)) {
      Eigen::MatrixXd h = projected.topLeftCorner(m, m);
      Eigen::MatrixXd h_sym = 0.5 * (h + h.transpose());
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ritz(h_sym);
      if (ritz.info() == Eigen::Success) {
        // Largest Ritz values of the inverted operator = smallest pencil
        // eigenvalues. Residual estimate per pair: |beta * last component|.
        const auto& theta = ritz.eigenvalues();  // ascending
        bool converged = m >= static_cast<int>(n);
        if (!converged) {
          converged = true;
          for (int i = 0; i < K; ++i) {
            const int idx = m - 1 - i;
            const double resid = std::abs(projected(m, m - 1) * ritz.eigenvectors()(m - 1, idx));
            if (!(theta[idx] > 0.0) || resid > tolerance * std::abs(theta[idx])) {
              converged = false;
              break;
            }
          }
        }
        if (converged) {
          LanczosResult result;
          result.lambda.resize(K);
          Eigen::MatrixXd selected(m, K);
          for (int i = 0; i < K; ++i) {
            const int idx = m - 1 - i;
            result.lambda[i] = shift + 1.0 / theta[idx];
            selected.col(i) = ritz.eigenvectors().col(idx);
          }
          result.phi.noalias() = basis.leftCols(m) * selected;
          return result;
        }
      }
    }

    if (at_cap || !grew) return std::nullopt;
    ++j;
  }
}

}  // namespace

EigenBasis compute_eigenbasis(const SparseOperator& laplacian, const AreaVector& areas, int K,
                              const EigenSolveOptions& options) {
  const Eigen::Index n = laplacian.rows();
  if (laplacian.cols() != n || areas.lumped.size() != n)
    throw DimensionMismatch("operator and area vector sizes disagree");
  if (K < 2 || K > n - 1)
    throw KTooLarge("basis size " + std::to_string(K) + " outside [2, n-1]");
  if ((areas.lumped.array() <= 0.0).any())
    throw DegenerateGeometry("non-positive vertex area; cannot form the mass inner product");

  if (n <= options.dense_cutoff || (n <= 4000 && 3 * K > n)) return dense_eigenbasis(laplacian, areas, K);

  const double shift = -1e-8 * laplacian.diagonal().mean();
  SparseOperator shifted = laplacian;
  // L - shift*A with shift < 0 keeps the factorization positive definite.
  for (Eigen::Index i = 0; i < n; ++i) shifted.coeffRef(i, i) -= shift * areas.lumped[i];
  Eigen::SimplicialLDLT<SparseOperator> inverse(shifted);
  if (inverse.info() != Eigen::Success)
    throw ConvergenceFailure("factorization of the shifted operator failed");

  std::mt19937_64 rng(random_seed() * 0x9e3779b97f4a7c15ull + 1);
  int subspace = options.max_subspace > 0 ? options.max_subspace : 2 * K + 80;
  for (int attempt = 0; attempt < 3; ++attempt) {
    auto result = lanczos_sweep(inverse, areas.lumped, shift, K, subspace, options.tolerance, rng);
    if (result) return finish_basis(std::move(result->phi), std::move(result->lambda), areas);
    if (subspace >= n) break;
    subspace = subspace + subspace / 2;
  }
  throw ConvergenceFailure("eigensolver did not converge for K=" + std::to_string(K));
}

namespace {

constexpr char kCacheMagic[7] = {'S', 'P', 'E', 'C', 'B', '0', '1'};

template <typename T>
void write_raw(std::ofstream& out, const T* data, size_t count) {
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(sizeof(T) * count));
}

template <typename T>
void read_raw(std::ifstream& in, T* data, size_t count, const std::string& path) {
  in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(sizeof(T) * count));
  if (!in) throw ParseError("truncated eigenbasis cache '" + path + "'");
}

}  // namespace

void save_eigenbasis(const std::string& path, const EigenBasis& basis) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  out.write(kCacheMagic, sizeof(kCacheMagic));
  const std::uint64_t n = static_cast<std::uint64_t>(basis.n());
  const std::uint64_t k = static_cast<std::uint64_t>(basis.size());
  const double total = basis.total_area();
  write_raw(out, &n, 1);
  write_raw(out, &k, 1);
  write_raw(out, &total, 1);
  Eigen::VectorXd lambda = basis.lambda();
  write_raw(out, lambda.data(), static_cast<size_t>(lambda.size()));
  Eigen::MatrixXd phi = basis.phi();  // column-major on disk
  write_raw(out, phi.data(), static_cast<size_t>(phi.size()));
  write_raw(out, basis.areas().data(), static_cast<size_t>(basis.areas().size()));
  if (!out) throw IoError("failed writing '" + path + "'");
}

EigenBasis load_eigenbasis(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  char magic[sizeof(kCacheMagic)];
  read_raw(in, magic, sizeof(kCacheMagic), path);
  if (std::memcmp(magic, kCacheMagic, sizeof(kCacheMagic)) != 0)
    throw ParseError("'" + path + "' is not an eigenbasis cache");
  std::uint64_t n = 0, k = 0;
  double total = 0.0;
  read_raw(in, &n, 1, path);
  read_raw(in, &k, 1, path);
  read_raw(in, &total, 1, path);
  if (n == 0 || k < 2 || k > n)
    throw ParseError("'" + path + "' has inconsistent dimensions");
  Eigen::VectorXd lambda(static_cast<Eigen::Index>(k));
  read_raw(in, lambda.data(), k, path);
  Eigen::MatrixXd phi(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
  read_raw(in, phi.data(), n * k, path);
  Eigen::VectorXd areas(static_cast<Eigen::Index>(n));
  read_raw(in, areas.data(), n, path);
  return EigenBasis(std::move(phi), std::move(lambda), std::move(areas), total);
}

std::uint64_t mesh_content_hash(const TriangleMesh& mesh) {
  std::uint64_t hash = 0xcbf29ce484222325ull;
  auto fold = [&hash](const char* data, size_t bytes) {
    for (size_t i = 0; i < bytes; ++i) {
      hash ^= static_cast<unsigned char>(data[i]);
      hash *= 0x100000001b3ull;
    }
  };
  fold(reinterpret_cast<const char*>(mesh.vertices.data()),
       sizeof(double) * static_cast<size_t>(mesh.vertices.size()));
  fold(reinterpret_cast<const char*>(mesh.faces.data()),
       sizeof(int) * static_cast<size_t>(mesh.faces.size()));
  return hash;
}

}  // namespace specmap
