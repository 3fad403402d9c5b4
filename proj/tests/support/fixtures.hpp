#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "specmap/mesh.hpp"
#include "specmap/softmap.hpp"
#include "specmap/spectral.hpp"

namespace specmap::testing {

inline TriangleMesh single_triangle() {
  TriangleMesh mesh;
  mesh.vertices.resize(3, 3);
  mesh.vertices << 0, 0, 0, 1, 0, 0, 0, 1, 0;
  mesh.faces.resize(1, 3);
  mesh.faces << 0, 1, 2;
  return mesh;
}

// Two equilateral triangles sharing an edge, lying flat in the plane.
inline TriangleMesh rhombus() {
  const double h = std::sqrt(3.0) / 2.0;
  TriangleMesh mesh;
  mesh.vertices.resize(4, 3);
  mesh.vertices << 0, 0, 0,
      1, 0, 0,
      0.5, h, 0,
      0.5, -h, 0;
  mesh.faces.resize(2, 3);
  mesh.faces << 0, 1, 2, 1, 0, 3;
  return mesh;
}

// Regular grid over the unit square, nx * ny vertices.
inline TriangleMesh grid_mesh(int nx, int ny, double jitter_z = 0.0, unsigned seed = 0) {
  TriangleMesh mesh;
  mesh.vertices.resize(nx * ny, 3);
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int y = 0; y < ny; ++y)
    for (int x = 0; x < nx; ++x) {
      const int v = y * nx + x;
      mesh.vertices.row(v) << static_cast<double>(x) / (nx - 1),
          static_cast<double>(y) / (ny - 1), jitter_z == 0.0 ? 0.0 : jitter_z * dist(rng);
    }
  mesh.faces.resize(2 * (nx - 1) * (ny - 1), 3);
  int f = 0;
  for (int y = 0; y + 1 < ny; ++y)
    for (int x = 0; x + 1 < nx; ++x) {
      const int v00 = y * nx + x, v10 = v00 + 1, v01 = v00 + nx, v11 = v01 + 1;
      mesh.faces.row(f++) << v00, v10, v11;
      mesh.faces.row(f++) << v00, v11, v01;
    }
  validate_mesh(mesh);
  return mesh;
}

// Vertex relabeling pi: new index pi[v] holds old vertex v.
inline std::vector<int> random_permutation(int n, unsigned seed) {
  std::vector<int> pi(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) pi[static_cast<size_t>(i)] = i;
  std::mt19937 rng(seed);
  std::shuffle(pi.begin(), pi.end(), rng);
  return pi;
}

inline TriangleMesh permute_mesh(const TriangleMesh& mesh, const std::vector<int>& pi) {
  TriangleMesh out;
  out.vertices.resize(mesh.n(), 3);
  for (int v = 0; v < mesh.n(); ++v)
    out.vertices.row(pi[static_cast<size_t>(v)]) = mesh.vertices.row(v);
  out.faces.resize(mesh.face_count(), 3);
  for (int f = 0; f < mesh.face_count(); ++f)
    for (int c = 0; c < 3; ++c) out.faces(f, c) = pi[static_cast<size_t>(mesh.faces(f, c))];
  return out;
}

// Eigenbasis of the relabeled mesh, built by permuting the rows of an
// existing basis. This is an exact basis of the permuted operator, which a
// fresh eigensolve could only match up to rotations inside repeated
// eigenvalue groups.
inline EigenBasis permute_basis(const EigenBasis& basis, const std::vector<int>& pi) {
  Eigen::MatrixXd phi(basis.n(), basis.size());
  Eigen::VectorXd areas(basis.n());
  for (int v = 0; v < basis.n(); ++v) {
    phi.row(pi[static_cast<size_t>(v)]) = basis.phi().row(v);
    areas[pi[static_cast<size_t>(v)]] = basis.areas()[v];
  }
  return EigenBasis(std::move(phi), basis.lambda(), std::move(areas), basis.total_area());
}

// Ground-truth vertex map of the relabeling: target vertex pi[v] (on the
// permuted shape) corresponds to source vertex v.
inline VertexMap permutation_ground_truth(const std::vector<int>& pi) {
  VertexMap map;
  map.source_count = static_cast<int>(pi.size());
  map.indices.resize(pi.size());
  for (int v = 0; v < map.source_count; ++v)
    map.indices[static_cast<size_t>(pi[static_cast<size_t>(v)])] = v;
  return map;
}

// Reassigns a fraction of entries to random source vertices.
inline VertexMap corrupt_map(const VertexMap& map, double fraction, unsigned seed) {
  VertexMap out = map;
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<int> pick(0, map.source_count - 1);
  for (auto& index : out.indices)
    if (coin(rng) < fraction) index = pick(rng);
  return out;
}

inline int exact_matches(const VertexMap& a, const VertexMap& b) {
  int hits = 0;
  for (int i = 0; i < a.n2(); ++i)
    if (a.indices[static_cast<size_t>(i)] == b.indices[static_cast<size_t>(i)]) ++hits;
  return hits;
}

inline EigenBasis basis_of(const TriangleMesh& mesh, int k) {
  return compute_eigenbasis(cotangent_laplacian(mesh), vertex_areas(mesh), k);
}

// Scratch directory for file-format tests.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("specmap-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << contents;
}

}  // namespace specmap::testing
