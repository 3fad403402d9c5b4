#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <string>

#include "specmap/errors.hpp"

namespace specmap {

struct TriangleMesh {
  Eigen::Matrix<double, Eigen::Dynamic, 3> vertices;
  Eigen::Matrix<int, Eigen::Dynamic, 3> faces;

  int n() const { return static_cast<int>(vertices.rows()); }
  int face_count() const { return static_cast<int>(faces.rows()); }
};

// Structural checks shared by the loaders and the synthetic generators:
// at least one vertex and face, indices in range, no repeated vertex
// within a face, finite coordinates. Throws ParseError / EmptyMesh.
void validate_mesh(const TriangleMesh& mesh);

// Reads OFF (ascii), OBJ (v/f lines) or PLY (ascii or binary little-endian),
// dispatching on content. Polygonal faces are fan-triangulated; attributes
// other than positions and face indices are ignored. OBJ indices are
// converted to 0-based.
TriangleMesh load_mesh(const std::string& path);

// Geodesic icosahedral sphere: each of the 20 base faces is split into
// frequency^2 triangles and the grid is projected onto the unit sphere.
// Vertex count is 10*frequency^2 + 2. frequency=8 matches a 3x recursively
// subdivided icosahedron (642 vertices, 1280 faces).
TriangleMesh make_icosphere(int frequency);
// Smallest frequency whose icosphere has at least target_vertices vertices.
int icosphere_frequency_for(int target_vertices);

struct AreaVector {
  Eigen::VectorXd lumped;  // per-vertex one-third of incident triangle area
  double total = 0.0;
};

// Lumped (diagonal) mass: each vertex takes one third of the area of its
// incident triangles. Throws DegenerateGeometry when the total area is zero.
AreaVector vertex_areas(const TriangleMesh& mesh);

using SparseOperator = Eigen::SparseMatrix<double>;

// Cotangent stiffness matrix, positive semi-definite convention: L*1 = 0,
// x'Lx >= 0. Off-diagonals are -(cot a + cot b)/2 over the angles opposite
// a shared edge; boundary edges get a single term. Individual cotangents
// are clamped to [-1e4, 1e4] so near-degenerate triangles stay finite;
// exactly zero-area triangles throw DegenerateGeometry.
SparseOperator cotangent_laplacian(const TriangleMesh& mesh);

struct GeodesicField {
  Eigen::VectorXd distance;  // +inf where unreachable
  bool complete = true;      // false if some vertex is unreachable
};

// Dijkstra over the edge graph with Euclidean edge lengths. This is the
// graph approximation of geodesic distance, not an exact polyhedral
// geodesic.
GeodesicField geodesic_distances(const TriangleMesh& mesh, int source);

}  // namespace specmap
