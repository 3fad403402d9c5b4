#include "specmap/mesh.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <queue>
#include <vector>

namespace specmap {

void validate_mesh(const TriangleMesh& mesh) {
  const int n = mesh.n();
  if (n == 0 || mesh.face_count() == 0) throw EmptyMesh("mesh has no vertices or no faces");
  if (!mesh.vertices.allFinite()) throw ParseError("non-finite vertex coordinates");
  for (int f = 0; f < mesh.face_count(); ++f) {
    const int a = mesh.faces(f, 0), b = mesh.faces(f, 1), c = mesh.faces(f, 2);
    if (a < 0 || a >= n || b < 0 || b >= n || c < 0 || c >= n)
      throw ParseError("face " + std::to_string(f) + " has an out-of-range vertex index");
    if (a == b || b == c || a == c)
      throw ParseError("face " + std::to_string(f) + " repeats a vertex");
  }
}

TriangleMesh make_icosphere(int frequency) {
  if (frequency < 1) throw ConfigError("icosphere frequency must be >= 1");
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  // Icosahedron vertices and faces (outward orientation).
  const double base[12][3] = {{-1, phi, 0}, {1, phi, 0},  {-1, -phi, 0}, {1, -phi, 0},
                              {0, -1, phi}, {0, 1, phi},  {0, -1, -phi}, {0, 1, -phi},
                              {phi, 0, -1}, {phi, 0, 1},  {-phi, 0, -1}, {-phi, 0, 1}};
  const int base_faces[20][3] = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                                 {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                                 {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                                 {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};

  const int f = frequency;
  const int n_vertices = 10 * f * f + 2;
  TriangleMesh mesh;
  mesh.vertices.resize(n_vertices, 3);
  mesh.faces.resize(20 * f * f, 3);

  // Corner points first, then f-1 points per undirected edge, then interior
  // grid points per face; shared points are assigned exactly once so the
  // subdivision is watertight by construction.
  for (int v = 0; v < 12; ++v) {
    Eigen::Vector3d p(base[v][0], base[v][1], base[v][2]);
    mesh.vertices.row(v) = p.normalized();
  }

  std::map<std::pair<int, int>, int> edge_start;  // id of first interior point of edge
  int next_vertex = 12;
  auto edge_points = [&](int a, int b) {
    const bool flip = a > b;
    const auto key = std::make_pair(std::min(a, b), std::max(a, b));
    auto it = edge_start.find(key);
    if (it == edge_start.end()) {
      it = edge_start.emplace(key, next_vertex).first;
      Eigen::Vector3d pa = mesh.vertices.row(key.first);
      Eigen::Vector3d pb = mesh.vertices.row(key.second);
      for (int s = 1; s < f; ++s) {
        const double t = static_cast<double>(s) / f;
        mesh.vertices.row(next_vertex++) = ((1.0 - t) * pa + t * pb).normalized();
      }
    }
    std::vector<int> ids(static_cast<size_t>(f) - 1);
    for (int s = 1; s < f; ++s) {
      const int offset = flip ? (f - 1 - s) : (s - 1);
      ids[static_cast<size_t>(s) - 1] = it->second + offset;
    }
    return ids;
  };

  int next_face = 0;
  for (const auto& bf : base_faces) {
    const int a = bf[0], b = bf[1], c = bf[2];
    const auto ab = edge_points(a, b);
    const auto ac = edge_points(a, c);
    const auto bc = edge_points(b, c);

    // grid(i, j): barycentric lattice point with i steps toward b and j
    // toward c, i + j <= f.
    std::vector<std::vector<int>> grid(static_cast<size_t>(f) + 1);
    Eigen::Vector3d pa = mesh.vertices.row(a);
    Eigen::Vector3d pb = mesh.vertices.row(b);
    Eigen::Vector3d pc = mesh.vertices.row(c);
    for (int i = 0; i <= f; ++i) {
      grid[i].resize(static_cast<size_t>(f - i) + 1, -1);
      for (int j = 0; j <= f - i; ++j) {
        const int k = f - i - j;
        int id;
        if (i == 0 && j == 0) id = a;
        else if (i == f) id = b;
        else if (j == f) id = c;
        else if (j == 0) id = ab[static_cast<size_t>(i) - 1];
        else if (i == 0) id = ac[static_cast<size_t>(j) - 1];
        else if (k == 0) id = bc[static_cast<size_t>(j) - 1];
        else {
          id = next_vertex++;
          Eigen::Vector3d p = (k * pa + i * pb + j * pc) / static_cast<double>(f);
          mesh.vertices.row(id) = p.normalized();
        }
        grid[i][j] = id;
      }
    }

    for (int i = 0; i < f; ++i) {
      for (int j = 0; j < f - i; ++j) {
        mesh.faces.row(next_face++) << grid[i][j], grid[i + 1][j], grid[i][j + 1];
        if (j < f - i - 1)
          mesh.faces.row(next_face++) << grid[i + 1][j], grid[i + 1][j + 1], grid[i][j + 1];
      }
    }
  }

  validate_mesh(mesh);
  return mesh;
}

int icosphere_frequency_for(int target_vertices) {
  int f = 1;
  while (10 * f * f + 2 < target_vertices) ++f;
  return f;
}

AreaVector vertex_areas(const TriangleMesh& mesh) {
  AreaVector areas;
  areas.lumped = Eigen::VectorXd::Zero(mesh.n());
  for (int f = 0; f < mesh.face_count(); ++f) {
    const Eigen::Vector3d p0 = mesh.vertices.row(mesh.faces(f, 0));
    const Eigen::Vector3d p1 = mesh.vertices.row(mesh.faces(f, 1));
    const Eigen::Vector3d p2 = mesh.vertices.row(mesh.faces(f, 2));
    const double area = 0.5 * (p1 - p0).cross(p2 - p0).norm();
    const double share = area / 3.0;
    for (int k = 0; k < 3; ++k) areas.lumped[mesh.faces(f, k)] += share;
  }
  areas.total = areas.lumped.sum();
  if (!(areas.total > 0.0)) throw DegenerateGeometry("mesh has zero total area");
  return areas;
}

SparseOperator cotangent_laplacian(const TriangleMesh& mesh) {
  constexpr double kCotClamp = 1e4;
  const int n = mesh.n();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<size_t>(mesh.face_count()) * 12);

  for (int f = 0; f < mesh.face_count(); ++f) {
    const int i0 = mesh.faces(f, 0), i1 = mesh.faces(f, 1), i2 = mesh.faces(f, 2);
    const Eigen::Vector3d p0 = mesh.vertices.row(i0);
    const Eigen::Vector3d p1 = mesh.vertices.row(i1);
    const Eigen::Vector3d p2 = mesh.vertices.row(i2);
    const double double_area = (p1 - p0).cross(p2 - p0).norm();
    if (!(double_area > 0.0))
      throw DegenerateGeometry("face " + std::to_string(f) + " has zero area");

    // cot of the angle at each corner = dot of adjacent edges / (2 * area);
    // the corner's cotangent weights the opposite edge.
    const int idx[3] = {i0, i1, i2};
    const Eigen::Vector3d p[3] = {p0, p1, p2};
    for (int corner = 0; corner < 3; ++corner) {
      const int j = idx[(corner + 1) % 3];
      const int k = idx[(corner + 2) % 3];
      const Eigen::Vector3d e1 = p[(corner + 1) % 3] - p[corner];
      const Eigen::Vector3d e2 = p[(corner + 2) % 3] - p[corner];
      double cot = e1.dot(e2) / double_area;
      cot = std::clamp(cot, -kCotClamp, kCotClamp);
      const double w = 0.5 * cot;  // contribution to edge (j, k)
      triplets.emplace_back(j, k, -w);
      triplets.emplace_back(k, j, -w);
      triplets.emplace_back(j, j, w);
      triplets.emplace_back(k, k, w);
    }
  }

  SparseOperator laplacian(n, n);
  laplacian.setFromTriplets(triplets.begin(), triplets.end());
  laplacian.makeCompressed();
  return laplacian;
}

GeodesicField geodesic_distances(const TriangleMesh& mesh, int source) {
  const int n = mesh.n();
  if (source < 0 || source >= n) throw DimensionMismatch("geodesic source out of range");

  // Edge adjacency in CSR form, built from the three edges of every face.
  std::vector<int> degree(n, 0);
  auto count_edge = [&](int a, int b) {
    ++degree[a];
    ++degree[b];
  };
  for (int f = 0; f < mesh.face_count(); ++f) {
    count_edge(mesh.faces(f, 0), mesh.faces(f, 1));
    count_edge(mesh.faces(f, 1), mesh.faces(f, 2));
    count_edge(mesh.faces(f, 2), mesh.faces(f, 0));
  }
  std::vector<int> offset(static_cast<size_t>(n) + 1, 0);
  for (int v = 0; v < n; ++v) offset[static_cast<size_t>(v) + 1] = offset[v] + degree[v];
  std::vector<int> neighbor(offset[n]);
  std::vector<double> length(offset[n]);
  std::vector<int> cursor(offset.begin(), offset.end() - 1);
  auto add_edge = [&](int a, int b) {
    const double len = (mesh.vertices.row(a) - mesh.vertices.row(b)).norm();
    neighbor[cursor[a]] = b;
    length[cursor[a]++] = len;
    neighbor[cursor[b]] = a;
    length[cursor[b]++] = len;
  };
  for (int f = 0; f < mesh.face_count(); ++f) {
    add_edge(mesh.faces(f, 0), mesh.faces(f, 1));
    add_edge(mesh.faces(f, 1), mesh.faces(f, 2));
    add_edge(mesh.faces(f, 2), mesh.faces(f, 0));
  }

  GeodesicField field;
  field.distance = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
  field.distance[source] = 0.0;

  using Entry = std::pair<double, int>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> queue;
  queue.emplace(0.0, source);
  while (!queue.empty()) {
    const auto [dist, v] = queue.top();
    queue.pop();
    if (dist > field.distance[v]) continue;
    for (int e = offset[v]; e < offset[static_cast<size_t>(v) + 1]; ++e) {
      const int u = neighbor[e];
      const double candidate = dist + length[e];
      if (candidate < field.distance[u]) {
        field.distance[u] = candidate;
        queue.emplace(candidate, u);
      }
    }
  }

  field.complete = field.distance.allFinite();
  return field;
}

}  // namespace specmap
