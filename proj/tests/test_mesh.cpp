#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "specmap/mesh.hpp"
#include "support/fixtures.hpp"

using namespace specmap;
namespace fx = specmap::testing;

namespace {

std::string to_obj(const TriangleMesh& mesh) {
  std::ostringstream out;
  out.precision(17);
  for (int v = 0; v < mesh.n(); ++v)
    out << "v " << mesh.vertices(v, 0) << ' ' << mesh.vertices(v, 1) << ' '
        << mesh.vertices(v, 2) << '\n';
  for (int f = 0; f < mesh.face_count(); ++f)
    out << "f " << mesh.faces(f, 0) + 1 << ' ' << mesh.faces(f, 1) + 1 << ' '
        << mesh.faces(f, 2) + 1 << '\n';
  return out.str();
}

}  // namespace

TEST_SUITE_BEGIN("mesh");

TEST_CASE("off loader reads a single triangle") {
  fx::TempDir dir;
  fx::write_file(dir.file("tri.off"),
                 "OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n");
  TriangleMesh mesh = load_mesh(dir.file("tri.off"));
  CHECK(mesh.n() == 3);
  CHECK(mesh.face_count() == 1);
  CHECK(mesh.vertices(1, 0) == 1.0);
}

TEST_CASE("off loader rejects out-of-range face indices") {
  fx::TempDir dir;
  fx::write_file(dir.file("bad.off"),
                 "OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 5\n");
  CHECK_THROWS_AS(load_mesh(dir.file("bad.off")), ParseError);
}

TEST_CASE("off loader rejects empty meshes") {
  fx::TempDir dir;
  fx::write_file(dir.file("empty.off"), "OFF\n0 0 0\n");
  CHECK_THROWS_AS(load_mesh(dir.file("empty.off")), EmptyMesh);
}

TEST_CASE("obj round trip of the icosphere fixture") {
  TriangleMesh sphere = make_icosphere(8);  // three recursive subdivisions
  CHECK(sphere.n() == 642);
  CHECK(sphere.face_count() == 1280);

  fx::TempDir dir;
  fx::write_file(dir.file("sphere.obj"), to_obj(sphere));
  TriangleMesh loaded = load_mesh(dir.file("sphere.obj"));
  CHECK(loaded.n() == 642);
  CHECK(loaded.face_count() == 1280);
  CHECK((loaded.vertices - sphere.vertices).cwiseAbs().maxCoeff() == 0.0);
  CHECK((loaded.faces - sphere.faces).cwiseAbs().maxCoeff() == 0);
}

TEST_CASE("obj loader handles slashes and negative indices") {
  fx::TempDir dir;
  fx::write_file(dir.file("slashes.obj"),
                 "v 0 0 0\nv 1 0 0\nv 0 1 0\nvn 0 0 1\nf 1/1/1 2//1 -1\n");
  TriangleMesh mesh = load_mesh(dir.file("slashes.obj"));
  CHECK(mesh.face_count() == 1);
  CHECK(mesh.faces(0, 2) == 2);
}

TEST_CASE("ply ascii loader") {
  fx::TempDir dir;
  fx::write_file(dir.file("tri.ply"),
                 "ply\nformat ascii 1.0\nelement vertex 3\n"
                 "property float x\nproperty float y\nproperty float z\n"
                 "element face 1\nproperty list uchar int vertex_indices\n"
                 "end_header\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n");
  TriangleMesh mesh = load_mesh(dir.file("tri.ply"));
  CHECK(mesh.n() == 3);
  CHECK(mesh.face_count() == 1);
}

TEST_CASE("ply binary little-endian loader with extra properties") {
  std::string header =
      "ply\nformat binary_little_endian 1.0\nelement vertex 3\n"
      "property float x\nproperty float y\nproperty float z\nproperty uchar red\n"
      "element face 1\nproperty list uchar int vertex_indices\nend_header\n";
  std::string payload;
  auto put_float = [&payload](float value) {
    char bytes[4];
    std::memcpy(bytes, &value, 4);
    payload.append(bytes, 4);
  };
  auto put_int = [&payload](std::int32_t value) {
    char bytes[4];
    std::memcpy(bytes, &value, 4);
    payload.append(bytes, 4);
  };
  const float coords[3][3] = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  for (const auto& row : coords) {
    for (float c : row) put_float(c);
    payload.push_back('\x7f');  // red
  }
  payload.push_back('\x03');
  put_int(0);
  put_int(1);
  put_int(2);

  fx::TempDir dir;
  fx::write_file(dir.file("tri-bin.ply"), header + payload);
  TriangleMesh mesh = load_mesh(dir.file("tri-bin.ply"));
  CHECK(mesh.n() == 3);
  CHECK(mesh.face_count() == 1);
  CHECK(mesh.vertices(2, 1) == 1.0);
}

TEST_CASE("vertex areas split each triangle by thirds") {
  TriangleMesh tri = fx::single_triangle();
  AreaVector areas = vertex_areas(tri);
  CHECK(areas.total == doctest::Approx(0.5).epsilon(1e-14));
  for (int v = 0; v < 3; ++v)
    CHECK(areas.lumped[v] == doctest::Approx(0.5 / 3.0).epsilon(1e-14));
}

TEST_CASE("icosphere area approaches the unit sphere") {
  AreaVector areas = vertex_areas(make_icosphere(8));
  CHECK(areas.total == doctest::Approx(4.0 * std::numbers::pi).epsilon(0.02));
}

TEST_CASE("zero-area sliver contributes nothing") {
  TriangleMesh mesh = fx::single_triangle();
  mesh.vertices.conservativeResize(4, 3);
  mesh.vertices.row(3) << 2, 0, 0;  // collinear with vertices 0 and 1
  mesh.faces.conservativeResize(2, 3);
  mesh.faces.row(1) << 0, 1, 3;
  AreaVector areas = vertex_areas(mesh);
  CHECK(areas.lumped.allFinite());
  CHECK(areas.total == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("cotangent weight of the rhombus interior edge") {
  SparseOperator laplacian = cotangent_laplacian(fx::rhombus());
  // Both opposite angles are 60 degrees: -(cot60 + cot60)/2 = -1/sqrt(3).
  CHECK(laplacian.coeff(0, 1) == doctest::Approx(-1.0 / std::sqrt(3.0)).epsilon(1e-12));
}

TEST_CASE("stiffness matrix annihilates constants and is PSD") {
  TriangleMesh sphere = make_icosphere(4);
  SparseOperator laplacian = cotangent_laplacian(sphere);

  double max_entry = 0.0;
  for (int k = 0; k < laplacian.outerSize(); ++k)
    for (SparseOperator::InnerIterator it(laplacian, k); it; ++it)
      max_entry = std::max(max_entry, std::abs(it.value()));
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(sphere.n());
  CHECK((laplacian * ones).cwiseAbs().maxCoeff() <= 1e-9 * max_entry);

  std::mt19937 rng(7);
  std::normal_distribution<double> gauss;
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::VectorXd x(sphere.n());
    for (int i = 0; i < sphere.n(); ++i) x[i] = gauss(rng);
    CHECK(x.dot(laplacian * x) >= -1e-9);
  }
}

TEST_CASE("stiffness matrix is exactly symmetric") {
  SparseOperator laplacian = cotangent_laplacian(fx::grid_mesh(9, 7, 0.05, 3));
  SparseOperator diff = SparseOperator(laplacian - SparseOperator(laplacian.transpose()));
  double asym = 0.0;
  for (int k = 0; k < diff.outerSize(); ++k)
    for (SparseOperator::InnerIterator it(diff, k); it; ++it)
      asym = std::max(asym, std::abs(it.value()));
  CHECK(asym <= 1e-12);
}

TEST_CASE("degenerate faces are rejected by the stiffness operator") {
  TriangleMesh mesh = fx::single_triangle();
  mesh.vertices.conservativeResize(4, 3);
  mesh.vertices.row(3) << 2, 0, 0;
  mesh.faces.conservativeResize(2, 3);
  mesh.faces.row(1) << 0, 1, 3;  // zero area
  CHECK_THROWS_AS(cotangent_laplacian(mesh), DegenerateGeometry);
}

TEST_CASE("geodesic distance basics") {
  TriangleMesh sphere = make_icosphere(8);
  GeodesicField field = geodesic_distances(sphere, 0);
  CHECK(field.complete);
  CHECK(field.distance[0] == 0.0);

  // Antipodal pair: vertex 0 of the icosahedron template has its negation in
  // the list as well; find it.
  int antipode = -1;
  for (int v = 0; v < sphere.n(); ++v)
    if ((sphere.vertices.row(v) + sphere.vertices.row(0)).norm() < 1e-9) antipode = v;
  REQUIRE(antipode >= 0);
  CHECK(field.distance[antipode] >= std::numbers::pi * 0.999);
  CHECK(field.distance[antipode] <= std::numbers::pi * 1.12);
}

TEST_CASE("geodesics on a path-shaped mesh add edge lengths") {
  TriangleMesh mesh;
  mesh.vertices.resize(4, 3);
  mesh.vertices << 0, 0, 0, 1, 0, 0, 2, 0, 0, 3, 0, 0;
  mesh.faces.resize(2, 3);
  mesh.faces << 0, 1, 2, 1, 2, 3;
  GeodesicField field = geodesic_distances(mesh, 0);
  CHECK(field.distance[3] == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("disconnected meshes are flagged with infinite distances") {
  TriangleMesh mesh;
  mesh.vertices.resize(6, 3);
  mesh.vertices << 0, 0, 0, 1, 0, 0, 0, 1, 0, 5, 5, 5, 6, 5, 5, 5, 6, 5;
  mesh.faces.resize(2, 3);
  mesh.faces << 0, 1, 2, 3, 4, 5;
  GeodesicField field = geodesic_distances(mesh, 0);
  CHECK_FALSE(field.complete);
  CHECK(std::isinf(field.distance[3]));
}

TEST_CASE("geodesics satisfy the triangle inequality on sampled triples") {
  TriangleMesh mesh = fx::grid_mesh(8, 8, 0.1, 11);
  std::mt19937 rng(5);
  std::uniform_int_distribution<int> pick(0, mesh.n() - 1);
  for (int trial = 0; trial < 20; ++trial) {
    const int a = pick(rng), b = pick(rng), c = pick(rng);
    const Eigen::VectorXd da = geodesic_distances(mesh, a).distance;
    const Eigen::VectorXd db = geodesic_distances(mesh, b).distance;
    CHECK(da[c] <= da[b] + db[c] + 1e-12);
  }
}

TEST_SUITE_END();
