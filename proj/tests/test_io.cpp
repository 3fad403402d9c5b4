#include <doctest.h>

#include <fstream>

#include "specmap/io.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace specmap;
namespace fx = specmap::testing;

TEST_SUITE_BEGIN("io");

TEST_CASE("binary matrices survive a round trip bit for bit") {
  fx::TempDir dir;
  Eigen::MatrixXd m = oracle::random_matrix(23, 7, 1);
  m(0, 0) = 1.0 / 3.0;
  m(1, 1) = -1e-308;
  save_matrix(dir.file("m.fmat"), m);
  Eigen::MatrixXd loaded = load_matrix(dir.file("m.fmat"));
  CHECK(loaded.rows() == 23);
  CHECK(loaded.cols() == 7);
  CHECK((loaded - m).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("matrix reader rejects foreign files") {
  fx::TempDir dir;
  fx::write_file(dir.file("bad.fmat"), "not a matrix");
  CHECK_THROWS_AS(load_matrix(dir.file("bad.fmat")), ParseError);
}

TEST_CASE("vertex maps serialize one index per line") {
  fx::TempDir dir;
  VertexMap map;
  map.source_count = 9;
  map.indices = {3, 1, 4, 1, 5};
  save_vertex_map(dir.file("map.txt"), map);

  std::ifstream in(dir.file("map.txt"));
  std::string contents((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
  CHECK(contents == "3\n1\n4\n1\n5\n");

  VertexMap loaded = load_vertex_map(dir.file("map.txt"), 9);
  CHECK(loaded.indices == map.indices);
  CHECK(loaded.source_count == 9);
  CHECK_THROWS_AS(load_vertex_map(dir.file("map.txt"), 4), ParseError);
}

TEST_CASE("functional map text keeps 17 significant digits") {
  fx::TempDir dir;
  FunctionalMap fmap;
  fmap.c = oracle::random_matrix(5, 3, 2);
  fmap.c(0, 0) = 1.0 / 3.0;
  save_fmap_text(dir.file("c.txt"), fmap);

  std::ifstream in(dir.file("c.txt"));
  std::string header;
  std::getline(in, header);
  CHECK(header == "5 3");

  FunctionalMap loaded = load_fmap_text(dir.file("c.txt"));
  CHECK(loaded.k2() == 5);
  CHECK(loaded.k1() == 3);
  CHECK((loaded.c - fmap.c).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("functional map reader rejects malformed headers") {
  fx::TempDir dir;
  fx::write_file(dir.file("bad.txt"), "0 3\n");
  CHECK_THROWS_AS(load_fmap_text(dir.file("bad.txt")), ParseError);
  fx::write_file(dir.file("short.txt"), "2 2\n1 2\n3\n");
  CHECK_THROWS_AS(load_fmap_text(dir.file("short.txt")), ParseError);
}

TEST_SUITE_END();
