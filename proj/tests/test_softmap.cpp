#include <doctest.h>

#include <Eigen/Dense>
#include <cstring>
#include <random>

#include "specmap/memtrack.hpp"
#include "specmap/softmap.hpp"
#include "support/oracles.hpp"

using namespace specmap;

namespace {

double relative_frobenius(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-300);
}

}  // namespace

TEST_SUITE_BEGIN("softmap");

TEST_CASE("equidistant sources get equal weights") {
  Eigen::MatrixXd f1(2, 1), f2(1, 1);
  f1 << 0.0, 1.0;
  f2 << 0.5;
  ScalableSoftMap map(f1, f2, 1.0);
  Eigen::MatrixXd out = apply(map, Eigen::MatrixXd::Identity(2, 2));
  CHECK(out(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(out(0, 1) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("tiny blur on matching features reproduces the input") {
  Eigen::MatrixXd f = oracle::random_matrix(40, 4, 11);
  Eigen::MatrixXd b = oracle::random_matrix(40, 6, 12);
  ScalableSoftMap map(f, f, 1e-4);
  Eigen::MatrixXd out = apply(map, b);
  CHECK((out - b).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("blockwise application matches the dense oracle") {
  Eigen::MatrixXd f1 = oracle::random_matrix(317, 8, 21);
  Eigen::MatrixXd f2 = oracle::random_matrix(203, 8, 22);
  Eigen::MatrixXd b = oracle::random_matrix(317, 16, 23);
  const double sigma = 0.3;
  ScalableSoftMap map(f1, f2, sigma);
  Eigen::MatrixXd expected = oracle::dense_soft_matrix(f1, f2, sigma) * b;
  CHECK(relative_frobenius(apply(map, b), expected) <= 1e-12);
}

TEST_CASE("oracle equivalence holds across blur scales and blockings") {
  std::mt19937 rng(99);
  std::uniform_int_distribution<int> size1(3, 512), size2(3, 512), dims(1, 8), width(1, 8);
  const double sigmas[4] = {1e-3, 1e-1, 1.0, 1e2};
  for (int trial = 0; trial < 12; ++trial) {
    const int n1 = size1(rng), n2 = size2(rng), p = dims(rng), d = width(rng);
    const double sigma = sigmas[trial % 4];
    Eigen::MatrixXd f1 = oracle::random_matrix(n1, p, 1000 + trial);
    Eigen::MatrixXd f2 = oracle::random_matrix(n2, p, 2000 + trial);
    Eigen::MatrixXd b = oracle::random_matrix(n1, d, 3000 + trial);
    ScalableSoftMap map(f1, f2, sigma);
    Eigen::MatrixXd expected = oracle::dense_soft_matrix(f1, f2, sigma) * b;

    BlockSpec blocks;
    blocks.target_tile = 1 + trial * 37 % 200;
    blocks.source_block = 1 + trial * 13 % 100;
    CHECK(relative_frobenius(apply(map, b, blocks), expected) <= 1e-12);
  }
}

TEST_CASE("rows stay stochastic") {
  Eigen::MatrixXd f1 = oracle::random_matrix(333, 5, 31);
  Eigen::MatrixXd f2 = oracle::random_matrix(121, 5, 32);
  ScalableSoftMap map(f1, f2, 0.05);
  Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(333, 1);
  Eigen::MatrixXd out = apply(map, ones);
  CHECK((out.array() - 1.0).abs().maxCoeff() <= 1e-12);
}

TEST_CASE("repeated runs are bitwise identical") {
  Eigen::MatrixXd f1 = oracle::random_matrix(700, 6, 41);
  Eigen::MatrixXd f2 = oracle::random_matrix(450, 6, 42);
  Eigen::MatrixXd b = oracle::random_matrix(700, 5, 43);
  ScalableSoftMap map(f1, f2, 0.2);
  Eigen::MatrixXd first = apply(map, b);
  Eigen::MatrixXd second = apply(map, b);
  CHECK(std::memcmp(first.data(), second.data(),
                    sizeof(double) * static_cast<size_t>(first.size())) == 0);
}

TEST_CASE("invalid inputs are rejected") {
  Eigen::MatrixXd f1 = Eigen::MatrixXd::Zero(4, 2);
  Eigen::MatrixXd f2 = Eigen::MatrixXd::Zero(3, 2);
  CHECK_THROWS_AS(ScalableSoftMap(f1, Eigen::MatrixXd::Zero(3, 3), 1.0), DimensionMismatch);
  CHECK_THROWS_AS(ScalableSoftMap(f1, f2, 0.0), NonFiniteInput);
  Eigen::MatrixXd bad = f2;
  bad(1, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(ScalableSoftMap(f1, bad, 1.0), NonFiniteInput);

  ScalableSoftMap map(f1, f2, 1.0);
  CHECK_THROWS_AS(apply(map, Eigen::MatrixXd::Zero(5, 2)), DimensionMismatch);
  CHECK_THROWS_AS(apply_adjoint(map, Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Zero(4, 2)),
                  DimensionMismatch);
}

TEST_CASE("adjoint of a zero cotangent vanishes") {
  Eigen::MatrixXd f1 = oracle::random_matrix(30, 3, 51);
  Eigen::MatrixXd f2 = oracle::random_matrix(20, 3, 52);
  Eigen::MatrixXd b = oracle::random_matrix(30, 4, 53);
  ScalableSoftMap map(f1, f2, 0.7);
  AdjointResult grad = apply_adjoint(map, Eigen::MatrixXd::Zero(20, 4), b);
  CHECK(grad.df1.cwiseAbs().maxCoeff() == 0.0);
  CHECK(grad.df2.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("huge blur flattens the map and kills the gradient") {
  Eigen::MatrixXd f1 = oracle::random_matrix(50, 4, 61);
  Eigen::MatrixXd f2 = oracle::random_matrix(40, 4, 62);
  Eigen::MatrixXd b = oracle::random_matrix(50, 3, 63);
  Eigen::MatrixXd g = oracle::random_matrix(40, 3, 64);
  ScalableSoftMap map(f1, f2, 1e3);
  AdjointResult grad = apply_adjoint(map, g, b);
  const double budget = 1e-4 * g.norm() * b.norm();
  CHECK(grad.df1.norm() <= budget);
  CHECK(grad.df2.norm() <= budget);
}

TEST_CASE("adjoint matches central finite differences") {
  const int n1 = 97, n2 = 113, p = 5, d = 7;
  const double sigma = 0.5, h = 1e-5;
  Eigen::MatrixXd f1 = oracle::random_matrix(n1, p, 71);
  Eigen::MatrixXd f2 = oracle::random_matrix(n2, p, 72);
  Eigen::MatrixXd b = oracle::random_matrix(n1, d, 73);
  Eigen::MatrixXd g = oracle::random_matrix(n2, d, 74);

  AdjointResult grad = apply_adjoint(ScalableSoftMap(f1, f2, sigma), g, b);

  std::mt19937 rng(75);
  for (int direction = 0; direction < 20; ++direction) {
    Eigen::MatrixXd u1 = oracle::random_matrix(n1, p, 760 + direction);
    Eigen::MatrixXd u2 = oracle::random_matrix(n2, p, 860 + direction);
    u1 /= u1.norm();
    u2 /= u2.norm();
    const double analytic =
        (grad.df1.array() * u1.array()).sum() + (grad.df2.array() * u2.array()).sum();
    auto value_at = [&](double t) {
      ScalableSoftMap moved(f1 + t * u1, f2 + t * u2, sigma);
      return (g.array() * apply(moved, b).array()).sum();
    };
    const double numeric = oracle::central_difference(value_at, h);
    CHECK(std::abs(analytic - numeric) <=
          1e-5 * std::max({std::abs(analytic), std::abs(numeric), 1e-10}));
  }
}

TEST_CASE("argmax extraction on identical features is the identity") {
  Eigen::MatrixXd f = oracle::random_matrix(64, 5, 81);
  ScalableSoftMap map(f, f, 0.3);
  VertexMap vmap = extract_pointwise(map);
  for (int i = 0; i < 64; ++i) CHECK(vmap.indices[static_cast<size_t>(i)] == i);
}

TEST_CASE("argmax extraction picks the nearest rows") {
  Eigen::MatrixXd f1(2, 1), f2(2, 1);
  f1 << 0.0, 10.0;
  f2 << 1.0, 9.0;
  VertexMap vmap = extract_pointwise(ScalableSoftMap(f1, f2, 1.0));
  CHECK(vmap.indices[0] == 0);
  CHECK(vmap.indices[1] == 1);
}

TEST_CASE("extraction equals the dense argmin oracle") {
  Eigen::MatrixXd f1 = oracle::random_matrix(511, 6, 91);
  Eigen::MatrixXd f2 = oracle::random_matrix(257, 6, 92);
  VertexMap vmap = extract_pointwise(ScalableSoftMap(f1, f2, 0.25));
  std::vector<int> expected = oracle::dense_nearest_rows(f1, f2);
  CHECK(vmap.indices == expected);
}

TEST_CASE("seeded search returns the same answer as seedless") {
  Eigen::MatrixXd f1 = oracle::random_matrix(900, 4, 93);
  Eigen::MatrixXd f2 = oracle::random_matrix(700, 4, 94);
  std::vector<int> plain = nearest_rows(f1, f2);
  std::mt19937 rng(95);
  std::uniform_int_distribution<int> pick(0, 899);
  std::vector<int> seed(700);
  for (auto& s : seed) s = pick(rng);
  CHECK(nearest_rows(f1, f2, &seed) == plain);
  CHECK(nearest_rows(f1, f2, &plain) == plain);
}

TEST_CASE("tiny blur stays finite and matches the hard assignment") {
  Eigen::MatrixXd f1 = oracle::random_matrix(300, 6, 96);
  Eigen::MatrixXd f2 = oracle::random_matrix(200, 6, 97);
  ScalableSoftMap map(f1, f2, 1e-4);
  Eigen::MatrixXd out = apply(map, oracle::random_matrix(300, 3, 98));
  CHECK(out.allFinite());
  VertexMap vmap = extract_pointwise(map);
  CHECK(vmap.indices == oracle::dense_nearest_rows(f1, f2));
}

TEST_CASE("pointwise application gathers rows") {
  Eigen::MatrixXd b = oracle::random_matrix(9, 4, 101);

  VertexMap identity = identity_vertex_map(9);
  CHECK((pointwise_apply(identity, b) - b).cwiseAbs().maxCoeff() == 0.0);

  VertexMap constant;
  constant.source_count = 9;
  constant.indices.assign(5, 3);
  Eigen::MatrixXd out = pointwise_apply(constant, b);
  for (int i = 0; i < 5; ++i) CHECK((out.row(i) - b.row(3)).cwiseAbs().maxCoeff() == 0.0);

  std::mt19937 rng(102);
  std::uniform_int_distribution<int> pick(0, 8);
  VertexMap random;
  random.source_count = 9;
  random.indices.resize(17);
  for (auto& index : random.indices) index = pick(rng);
  Eigen::MatrixXd dense = oracle::dense_permutation_matrix(random) * b;
  CHECK((pointwise_apply(random, b) - dense).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("streaming kernels never allocate anything near n1*n2") {
  const int n = 20000;
  const int p = 4, d = 2;
  Eigen::MatrixXd f1 = oracle::random_matrix(n, p, 111);
  Eigen::MatrixXd f2 = oracle::random_matrix(n, p, 112);
  Eigen::MatrixXd b = oracle::random_matrix(n, d, 113);
  Eigen::MatrixXd g = oracle::random_matrix(n, d, 114);
  ScalableSoftMap map(f1, f2, 0.5);

  REQUIRE(memtrack::active());
  const std::uint64_t cap =
      static_cast<std::uint64_t>(n) * n / 4 * sizeof(double);

  memtrack::reset_window();
  Eigen::MatrixXd out = apply(map, b);
  CHECK(memtrack::stats().max_single_bytes < cap);

  memtrack::reset_window();
  AdjointResult grad = apply_adjoint(map, g, b);
  CHECK(memtrack::stats().max_single_bytes < cap);

  memtrack::reset_window();
  VertexMap vmap = extract_pointwise(map);
  CHECK(memtrack::stats().max_single_bytes < cap);
  CHECK(vmap.n2() == n);
  (void)out;
  (void)grad;
}

TEST_SUITE_END();
