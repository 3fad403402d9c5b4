#include "specmap/softmap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "specmap/parallel.hpp"

namespace specmap {

namespace {

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Squared distances between row-major feature tiles, written column-major
// (queries down, database across). Direct per-pair differences; the naive
// form keeps full accuracy for small distances, which the kernel exponent
// amplifies at small blur values.
void pairwise_sq_dists(const double* q, int nq, const double* f, int nf, int p, double* out) {
  for (int j = 0; j < nf; ++j) {
    const double* frow = f + static_cast<size_t>(j) * p;
    double* col = out + static_cast<size_t>(j) * nq;
    for (int i = 0; i < nq; ++i) {
      const double* qrow = q + static_cast<size_t>(i) * p;
      double acc = 0.0;
      for (int c = 0; c < p; ++c) {
        const double diff = qrow[c] - frow[c];
        acc += diff * diff;
      }
      col[i] = acc;
    }
  }
}

void copy_rows_rowmajor(const Eigen::MatrixXd& m, int row0, int rows, RowMajorMatrix& out) {
  out.resize(rows, m.cols());
  out = m.middleRows(row0, rows);
}

int clamp_block(int value, int fallback) { return value > 0 ? value : fallback; }

}  // namespace

VertexMap identity_vertex_map(int n) {
  VertexMap map;
  map.source_count = n;
  map.indices.resize(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) map.indices[static_cast<size_t>(i)] = i;
  return map;
}

ScalableSoftMap::ScalableSoftMap(Eigen::MatrixXd f1, Eigen::MatrixXd f2, double sigma,
                                 KernelType kernel)
    : f1_(std::move(f1)), f2_(std::move(f2)), sigma_(sigma), kernel_(kernel) {
  if (f1_.cols() != f2_.cols())
    throw DimensionMismatch("feature matrices disagree on dimension");
  if (f1_.cols() < 1 || f1_.rows() < 1 || f2_.rows() < 1)
    throw DimensionMismatch("feature matrices must be nonempty");
  if (!(sigma_ > 0.0)) throw NonFiniteInput("blur parameter must be positive");
  if (!f1_.allFinite() || !f2_.allFinite())
    throw NonFiniteInput("non-finite feature entries");
}

namespace {

// Shared streaming pass: out = Pi * b; optionally keeps the per-row
// stabilized normalizer pieces (running max m and rescaled sum s) for the
// adjoint's second pass.
Eigen::MatrixXd stream_apply(const ScalableSoftMap& map, const Eigen::Ref<const Eigen::MatrixXd>& b,
                             const BlockSpec& blocks, Eigen::VectorXd* max_out,
                             Eigen::VectorXd* sum_out) {
  const int n1 = map.n1(), n2 = map.n2(), p = map.feature_dim();
  const int d = static_cast<int>(b.cols());
  if (static_cast<int>(b.rows()) != n1)
    throw DimensionMismatch("apply: expected " + std::to_string(n1) + " rows, got " +
                            std::to_string(b.rows()));
  if (d < 1) throw DimensionMismatch("apply: empty right-hand side");
  if (!b.allFinite()) throw NonFiniteInput("apply: non-finite right-hand side");

  const double inv_two_sigma_sq = 1.0 / (2.0 * map.sigma() * map.sigma());
  const int tile = clamp_block(blocks.target_tile, 1024);
  const int block = clamp_block(blocks.source_block, 256);
  const int n_tiles = (n2 + tile - 1) / tile;

  Eigen::MatrixXd out(n2, d);
  if (max_out) max_out->resize(n2);
  if (sum_out) sum_out->resize(n2);

  parallel_chunks(n_tiles, [&](int t, int) {
    const int row0 = t * tile;
    const int rows = std::min(tile, n2 - row0);

    RowMajorMatrix f2_tile;
    copy_rows_rowmajor(map.f2(), row0, rows, f2_tile);

    Eigen::VectorXd running_max =
        Eigen::VectorXd::Constant(rows, -std::numeric_limits<double>::infinity());
    Eigen::VectorXd running_sum = Eigen::VectorXd::Zero(rows);
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(rows, d);
    Eigen::MatrixXd weights(rows, block);
    Eigen::VectorXd row_min(rows);
    RowMajorMatrix f1_block;

    for (int j0 = 0; j0 < n1; j0 += block) {
      const int cols = std::min(block, n1 - j0);
      copy_rows_rowmajor(map.f1(), j0, cols, f1_block);
      pairwise_sq_dists(f2_tile.data(), rows, f1_block.data(), cols, p, weights.data());

      row_min.setConstant(std::numeric_limits<double>::infinity());
      for (int jj = 0; jj < cols; ++jj) row_min = row_min.cwiseMin(weights.col(jj));

      // Online rescaling: when a block raises a row's max exponent, the
      // previously accumulated sums shrink by exp(old - new).
      for (int i = 0; i < rows; ++i) {
        const double block_max = -row_min[i] * inv_two_sigma_sq;
        if (block_max > running_max[i]) {
          const double scale = std::exp(running_max[i] - block_max);
          running_sum[i] *= scale;
          acc.row(i) *= scale;
          running_max[i] = block_max;
        }
      }
      for (int jj = 0; jj < cols; ++jj)
        weights.col(jj) =
            (weights.col(jj) * -inv_two_sigma_sq - running_max).array().exp().matrix();
      running_sum += weights.leftCols(cols).rowwise().sum();
      acc.noalias() += weights.leftCols(cols) * b.middleRows(j0, cols);
    }

    out.middleRows(row0, rows) = acc.array().colwise() / running_sum.array();
    if (max_out) max_out->segment(row0, rows) = running_max;
    if (sum_out) sum_out->segment(row0, rows) = running_sum;
  });

  return out;
}

}  // namespace

Eigen::MatrixXd apply(const ScalableSoftMap& map, const Eigen::Ref<const Eigen::MatrixXd>& b,
                      const BlockSpec& blocks) {
  return stream_apply(map, b, blocks, nullptr, nullptr);
}

AdjointResult apply_adjoint(const ScalableSoftMap& map, const Eigen::Ref<const Eigen::MatrixXd>& g,
                            const Eigen::Ref<const Eigen::MatrixXd>& b, bool want_df1,
                            bool want_df2, const BlockSpec& blocks) {
  const int n1 = map.n1(), n2 = map.n2(), p = map.feature_dim();
  const int d = static_cast<int>(b.cols());
  if (static_cast<int>(g.rows()) != n2 || static_cast<int>(g.cols()) != d)
    throw DimensionMismatch("apply_adjoint: cotangent shape mismatch");
  if (!g.allFinite()) throw NonFiniteInput("apply_adjoint: non-finite cotangent");

  // First pass: recompute the forward output and the per-row normalizers.
  Eigen::VectorXd row_max, row_sum;
  Eigen::MatrixXd forward = stream_apply(map, b, blocks, &row_max, &row_sum);
  Eigen::VectorXd rho = (g.array() * forward.array()).rowwise().sum();

  const double inv_sigma_sq = 1.0 / (map.sigma() * map.sigma());
  const double inv_two_sigma_sq = 0.5 * inv_sigma_sq;
  const int tile = clamp_block(blocks.target_tile, 1024);
  const int block = clamp_block(blocks.source_block, 256);
  const int n_tiles = (n2 + tile - 1) / tile;
  const int workers = thread_count();

  AdjointResult result;
  if (want_df2) result.df2.setZero(n2, p);

  // df1 collects contributions from every target tile; per-worker partials
  // summed in worker order keep the reduction deterministic.
  std::vector<Eigen::MatrixXd> df1_partial;
  std::vector<Eigen::VectorXd> colsum_partial;
  if (want_df1) {
    df1_partial.assign(static_cast<size_t>(workers), Eigen::MatrixXd::Zero(n1, p));
    colsum_partial.assign(static_cast<size_t>(workers), Eigen::VectorXd::Zero(n1));
  }

  parallel_chunks(n_tiles, [&](int t, int worker) {
    const int row0 = t * tile;
    const int rows = std::min(tile, n2 - row0);

    RowMajorMatrix f2_tile;
    copy_rows_rowmajor(map.f2(), row0, rows, f2_tile);
    Eigen::MatrixXd f2_tile_cm = map.f2().middleRows(row0, rows);
    Eigen::MatrixXd g_tile = g.middleRows(row0, rows);

    const Eigen::VectorXd m_tile = row_max.segment(row0, rows);
    const Eigen::VectorXd inv_s_tile = row_sum.segment(row0, rows).cwiseInverse();
    const Eigen::VectorXd rho_tile = rho.segment(row0, rows);

    Eigen::MatrixXd weights(rows, block);
    Eigen::MatrixXd responsibilities(rows, block);
    RowMajorMatrix f1_block;
    Eigen::MatrixXd df2_tile = Eigen::MatrixXd::Zero(rows, p);
    Eigen::VectorXd rowsum = Eigen::VectorXd::Zero(rows);

    for (int j0 = 0; j0 < n1; j0 += block) {
      const int cols = std::min(block, n1 - j0);
      copy_rows_rowmajor(map.f1(), j0, cols, f1_block);
      pairwise_sq_dists(f2_tile.data(), rows, f1_block.data(), cols, p, weights.data());

      // dL/d(delta)_ij = Pi_ij * (r_ij - rho_i) with r_ij = <g_i, b_j>.
      responsibilities.leftCols(cols).noalias() = g_tile * b.middleRows(j0, cols).transpose();
      for (int jj = 0; jj < cols; ++jj) {
        weights.col(jj) = (weights.col(jj) * -inv_two_sigma_sq - m_tile)
                              .array()
                              .exp()
                              .matrix()
                              .cwiseProduct(inv_s_tile)
                              .cwiseProduct(responsibilities.col(jj) - rho_tile);
      }

      if (want_df2) {
        df2_tile.noalias() += weights.leftCols(cols) * map.f1().middleRows(j0, cols);
        rowsum += weights.leftCols(cols).rowwise().sum();
      }
      if (want_df1) {
        df1_partial[static_cast<size_t>(worker)].middleRows(j0, cols).noalias() +=
            weights.leftCols(cols).transpose() * f2_tile_cm;
        colsum_partial[static_cast<size_t>(worker)].segment(j0, cols) +=
            weights.leftCols(cols).colwise().sum();
      }
    }

    if (want_df2)
      result.df2.middleRows(row0, rows) =
          inv_sigma_sq * (df2_tile - rowsum.asDiagonal() * f2_tile_cm);
  });

  if (want_df1) {
    Eigen::MatrixXd df1 = std::move(df1_partial[0]);
    Eigen::VectorXd colsum = std::move(colsum_partial[0]);
    for (int w = 1; w < workers; ++w) {
      df1 += df1_partial[static_cast<size_t>(w)];
      colsum += colsum_partial[static_cast<size_t>(w)];
    }
    result.df1 = inv_sigma_sq * (df1 - colsum.asDiagonal() * map.f1());
  }
  return result;
}

namespace {

constexpr int kCellSize = 512;
constexpr int kQueryTile = 1024;

struct CellIndex {
  RowMajorMatrix database;     // row-major copy for contiguous row access
  Eigen::MatrixXd centroids;   // p x G (columns are centroids)
  Eigen::VectorXd radius;      // per cell, slightly inflated
  Eigen::VectorXd sq_norms;    // |d_j|^2
  Eigen::VectorXd centroid_sq_norms;
  int cells = 0;
};

CellIndex build_cells(const Eigen::MatrixXd& database) {
  CellIndex index;
  const int n = static_cast<int>(database.rows());
  const int p = static_cast<int>(database.cols());
  index.cells = (n + kCellSize - 1) / kCellSize;
  index.database = database;
  index.sq_norms = database.rowwise().squaredNorm();
  index.centroids.resize(p, index.cells);
  index.radius.resize(index.cells);
  for (int gcell = 0; gcell < index.cells; ++gcell) {
    const int j0 = gcell * kCellSize;
    const int count = std::min(kCellSize, n - j0);
    Eigen::VectorXd centroid = database.middleRows(j0, count).colwise().mean();
    double max_sq = 0.0;
    for (int j = 0; j < count; ++j) {
      const double sq = (database.row(j0 + j).transpose() - centroid).squaredNorm();
      max_sq = std::max(max_sq, sq);
    }
    index.centroids.col(gcell) = centroid;
    // Inflation keeps the triangle-inequality bound valid under roundoff.
    index.radius[gcell] = std::sqrt(max_sq) * (1.0 + 1e-12) + 1e-300;
  }
  index.centroid_sq_norms = index.centroids.colwise().squaredNorm();
  return index;
}

}  // namespace

std::vector<int> nearest_rows(const Eigen::MatrixXd& database, const Eigen::MatrixXd& queries,
                              const std::vector<int>* seed) {
  const int n1 = static_cast<int>(database.rows());
  const int n2 = static_cast<int>(queries.rows());
  const int p = static_cast<int>(database.cols());
  if (queries.cols() != p) throw DimensionMismatch("nearest_rows: dimension mismatch");
  if (n1 < 1 || n2 < 1) throw DimensionMismatch("nearest_rows: empty input");
  if (seed && static_cast<int>(seed->size()) != n2)
    throw DimensionMismatch("nearest_rows: seed size mismatch");
  if (!database.allFinite() || !queries.allFinite())
    throw NonFiniteInput("nearest_rows: non-finite input");

  const CellIndex index = build_cells(database);
  const double max_db_norm = std::sqrt(index.sq_norms.maxCoeff());
  std::vector<int> result(static_cast<size_t>(n2));

  const int n_tiles = (n2 + kQueryTile - 1) / kQueryTile;
  parallel_chunks(n_tiles, [&](int t, int) {
    const int row0 = t * kQueryTile;
    const int rows = std::min(kQueryTile, n2 - row0);
    const auto q_tile = queries.middleRows(row0, rows);
    Eigen::VectorXd q_sq = q_tile.rowwise().squaredNorm();

    // Lower bound per (query, cell): (max(0, |q - c| - r))^2 in exact
    // arithmetic; a slack proportional to the squared scale absorbs the
    // floating-point error of both the bound and the scanned scores, so
    // pruning can never drop the true argmin.
    Eigen::MatrixXd cross = q_tile * index.centroids;  // rows x cells
    Eigen::MatrixXd bound(rows, index.cells);
    for (int gcell = 0; gcell < index.cells; ++gcell) {
      for (int i = 0; i < rows; ++i) {
        const double sq =
            std::max(0.0, q_sq[i] + index.centroid_sq_norms[gcell] - 2.0 * cross(i, gcell));
        const double gap = std::sqrt(sq) - index.radius[gcell];
        bound(i, gcell) = gap > 0.0 ? gap * gap : 0.0;
      }
    }

    std::vector<double> best(static_cast<size_t>(rows),
                             std::numeric_limits<double>::infinity());
    std::vector<int> best_j(static_cast<size_t>(rows), -1);
    if (seed) {
      for (int i = 0; i < rows; ++i) {
        const int j = (*seed)[static_cast<size_t>(row0 + i)];
        if (j < 0 || j >= n1) throw DimensionMismatch("nearest_rows: seed index out of range");
        const double score =
            q_sq[i] + index.sq_norms[j] -
            2.0 * q_tile.row(i).dot(index.database.row(j));
        best[static_cast<size_t>(i)] = score;
        best_j[static_cast<size_t>(i)] = j;
      }
    }

    std::vector<double> slack(static_cast<size_t>(rows));
    for (int i = 0; i < rows; ++i) {
      const double scale = std::sqrt(q_sq[i]) + max_db_norm;
      slack[static_cast<size_t>(i)] = 1e-11 * (scale * scale) + 1e-300;
    }

    // Survivor sets are computed against the seeded best, which only
    // shrinks afterwards, so they are supersets of what any scan order
    // would visit.
    std::vector<std::vector<int>> members(static_cast<size_t>(index.cells));
    for (int i = 0; i < rows; ++i)
      for (int gcell = 0; gcell < index.cells; ++gcell)
        if (bound(i, gcell) <= best[static_cast<size_t>(i)] + slack[static_cast<size_t>(i)])
          members[static_cast<size_t>(gcell)].push_back(i);

    RowMajorMatrix q_sub;
    Eigen::MatrixXd scores;
    for (int gcell = 0; gcell < index.cells; ++gcell) {
      const auto& queued = members[static_cast<size_t>(gcell)];
      if (queued.empty()) continue;
      const int j0 = gcell * kCellSize;
      const int count = std::min(kCellSize, n1 - j0);
      const int m = static_cast<int>(queued.size());

      const auto cell_rows = index.database.middleRows(j0, count);
      if (m == rows) {
        scores.noalias() = q_tile * cell_rows.transpose();
      } else {
        q_sub.resize(m, p);
        for (int s = 0; s < m; ++s) q_sub.row(s) = q_tile.row(queued[static_cast<size_t>(s)]);
        scores.noalias() = q_sub * cell_rows.transpose();
      }
      for (int s = 0; s < m; ++s) {
        const int i = queued[static_cast<size_t>(s)];
        double& b = best[static_cast<size_t>(i)];
        int& bj = best_j[static_cast<size_t>(i)];
        const double qn = q_sq[i];
        for (int j = 0; j < count; ++j) {
          const double score = qn + index.sq_norms[j0 + j] - 2.0 * scores(s, j);
          const int global_j = j0 + j;
          if (score < b || (score == b && global_j < bj)) {
            b = score;
            bj = global_j;
          }
        }
      }
    }

    for (int i = 0; i < rows; ++i) result[static_cast<size_t>(row0 + i)] = best_j[static_cast<size_t>(i)];
  });

  return result;
}

VertexMap extract_pointwise(const ScalableSoftMap& map) {
  VertexMap result;
  result.source_count = map.n1();
  result.indices = nearest_rows(map.f1(), map.f2());
  return result;
}

Eigen::MatrixXd pointwise_apply(const VertexMap& vmap, const Eigen::Ref<const Eigen::MatrixXd>& b) {
  if (static_cast<int>(b.rows()) != vmap.source_count)
    throw DimensionMismatch("pointwise_apply: expected " + std::to_string(vmap.source_count) +
                            " rows, got " + std::to_string(b.rows()));
  Eigen::MatrixXd out(vmap.n2(), b.cols());
  for (int i = 0; i < vmap.n2(); ++i) {
    const int j = vmap.indices[static_cast<size_t>(i)];
    if (j < 0 || j >= vmap.source_count)
      throw DimensionMismatch("pointwise_apply: index out of range");
    out.row(i) = b.row(j);
  }
  return out;
}

}  // namespace specmap
