#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "specmap/mesh.hpp"
#include "specmap/softmap.hpp"
#include "specmap/zoomout.hpp"

namespace specmap {

struct ErrorReport {
  Eigen::VectorXd errors;  // per target vertex, geodesic distance / sqrt(area)
  double mean_x100 = 0.0;
  int n = 0;
};

// Per-vertex geodesic error between predicted and ground-truth images on the
// codomain shape (shape 1), normalized by sqrt of its total area. Distances
// are computed once per distinct ground-truth vertex and in parallel.
ErrorReport mean_geodesic_error(const VertexMap& pred, const VertexMap& gt,
                                const TriangleMesh& mesh1);

// Fraction of vertices with error <= t for each threshold (ascending).
std::vector<double> pck_curve(const ErrorReport& report, const std::vector<double>& thresholds);

// ErrorReport serialization: per-vertex CSV and a one-line JSON summary.
void write_error_csv(std::ostream& out, const ErrorReport& report);
void write_error_json(std::ostream& out, const ErrorReport& report,
                      const std::vector<double>& thresholds,
                      const std::vector<double>& pck);

struct BenchRow {
  int size = 0;                        // requested vertex count
  int actual_vertices = 0;
  double seconds = 0.0;                // mean wall time of the refinement
  std::uint64_t peak_bytes = 0;        // max transient allocation during refinement
  std::uint64_t max_single_bytes = 0;  // largest single allocation seen
};

// Speed/memory harness: for each requested size, synthesizes an icosphere
// pair of (at least) that many vertices, precomputes a basis of k_final
// eigenpairs, then times the hard refinement loop from an identity map;
// allocation figures come from the counting allocator, measured over the
// refinement only. Throws OutOfBudget when one refinement exceeds
// budget_seconds.
std::vector<BenchRow> bench_refinement(const std::vector<int>& sizes, const ZoomOutConfig& config,
                                       int repetitions, double budget_seconds = 1e30);

// "size,seconds,peak_bytes" CSV, one row per size.
void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows);

}  // namespace specmap
