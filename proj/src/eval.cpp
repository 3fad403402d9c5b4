#include "specmap/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>
#include <unordered_map>

#include "specmap/memtrack.hpp"
#include "specmap/parallel.hpp"
#include "specmap/spectral.hpp"

namespace specmap {

ErrorReport mean_geodesic_error(const VertexMap& pred, const VertexMap& gt,
                                const TriangleMesh& mesh1) {
  if (pred.n2() != gt.n2())
    throw DimensionMismatch("prediction and ground truth differ in length");
  if (pred.source_count != mesh1.n() || gt.source_count != mesh1.n())
    throw DimensionMismatch("maps do not target the given mesh");

  const AreaVector areas = vertex_areas(mesh1);
  const double scale = 1.0 / std::sqrt(areas.total);

  // One Dijkstra per distinct ground-truth image vertex, in parallel.
  std::vector<int> sources;
  std::unordered_map<int, int> source_slot;
  for (int i = 0; i < gt.n2(); ++i) {
    const int v = gt.indices[static_cast<size_t>(i)];
    if (v < 0 || v >= mesh1.n()) throw DimensionMismatch("ground-truth index out of range");
    if (source_slot.emplace(v, static_cast<int>(sources.size())).second) sources.push_back(v);
  }
  std::vector<Eigen::VectorXd> fields(sources.size());
  parallel_chunks(static_cast<int>(sources.size()), [&](int s, int) {
    GeodesicField field = geodesic_distances(mesh1, sources[static_cast<size_t>(s)]);
    if (!field.complete)
      throw DisconnectedMesh("mesh is not edge-connected; geodesic errors undefined");
    fields[static_cast<size_t>(s)] = std::move(field.distance);
  });

  ErrorReport report;
  report.n = pred.n2();
  report.errors.resize(report.n);
  for (int i = 0; i < report.n; ++i) {
    const int p = pred.indices[static_cast<size_t>(i)];
    if (p < 0 || p >= mesh1.n()) throw DimensionMismatch("predicted index out of range");
    const int slot = source_slot.at(gt.indices[static_cast<size_t>(i)]);
    report.errors[i] = fields[static_cast<size_t>(slot)][p] * scale;
  }
  report.mean_x100 = report.errors.mean() * 100.0;
  return report;
}

std::vector<double> pck_curve(const ErrorReport& report, const std::vector<double>& thresholds) {
  for (size_t t = 0; t < thresholds.size(); ++t) {
    if (thresholds[t] < 0.0) throw ConfigError("thresholds must be nonnegative");
    if (t > 0 && thresholds[t] < thresholds[t - 1])
      throw ConfigError("thresholds must be ascending");
  }
  std::vector<double> fractions(thresholds.size(), 0.0);
  if (report.n == 0) return fractions;
  for (size_t t = 0; t < thresholds.size(); ++t) {
    int below = 0;
    for (int i = 0; i < report.n; ++i)
      if (report.errors[i] <= thresholds[t]) ++below;
    fractions[t] = static_cast<double>(below) / report.n;
  }
  return fractions;
}

void write_error_csv(std::ostream& out, const ErrorReport& report) {
  out << "vertex,error\n";
  char line[80];
  for (int i = 0; i < report.n; ++i) {
    std::snprintf(line, sizeof(line), "%d,%.17g\n", i, report.errors[i]);
    out << line;
  }
}

void write_error_json(std::ostream& out, const ErrorReport& report,
                      const std::vector<double>& thresholds, const std::vector<double>& pck) {
  char buffer[96];
  std::snprintf(buffer, sizeof(buffer), "{\"mean_x100\":%.17g,\"n\":%d,\"pck\":{",
                report.mean_x100, report.n);
  out << buffer;
  for (size_t t = 0; t < thresholds.size(); ++t) {
    std::snprintf(buffer, sizeof(buffer), "%s\"%g\":%.17g", t ? "," : "", thresholds[t], pck[t]);
    out << buffer;
  }
  out << "}}";
}

std::vector<BenchRow> bench_refinement(const std::vector<int>& sizes, const ZoomOutConfig& config,
                                       int repetitions, double budget_seconds) {
  if (repetitions < 1) throw ConfigError("repetitions must be positive");
  std::vector<BenchRow> rows;
  rows.reserve(sizes.size());

  for (const int size : sizes) {
    TriangleMesh mesh = make_icosphere(icosphere_frequency_for(size));
    const AreaVector areas = vertex_areas(mesh);
    const SparseOperator laplacian = cotangent_laplacian(mesh);
    const EigenBasis basis = compute_eigenbasis(laplacian, areas, config.k_final);
    const VertexMap init = identity_vertex_map(mesh.n());

    BenchRow row;
    row.size = size;
    row.actual_vertices = mesh.n();
    double total_seconds = 0.0;
    for (int rep = 0; rep < repetitions; ++rep) {
      memtrack::reset_window();
      const auto t0 = std::chrono::steady_clock::now();
      RefinementTrace trace = zoomout(init, basis, basis, config);
      const auto t1 = std::chrono::steady_clock::now();
      const auto stats = memtrack::stats();
      row.peak_bytes = std::max(row.peak_bytes, stats.window_peak_bytes);
      row.max_single_bytes = std::max(row.max_single_bytes, stats.max_single_bytes);
      const double elapsed = std::chrono::duration<double>(t1 - t0).count();
      total_seconds += elapsed;
      if (elapsed > budget_seconds)
        throw OutOfBudget("refinement at size " + std::to_string(size) + " took " +
                          std::to_string(elapsed) + " s");
      (void)trace;
    }
    row.seconds = total_seconds / repetitions;
    rows.push_back(row);
  }
  return rows;
}

void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows) {
  out << "size,seconds,peak_bytes\n";
  char line[96];
  for (const auto& row : rows) {
    std::snprintf(line, sizeof(line), "%d,%.6f,%llu\n", row.size, row.seconds,
                  static_cast<unsigned long long>(row.peak_bytes));
    out << line;
  }
}

}  // namespace specmap
