#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "specmap/descriptors.hpp"
#include "specmap/eval.hpp"
#include "specmap/io.hpp"
#include "specmap/optim.hpp"
#include "specmap/parallel.hpp"
#include "specmap/zoomout.hpp"

namespace {

using namespace specmap;

struct ZoomFlags {
  int k_init = 30;
  int k_final = 130;
  int step = 10;
  double sigma = 1e-2;
  std::string mode = "hard";

  ZoomOutConfig config() const {
    ZoomOutConfig cfg;
    cfg.k_init = k_init;
    cfg.k_final = k_final;
    cfg.step = step;
    cfg.sigma = sigma;
    if (mode == "hard") cfg.mode = ZoomOutConfig::Mode::Hard;
    else if (mode == "soft") cfg.mode = ZoomOutConfig::Mode::Soft;
    else throw ConfigError("mode must be 'hard' or 'soft'");
    return cfg;
  }
};

void add_zoom_flags(CLI::App* cmd, ZoomFlags& flags) {
  cmd->add_option("--k-init", flags.k_init, "Initial spectral size")->capture_default_str();
  cmd->add_option("--k-final", flags.k_final, "Final spectral size")->capture_default_str();
  cmd->add_option("--step", flags.step, "Spectral step per iteration")->capture_default_str();
  cmd->add_option("--sigma", flags.sigma, "Soft-map blur parameter")->capture_default_str();
  cmd->add_option("--mode", flags.mode, "Refinement mode: hard | soft")->capture_default_str();
}

struct ShapeData {
  TriangleMesh mesh;
  AreaVector areas;
  EigenBasis basis;
};

// Loads or computes a basis of at least k_needed pairs. Sidecar cache files
// are keyed by a content hash of the mesh and the basis size; an explicit
// cache path short-circuits the key.
ShapeData load_shape(const std::string& mesh_path, int k_needed,
                     const std::string& explicit_cache, const std::string& cache_dir) {
  ShapeData shape;
  shape.mesh = load_mesh(mesh_path);
  shape.areas = vertex_areas(shape.mesh);

  std::string cache_path = explicit_cache;
  if (cache_path.empty()) {
    char key[32];
    std::snprintf(key, sizeof(key), "%016llx",
                  static_cast<unsigned long long>(mesh_content_hash(shape.mesh)));
    std::filesystem::path base(mesh_path);
    std::filesystem::path dir =
        cache_dir.empty() ? base.parent_path() : std::filesystem::path(cache_dir);
    cache_path = (dir / (base.stem().string() + "-" + key + "-k" + std::to_string(k_needed) +
                         ".specb"))
                     .string();
  }

  if (std::filesystem::exists(cache_path)) {
    try {
      EigenBasis cached = load_eigenbasis(cache_path);
      if (cached.n() == shape.mesh.n() && cached.size() >= k_needed) {
        std::cerr << "cache hit: " << cache_path << "\n";
        shape.basis = cached;
        return shape;
      }
      std::cerr << "cache mismatch, recomputing: " << cache_path << "\n";
    } catch (const Error& error) {
      std::cerr << "cache unreadable (" << error.what() << "), recomputing\n";
    }
  } else {
    std::cerr << "cache miss: " << cache_path << "\n";
  }

  const SparseOperator laplacian = cotangent_laplacian(shape.mesh);
  shape.basis = compute_eigenbasis(laplacian, shape.areas, k_needed);
  save_eigenbasis(cache_path, shape.basis);
  std::cerr << "cache written: " << cache_path << "\n";
  return shape;
}

Eigen::MatrixXd wks_features(const ShapeData& shape, int wks_basis, int wks_count, int p) {
  const int k = std::min(wks_basis, shape.basis.size());
  DescriptorSet descriptors = wks(shape.basis.truncated(k), wks_count);
  descriptors = normalize_l2(descriptors, shape.areas);
  if (descriptors.count() < p)
    throw ConfigError("fewer descriptors than requested feature columns");
  return descriptors.values.leftCols(p);
}

void write_map_outputs(const RefinementTrace& trace, const std::string& map_out,
                       const std::string& fmap_out) {
  VertexMap map = std::holds_alternative<VertexMap>(trace.final_map)
                      ? trace.final_vertex_map()
                      : extract_pointwise(trace.final_soft_map());
  save_vertex_map(map_out, map);
  std::cerr << "map written: " << map_out << "\n";
  if (!fmap_out.empty()) {
    save_fmap_text(fmap_out, trace.final_fmap);
    std::cerr << "functional map written: " << fmap_out << "\n";
  }
}

std::vector<double> parse_thresholds(const std::string& csv) {
  std::vector<double> out;
  std::string token;
  std::istringstream stream(csv);
  while (std::getline(stream, token, ',')) {
    if (token.empty()) continue;
    out.push_back(std::stod(token));
  }
  return out;
}

std::vector<int> parse_sizes(const std::string& csv) {
  std::vector<int> out;
  std::string token;
  std::istringstream stream(csv);
  while (std::getline(stream, token, ',')) {
    if (token.empty()) continue;
    out.push_back(std::stoi(token));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Spectral shape correspondence from memory-scalable soft maps.\n"
      "Pointwise maps send the target shape onto the source shape; vertex\n"
      "map files list one 0-based source index per target vertex."};
  app.require_subcommand(1);

  int threads = 0;
  unsigned long long seed = 0;
  app.add_option("--threads", threads, "Worker threads (0 = hardware)")->capture_default_str();
  app.add_option("--seed", seed, "Seed for randomized internals")->capture_default_str();

  // precompute
  auto* precompute = app.add_subcommand("precompute", "Compute and store an eigenbasis cache");
  std::string pre_mesh, pre_out;
  int pre_k = 200;
  precompute->add_option("--mesh", pre_mesh, "Input mesh (off/obj/ply)")->required();
  precompute->add_option("--k", pre_k, "Number of eigenpairs")->capture_default_str();
  precompute->add_option("--out", pre_out, "Cache file to write")->required();

  // match
  auto* match = app.add_subcommand("match", "Descriptor-initialized correspondence");
  std::string match_src, match_tgt, match_out, match_fmap_out, match_src_cache, match_tgt_cache,
      match_cache_dir;
  ZoomFlags match_zoom;
  int match_p = 32, match_wks_basis = 128, match_wks_count = 128;
  match->add_option("--src", match_src, "Source shape (the map's codomain)")->required();
  match->add_option("--tgt", match_tgt, "Target shape (the map's domain)")->required();
  match->add_option("--out", match_out, "Output vertex map")->required();
  match->add_option("--fmap-out", match_fmap_out, "Optional final functional map");
  add_zoom_flags(match, match_zoom);
  match->add_option("--p", match_p, "Feature columns used for the initial map")
      ->capture_default_str();
  match->add_option("--wks-basis", match_wks_basis, "Eigenfunctions feeding the descriptors")
      ->capture_default_str();
  match->add_option("--wks-count", match_wks_count, "Number of descriptor energies")
      ->capture_default_str();
  match->add_option("--src-cache", match_src_cache, "Explicit eigenbasis cache for --src");
  match->add_option("--tgt-cache", match_tgt_cache, "Explicit eigenbasis cache for --tgt");
  match->add_option("--cache-dir", match_cache_dir, "Directory for sidecar caches");

  // refine
  auto* refine = app.add_subcommand("refine", "Refine an existing vertex map");
  std::string refine_src, refine_tgt, refine_init, refine_out, refine_fmap_out, refine_src_cache,
      refine_tgt_cache, refine_cache_dir;
  ZoomFlags refine_zoom;
  refine->add_option("--src", refine_src, "Source shape (the map's codomain)")->required();
  refine->add_option("--tgt", refine_tgt, "Target shape (the map's domain)")->required();
  refine->add_option("--init-map", refine_init, "Initial vertex map")->required();
  refine->add_option("--out", refine_out, "Output vertex map")->required();
  refine->add_option("--fmap-out", refine_fmap_out, "Optional final functional map");
  add_zoom_flags(refine, refine_zoom);
  refine->add_option("--src-cache", refine_src_cache, "Explicit eigenbasis cache for --src");
  refine->add_option("--tgt-cache", refine_tgt_cache, "Explicit eigenbasis cache for --tgt");
  refine->add_option("--cache-dir", refine_cache_dir, "Directory for sidecar caches");

  // optimize
  auto* optimize = app.add_subcommand("optimize", "Directly optimize per-vertex features");
  std::string opt_src, opt_tgt, opt_prefix, opt_src_cache, opt_tgt_cache, opt_cache_dir;
  ZoomFlags opt_zoom;
  opt_zoom.k_init = 10;
  opt_zoom.k_final = 40;
  opt_zoom.mode = "soft";
  int opt_steps = 200, opt_p = 32, opt_ramp = 100, opt_wks_basis = 128, opt_wks_count = 128;
  double opt_lr = 1e-3, opt_w_orth = 1.0, opt_w_lap = 1e2, opt_consist_start = 1e-4,
         opt_consist_end = 1e-1;
  optimize->add_option("--src", opt_src, "Source shape (the map's codomain)")->required();
  optimize->add_option("--tgt", opt_tgt, "Target shape (the map's domain)")->required();
  optimize->add_option("--out-prefix", opt_prefix, "Prefix for output artifacts")->required();
  add_zoom_flags(optimize, opt_zoom);
  optimize->add_option("--steps", opt_steps, "Adam steps")->capture_default_str();
  optimize->add_option("--lr", opt_lr, "Learning rate")->capture_default_str();
  optimize->add_option("--p", opt_p, "Feature columns")->capture_default_str();
  optimize->add_option("--w-orth", opt_w_orth, "Orthogonality weight")->capture_default_str();
  optimize->add_option("--w-lap", opt_w_lap, "Commutativity weight")->capture_default_str();
  optimize->add_option("--consist-start", opt_consist_start, "Initial consistency weight")
      ->capture_default_str();
  optimize->add_option("--consist-end", opt_consist_end, "Final consistency weight")
      ->capture_default_str();
  optimize->add_option("--ramp", opt_ramp, "Steps over which the consistency weight ramps")
      ->capture_default_str();
  optimize->add_option("--wks-basis", opt_wks_basis, "Eigenfunctions feeding the descriptors")
      ->capture_default_str();
  optimize->add_option("--wks-count", opt_wks_count, "Number of descriptor energies")
      ->capture_default_str();
  optimize->add_option("--src-cache", opt_src_cache, "Explicit eigenbasis cache for --src");
  optimize->add_option("--tgt-cache", opt_tgt_cache, "Explicit eigenbasis cache for --tgt");
  optimize->add_option("--cache-dir", opt_cache_dir, "Directory for sidecar caches");

  // eval
  auto* evaluate = app.add_subcommand("eval", "Geodesic error of a map against ground truth");
  std::string eval_pred, eval_gt, eval_mesh, eval_pck = "0.01,0.025,0.05,0.1", eval_csv;
  evaluate->add_option("--pred", eval_pred, "Predicted vertex map")->required();
  evaluate->add_option("--gt", eval_gt, "Ground-truth vertex map")->required();
  evaluate->add_option("--mesh", eval_mesh, "Codomain mesh (shape 1)")->required();
  evaluate->add_option("--pck", eval_pck, "Comma-separated thresholds")->capture_default_str();
  evaluate->add_option("--csv-out", eval_csv, "Optional per-vertex error CSV");

  // bench
  auto* bench = app.add_subcommand("bench", "Refinement speed/memory benchmark");
  std::string bench_sizes = "5000,20000,100000";
  int bench_reps = 3;
  double bench_budget = 1e9;
  ZoomFlags bench_zoom;
  bench->add_option("--sizes", bench_sizes, "Comma-separated vertex counts")
      ->capture_default_str();
  bench->add_option("--reps", bench_reps, "Repetitions per size")->capture_default_str();
  bench->add_option("--budget", bench_budget, "Wall-time cap per refinement (s)")
      ->capture_default_str();
  add_zoom_flags(bench, bench_zoom);

  CLI11_PARSE(app, argc, argv);

  try {
    if (threads > 0) set_thread_count(threads);
    set_random_seed(seed);

    if (precompute->parsed()) {
      TriangleMesh mesh = load_mesh(pre_mesh);
      AreaVector areas = vertex_areas(mesh);
      SparseOperator laplacian = cotangent_laplacian(mesh);
      EigenBasis basis = compute_eigenbasis(laplacian, areas, pre_k);
      save_eigenbasis(pre_out, basis);
      std::cerr << "cache written: " << pre_out << "\n";
    } else if (match->parsed()) {
      ZoomOutConfig cfg = match_zoom.config();
      const int k_needed = std::max(cfg.k_final, match_wks_basis);
      ShapeData src = load_shape(match_src, k_needed, match_src_cache, match_cache_dir);
      ShapeData tgt = load_shape(match_tgt, k_needed, match_tgt_cache, match_cache_dir);
      Eigen::MatrixXd f1 = wks_features(src, match_wks_basis, match_wks_count, match_p);
      Eigen::MatrixXd f2 = wks_features(tgt, match_wks_basis, match_wks_count, match_p);
      VertexMap init;
      init.source_count = src.mesh.n();
      init.indices = nearest_rows(f1, f2);
      std::cerr << "initial map from " << match_p << " descriptor columns\n";
      RefinementTrace trace = zoomout(init, src.basis, tgt.basis, cfg);
      write_map_outputs(trace, match_out, match_fmap_out);
    } else if (refine->parsed()) {
      ZoomOutConfig cfg = refine_zoom.config();
      ShapeData src = load_shape(refine_src, cfg.k_final, refine_src_cache, refine_cache_dir);
      ShapeData tgt = load_shape(refine_tgt, cfg.k_final, refine_tgt_cache, refine_cache_dir);
      VertexMap init = load_vertex_map(refine_init, src.mesh.n());
      if (init.n2() != tgt.mesh.n())
        throw DimensionMismatch("initial map length differs from the target vertex count");
      RefinementTrace trace = zoomout(init, src.basis, tgt.basis, cfg);
      write_map_outputs(trace, refine_out, refine_fmap_out);
    } else if (optimize->parsed()) {
      OptimConfig cfg;
      cfg.zoomout = opt_zoom.config();
      cfg.zoomout.mode = ZoomOutConfig::Mode::Soft;
      cfg.steps = opt_steps;
      cfg.learning_rate = opt_lr;
      cfg.feature_count = opt_p;
      cfg.w_orth = opt_w_orth;
      cfg.w_lap = opt_w_lap;
      cfg.consist.start = opt_consist_start;
      cfg.consist.end = opt_consist_end;
      cfg.consist.ramp_steps = opt_ramp;
      const int k_needed = std::max(cfg.zoomout.k_final, opt_wks_basis);
      ShapeData src = load_shape(opt_src, k_needed, opt_src_cache, opt_cache_dir);
      ShapeData tgt = load_shape(opt_tgt, k_needed, opt_tgt_cache, opt_cache_dir);
      DescriptorSet d1 = normalize_l2(
          wks(src.basis.truncated(std::min(opt_wks_basis, src.basis.size())), opt_wks_count),
          src.areas);
      DescriptorSet d2 = normalize_l2(
          wks(tgt.basis.truncated(std::min(opt_wks_basis, tgt.basis.size())), opt_wks_count),
          tgt.areas);
      std::vector<LossRecord> history;
      try {
        OptimResult result = optimize_features(src.basis, tgt.basis, d1, d2, cfg);
        history = result.history;
        save_matrix(opt_prefix + "_f1.fmat", result.f1);
        save_matrix(opt_prefix + "_f2.fmat", result.f2);
        write_map_outputs(result.trace, opt_prefix + "_map.txt", opt_prefix + "_fmap.txt");
        std::ofstream csv(opt_prefix + "_loss.csv");
        write_loss_csv(csv, result.history);
        std::cerr << "loss history written: " << opt_prefix << "_loss.csv\n";
      } catch (const NonFiniteLoss& error) {
        std::ofstream csv(opt_prefix + "_loss.csv");
        write_loss_csv(csv, error.history());
        throw;
      }
    } else if (evaluate->parsed()) {
      TriangleMesh mesh = load_mesh(eval_mesh);
      VertexMap pred = load_vertex_map(eval_pred, mesh.n());
      VertexMap gt = load_vertex_map(eval_gt, mesh.n());
      ErrorReport report = mean_geodesic_error(pred, gt, mesh);
      const std::vector<double> thresholds = parse_thresholds(eval_pck);
      const std::vector<double> pck = pck_curve(report, thresholds);
      write_error_json(std::cout, report, thresholds, pck);
      std::cout << "\n";
      if (!eval_csv.empty()) {
        std::ofstream csv(eval_csv);
        write_error_csv(csv, report);
      }
    } else if (bench->parsed()) {
      std::vector<BenchRow> rows =
          bench_refinement(parse_sizes(bench_sizes), bench_zoom.config(), bench_reps,
                           bench_budget);
      write_bench_csv(std::cout, rows);
    }
  } catch (const Error& error) {
    std::cerr << error.code() << ": " << error.what() << "\n";
    return 1;
  } catch (const std::exception& error) {
    std::cerr << "E_INTERNAL: " << error.what() << "\n";
    return 1;
  }
  return 0;
}
