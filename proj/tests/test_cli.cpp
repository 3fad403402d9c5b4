// End-to-end checks of the command-line tool. Each case shells out to the
// real binary with fixture files in a scratch directory.

#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "specmap/io.hpp"
#include "specmap/mesh.hpp"
#include "support/fixtures.hpp"

using namespace specmap;
namespace fx = specmap::testing;

namespace {

int g_failures = 0;

#define EXPECT(cond, what)                                              \
  do {                                                                  \
    if (cond) {                                                         \
      std::cout << "[ok] " << what << "\n";                             \
    } else {                                                            \
      std::cout << "[FAILED] " << what << " (" << #cond << ")\n";       \
      ++g_failures;                                                     \
    }                                                                   \
  } while (0)

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

RunResult run_cli(const std::string& args) {
  const std::string command = std::string(SPECMAP_CLI_PATH) + " " + args + " 2>&1";
  RunResult result;
  FILE* pipe = popen(command.c_str(), "r");
  if (!pipe) return result;
  std::array<char, 4096> buffer;
  while (size_t got = fread(buffer.data(), 1, buffer.size(), pipe))
    result.output.append(buffer.data(), got);
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

std::string write_sphere_obj(const fx::TempDir& dir, const std::string& name) {
  TriangleMesh sphere = make_icosphere(8);
  std::ostringstream obj;
  obj.precision(17);
  for (int v = 0; v < sphere.n(); ++v)
    obj << "v " << sphere.vertices(v, 0) << ' ' << sphere.vertices(v, 1) << ' '
        << sphere.vertices(v, 2) << '\n';
  for (int f = 0; f < sphere.face_count(); ++f)
    obj << "f " << sphere.faces(f, 0) + 1 << ' ' << sphere.faces(f, 1) + 1 << ' '
        << sphere.faces(f, 2) + 1 << '\n';
  const std::string path = dir.file(name);
  fx::write_file(path, obj.str());
  return path;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

int main() {
  fx::TempDir dir;
  const std::string sphere = write_sphere_obj(dir, "sphere.obj");
  const int n = 642;

  {
    // Self-matching recovers the identity almost everywhere; the second run
    // must reuse the eigenbasis cache.
    const std::string map_path = dir.file("self.txt");
    const std::string fmap_path = dir.file("self_fmap.txt");
    const std::string args = "match --src " + sphere + " --tgt " + sphere + " --out " +
                             map_path + " --fmap-out " + fmap_path +
                             " --k-init 10 --k-final 40 --step 10 --wks-basis 40 --p 16";
    RunResult first = run_cli(args);
    EXPECT(first.exit_code == 0, "match exits cleanly");
    EXPECT(first.output.find("cache miss") != std::string::npos, "first run misses the cache");

    VertexMap map = load_vertex_map(map_path, n);
    int identical = 0;
    for (int i = 0; i < map.n2(); ++i)
      if (map.indices[static_cast<size_t>(i)] == i) ++identical;
    EXPECT(identical >= n * 99 / 100, "self-match is the identity on >= 99% of vertices");

    FunctionalMap fmap = load_fmap_text(fmap_path);
    EXPECT(fmap.k1() == 40 && fmap.k2() == 40, "emitted functional map has the final size");

    RunResult second = run_cli(args);
    EXPECT(second.exit_code == 0, "cached match exits cleanly");
    EXPECT(second.output.find("cache hit") != std::string::npos, "second run hits the cache");
    EXPECT(slurp(map_path) == slurp(map_path), "map file readable");
  }

  {
    // Default flags emit a 130x130 functional map.
    const std::string args = "match --src " + sphere + " --tgt " + sphere + " --out " +
                             dir.file("default.txt") + " --fmap-out " +
                             dir.file("default_fmap.txt");
    RunResult result = run_cli(args);
    EXPECT(result.exit_code == 0, "default match exits cleanly");
    FunctionalMap fmap = load_fmap_text(dir.file("default_fmap.txt"));
    EXPECT(fmap.k1() == 130 && fmap.k2() == 130, "default functional map is 130x130");
  }

  {
    // refine from a stored map.
    VertexMap identity = identity_vertex_map(n);
    save_vertex_map(dir.file("init.txt"), identity);
    RunResult result = run_cli("refine --src " + sphere + " --tgt " + sphere +
                               " --init-map " + dir.file("init.txt") + " --out " +
                               dir.file("refined.txt") +
                               " --k-init 10 --k-final 30 --step 10");
    EXPECT(result.exit_code == 0, "refine exits cleanly");
    VertexMap refined = load_vertex_map(dir.file("refined.txt"), n);
    EXPECT(fx::exact_matches(refined, identity) == n, "refining the identity keeps it");
  }

  {
    // eval: identical maps score zero.
    VertexMap gt = identity_vertex_map(n);
    save_vertex_map(dir.file("gt.txt"), gt);
    RunResult result = run_cli("eval --pred " + dir.file("gt.txt") + " --gt " +
                               dir.file("gt.txt") + " --mesh " + sphere + " --pck 0.05,0.1");
    EXPECT(result.exit_code == 0, "eval exits cleanly");
    EXPECT(result.output.find("\"mean_x100\":0") != std::string::npos, "eval reports zero error");
    EXPECT(result.output.find("\"0.05\":1") != std::string::npos, "pck saturates at 1");
  }

  {
    // optimize on a small pair.
    RunResult result = run_cli(
        "optimize --src " + sphere + " --tgt " + sphere + " --out-prefix " + dir.file("opt") +
        " --steps 2 --p 8 --k-init 6 --k-final 12 --step 3 --wks-basis 40 --ramp 1");
    EXPECT(result.exit_code == 0, "optimize exits cleanly");
    EXPECT(!slurp(dir.file("opt_loss.csv")).empty(), "loss csv written");
    EXPECT(!slurp(dir.file("opt_map.txt")).empty(), "optimized map written");
    EXPECT(!slurp(dir.file("opt_f1.fmat")).empty(), "optimized features written");
  }

  {
    // bench smoke run.
    RunResult result = run_cli("bench --sizes 300 --reps 1 --k-init 6 --k-final 12 --step 3");
    EXPECT(result.exit_code == 0, "bench exits cleanly");
    EXPECT(result.output.find("size,seconds,peak_bytes") != std::string::npos,
           "bench prints the csv header");
  }

  {
    // Machine-parsable error prefixes.
    RunResult missing = run_cli("match --src /nonexistent.obj --tgt /nonexistent.obj --out x");
    EXPECT(missing.exit_code != 0, "missing input fails");
    EXPECT(missing.output.find("E_IO:") != std::string::npos, "io errors carry E_IO");

    fx::write_file(dir.file("bad.off"), "OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 9\n");
    RunResult bad = run_cli("match --src " + dir.file("bad.off") + " --tgt " + sphere +
                            " --out " + dir.file("x.txt"));
    EXPECT(bad.exit_code != 0, "malformed mesh fails");
    EXPECT(bad.output.find("E_PARSE:") != std::string::npos, "parse errors carry E_PARSE");

    RunResult badk = run_cli("match --src " + sphere + " --tgt " + sphere + " --out " +
                             dir.file("y.txt") + " --k-init 50 --k-final 40");
    EXPECT(badk.exit_code != 0, "inconsistent sizes fail");
    EXPECT(badk.output.find("E_CONFIG:") != std::string::npos, "config errors carry E_CONFIG");
  }

  if (g_failures == 0) {
    std::cout << "all cli checks passed\n";
    return 0;
  }
  std::cout << g_failures << " cli checks failed\n";
  return 1;
}
