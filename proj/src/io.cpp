#include "specmap/io.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace specmap {

namespace {

constexpr char kMatrixMagic[6] = {'F', 'M', 'A', 'T', '0', '1'};

}  // namespace

void save_matrix(const std::string& path, const Eigen::Ref<const Eigen::MatrixXd>& m) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  out.write(kMatrixMagic, sizeof(kMatrixMagic));
  const std::uint64_t rows = static_cast<std::uint64_t>(m.rows());
  const std::uint64_t cols = static_cast<std::uint64_t>(m.cols());
  out.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
  out.write(reinterpret_cast<const char*>(&cols), sizeof(cols));
  // Row-major on disk.
  std::vector<double> row(static_cast<size_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) row[static_cast<size_t>(c)] = m(r, c);
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(sizeof(double) * row.size()));
  }
  if (!out) throw IoError("failed writing '" + path + "'");
}

Eigen::MatrixXd load_matrix(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  char magic[sizeof(kMatrixMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMatrixMagic, sizeof(magic)) != 0)
    throw ParseError("'" + path + "' is not an FMAT01 matrix");
  std::uint64_t rows = 0, cols = 0;
  in.read(reinterpret_cast<char*>(&rows), sizeof(rows));
  in.read(reinterpret_cast<char*>(&cols), sizeof(cols));
  if (!in || rows == 0 || cols == 0) throw ParseError("'" + path + "' has empty dimensions");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  std::vector<double> row(static_cast<size_t>(cols));
  for (std::uint64_t r = 0; r < rows; ++r) {
    in.read(reinterpret_cast<char*>(row.data()),
            static_cast<std::streamsize>(sizeof(double) * row.size()));
    if (!in) throw ParseError("'" + path + "' is truncated");
    for (std::uint64_t c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[static_cast<size_t>(c)];
  }
  return m;
}

void save_vertex_map(const std::string& path, const VertexMap& map) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  for (const int index : map.indices) out << index << '\n';
  if (!out) throw IoError("failed writing '" + path + "'");
}

VertexMap load_vertex_map(const std::string& path, int source_count) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  VertexMap map;
  map.source_count = source_count;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    int index;
    try {
      index = std::stoi(line);
    } catch (const std::exception&) {
      throw ParseError("'" + path + "': bad index line '" + line + "'");
    }
    if (index < 0 || index >= source_count)
      throw ParseError("'" + path + "': index " + std::to_string(index) + " out of range");
    map.indices.push_back(index);
  }
  if (map.indices.empty()) throw ParseError("'" + path + "' contains no indices");
  return map;
}

void save_fmap_text(const std::string& path, const FunctionalMap& fmap) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << fmap.k2() << ' ' << fmap.k1() << '\n';
  char number[40];
  for (int i = 0; i < fmap.k2(); ++i) {
    for (int j = 0; j < fmap.k1(); ++j) {
      std::snprintf(number, sizeof(number), "%.17g", fmap.c(i, j));
      out << number << (j + 1 == fmap.k1() ? '\n' : ' ');
    }
  }
  if (!out) throw IoError("failed writing '" + path + "'");
}

FunctionalMap load_fmap_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  int k2 = 0, k1 = 0;
  if (!(in >> k2 >> k1) || k2 < 1 || k1 < 1)
    throw ParseError("'" + path + "': bad size header");
  FunctionalMap fmap;
  fmap.c.resize(k2, k1);
  for (int i = 0; i < k2; ++i)
    for (int j = 0; j < k1; ++j)
      if (!(in >> fmap.c(i, j))) throw ParseError("'" + path + "' is truncated");
  return fmap;
}

}  // namespace specmap
