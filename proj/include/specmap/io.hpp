#pragma once

#include <Eigen/Core>
#include <string>

#include "specmap/fmap.hpp"
#include "specmap/softmap.hpp"

namespace specmap {

// FMAT01 binary matrix: magic "FMAT01", u64 rows, u64 cols, f64 data
// row-major, little-endian.
void save_matrix(const std::string& path, const Eigen::Ref<const Eigen::MatrixXd>& m);
Eigen::MatrixXd load_matrix(const std::string& path);

// Vertex map text format: one 0-based source index per line, n2 lines.
// The loader validates indices against source_count.
void save_vertex_map(const std::string& path, const VertexMap& map);
VertexMap load_vertex_map(const std::string& path, int source_count);

// Functional map text format: "k2 k1" on the first line, then k2 rows of k1
// decimals with 17 significant digits.
void save_fmap_text(const std::string& path, const FunctionalMap& fmap);
FunctionalMap load_fmap_text(const std::string& path);

}  // namespace specmap
