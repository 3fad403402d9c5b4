#pragma once

#include <Eigen/Core>

#include "specmap/mesh.hpp"
#include "specmap/spectral.hpp"

namespace specmap {

struct DescriptorSet {
  enum class Provenance { Wks, External };

  Eigen::MatrixXd values;  // n x q, one descriptor function per column
  Provenance provenance = Provenance::External;

  int count() const { return static_cast<int>(values.cols()); }
};

// Wave kernel signature. Energies are spaced uniformly on
// [log l_min + 2s, log l_max - 2s] where l_min/l_max are the first nonzero
// and last eigenvalues and s = variance_scale * (log l_max - log l_min) / q.
// Each column is
//   wks(x, e) = sum_k phi_k(x)^2 exp(-(e - log l_k)^2 / (2 s^2)) / (sum_k exp(...)),
// with the zero eigenvalue excluded. Throws InsufficientSpectrum when fewer
// than two nonzero eigenvalues are available.
DescriptorSet wks(const EigenBasis& basis, int q, double variance_scale = 7.0);

// Scales every column to unit area-weighted L2 norm: sum_v A_v f(v)^2 = 1.
// Idempotent; throws ZeroColumn on an identically zero column.
DescriptorSet normalize_l2(const DescriptorSet& descriptors, const AreaVector& areas);

}  // namespace specmap
