#include "specmap/descriptors.hpp"

#include <cmath>

namespace specmap {

DescriptorSet wks(const EigenBasis& basis, int q, double variance_scale) {
  if (q < 2) throw ConfigError("wks needs at least two energies");
  if (!(variance_scale > 0.0)) throw ConfigError("wks variance scale must be positive");

  const Eigen::VectorXd lambda = basis.lambda();
  const double lambda_max = lambda[lambda.size() - 1];
  const double cutoff = std::max(1e-12, 1e-8 * lambda_max);
  std::vector<int> kept;
  for (Eigen::Index k = 0; k < lambda.size(); ++k)
    if (lambda[k] > cutoff) kept.push_back(static_cast<int>(k));
  if (kept.size() < 2)
    throw InsufficientSpectrum("wks needs at least two nonzero eigenvalues");

  const double log_min = std::log(lambda[kept.front()]);
  const double log_max = std::log(lambda[kept.back()]);
  const double sigma_w = variance_scale * (log_max - log_min) / q;
  if (!(sigma_w > 0.0))
    throw InsufficientSpectrum("wks energy range is degenerate");
  const double e_min = log_min + 2.0 * sigma_w;
  const double e_max = log_max - 2.0 * sigma_w;

  Eigen::VectorXd energies(q);
  for (int e = 0; e < q; ++e)
    energies[e] = e_min + (e_max - e_min) * e / (q - 1.0);

  const Eigen::Index kk = static_cast<Eigen::Index>(kept.size());
  Eigen::MatrixXd coef(kk, q);
  for (Eigen::Index k = 0; k < kk; ++k) {
    const double log_l = std::log(lambda[kept[static_cast<size_t>(k)]]);
    for (int e = 0; e < q; ++e) {
      const double gap = (energies[e] - log_l) / sigma_w;
      coef(k, e) = std::exp(-0.5 * gap * gap);
    }
  }

  Eigen::MatrixXd phi_sq(basis.n(), kk);
  for (Eigen::Index k = 0; k < kk; ++k)
    phi_sq.col(k) = basis.phi().col(kept[static_cast<size_t>(k)]).array().square();

  DescriptorSet out;
  out.provenance = DescriptorSet::Provenance::Wks;
  out.values.noalias() = phi_sq * coef;
  const Eigen::VectorXd totals = coef.colwise().sum();
  for (int e = 0; e < q; ++e) out.values.col(e) /= totals[e];
  return out;
}

DescriptorSet normalize_l2(const DescriptorSet& descriptors, const AreaVector& areas) {
  if (descriptors.values.rows() != areas.lumped.size())
    throw DimensionMismatch("descriptor rows and area entries disagree");
  if (descriptors.count() < 1) throw DimensionMismatch("empty descriptor set");

  DescriptorSet out = descriptors;
  for (int c = 0; c < descriptors.count(); ++c) {
    const double norm_sq = descriptors.values.col(c).cwiseAbs2().dot(areas.lumped);
    if (!(norm_sq > 1e-300))
      throw ZeroColumn("descriptor column " + std::to_string(c) + " is zero");
    out.values.col(c) /= std::sqrt(norm_sq);
  }
  return out;
}

}  // namespace specmap
