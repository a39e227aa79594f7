#include "qc/canonical.hpp"

#include <limits>

namespace qc {

CanonicalCloud canonicalize(const PointCloud& cloud) {
  validate(cloud);
  if (cloud.size() == 0) throw InvalidInputError("canonicalize: empty cloud");

  EigenBasis basis = jacobi_eigen(covariance(cloud));

  CanonicalCloud out;
  out.centroid = cloud.positions.colwise().mean();
  out.basis = basis.vectors;
  out.eigenvalues = basis.values;
  out.degenerate = basis.degenerate;
  out.cloud = cloud;
  out.cloud.positions =
      (cloud.positions.rowwise() - out.centroid.transpose()) * basis.vectors;
  return out;
}

std::array<SignVariant, 8> sign_variants(const CanonicalCloud& canonical) {
  std::array<SignVariant, 8> variants;
  for (int i = 0; i < 8; ++i) {
    Eigen::Vector3d s{(i & 4) ? -1.0 : 1.0,
                      (i & 2) ? -1.0 : 1.0,
                      (i & 1) ? -1.0 : 1.0};
    variants[i].signs = s;
    variants[i].positions = canonical.cloud.positions * s.asDiagonal();
  }
  return variants;
}

SignAgreement canonical_agreement(const CanonicalCloud& a,
                                  const CanonicalCloud& b) {
  if (a.cloud.size() != b.cloud.size())
    throw InvalidInputError("canonical_agreement: point counts differ");
  if (a.cloud.size() == 0)
    throw InvalidInputError("canonical_agreement: empty clouds");

  SignAgreement best;
  best.residual = std::numeric_limits<double>::infinity();
  for (const SignVariant& variant : sign_variants(b)) {
    double residual =
        (a.cloud.positions - variant.positions).cwiseAbs().maxCoeff();
    if (residual < best.residual) {
      best.residual = residual;
      best.signs = variant.signs;
    }
  }
  return best;
}

}  // namespace qc
