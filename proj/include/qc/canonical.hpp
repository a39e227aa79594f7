#pragma once

#include <array>

#include "qc/linalg.hpp"

namespace qc {

// Pose-normalized cloud: positions are (X - centroid) * V with V the
// eigenbasis of the positional covariance, eigenvalues descending. Features
// and labels ride along unchanged. The canonical pose is unique only up to
// per-axis sign flips; sign_variants() enumerates that orbit.
struct CanonicalCloud {
  PointCloud cloud;
  Eigen::Matrix3d basis;        // V, orthonormal columns
  Eigen::Vector3d eigenvalues;  // descending
  Eigen::Vector3d centroid;     // of the source positions
  bool degenerate = false;      // eigenvalue gap below threshold
};

struct SignVariant {
  Eigen::Vector3d signs;  // entries in {-1, +1}
  PointMatrix positions;
};

// Agreement between two canonical clouds: the sign vector minimizing the
// max-abs position difference, and that residual.
struct SignAgreement {
  Eigen::Vector3d signs;
  double residual = 0.0;
};

CanonicalCloud canonicalize(const PointCloud& cloud);

// All 8 per-axis sign combinations, enumerated as a binary counter over axes
// (x, y, z): index 0 is (+,+,+), index 1 is (+,+,-), ..., index 7 is (-,-,-).
std::array<SignVariant, 8> sign_variants(const CanonicalCloud& canonical);

// Throws InvalidInputError when the clouds have different point counts.
SignAgreement canonical_agreement(const CanonicalCloud& a,
                                  const CanonicalCloud& b);

}  // namespace qc
