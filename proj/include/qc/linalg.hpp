#pragma once

#include <Eigen/Dense>

#include "qc/cloud.hpp"

namespace qc {

// Symmetric 3x3 stored as the six unique upper-triangle entries, so symmetry
// is exact by construction.
struct SymMatrix3 {
  double a00 = 0, a01 = 0, a02 = 0, a11 = 0, a12 = 0, a22 = 0;

  static SymMatrix3 from_upper(const Eigen::Matrix3d& m) {
    return SymMatrix3{m(0, 0), m(0, 1), m(0, 2), m(1, 1), m(1, 2), m(2, 2)};
  }

  Eigen::Matrix3d matrix() const {
    Eigen::Matrix3d m;
    m << a00, a01, a02,
         a01, a11, a12,
         a02, a12, a22;
    return m;
  }

  double frobenius_norm() const { return matrix().norm(); }
};

// Eigenvalues sorted descending with matching orthonormal columns in vectors.
// degenerate is set when any eigenvalue pair is closer than
// 1e-9 * max(1, |lambda_1|).
struct EigenBasis {
  Eigen::Vector3d values;
  Eigen::Matrix3d vectors;
  bool degenerate = false;
};

inline constexpr double kDegeneracyRelTol = 1e-9;
inline constexpr double kJacobiTol = 1e-14;
inline constexpr int kJacobiMaxSweeps = 50;

// Orthogonal 3x3 with determinant -1. Construct via householder() or
// axis_flip(); both feed the validating constructor.
class ReflectionMatrix {
 public:
  explicit ReflectionMatrix(const Eigen::Matrix3d& m);
  const Eigen::Matrix3d& matrix() const { return f_; }

  // diag(+-1) with an odd number of -1 entries.
  static ReflectionMatrix axis_flip(bool flip_x, bool flip_y, bool flip_z);

 private:
  Eigen::Matrix3d f_;
};

// Covariance of point positions about their centroid (1/N normalization).
// Throws InvalidInputError on an empty cloud.
SymMatrix3 covariance(const PointCloud& cloud);

// Cyclic Jacobi rotations until the off-diagonal Frobenius norm falls below
// kJacobiTol * ||m||; throws NumericalError after kJacobiMaxSweeps sweeps.
EigenBasis jacobi_eigen(const SymMatrix3& m);

// I - 2 n n^T for the (renormalized) plane normal n. Throws on a zero normal.
ReflectionMatrix householder(const Eigen::Vector3d& normal);

// Positions become X * m^T; features and labels are carried unchanged.
PointCloud apply_transform(const PointCloud& cloud, const Eigen::Matrix3d& m);

}  // namespace qc
