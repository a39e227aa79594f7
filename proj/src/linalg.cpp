#include "qc/linalg.hpp"

#include <cmath>

namespace qc {

ReflectionMatrix::ReflectionMatrix(const Eigen::Matrix3d& m) : f_(m) {
  if (!m.allFinite()) throw NumericalError("reflection: non-finite matrix");
  double ortho = (m.transpose() * m - Eigen::Matrix3d::Identity()).norm();
  if (ortho > 1e-12)
    throw InvalidInputError("reflection: matrix is not orthogonal");
  if (std::abs(m.determinant() + 1.0) > 1e-10)
    throw InvalidInputError("reflection: determinant is not -1");
}

ReflectionMatrix ReflectionMatrix::axis_flip(bool flip_x, bool flip_y, bool flip_z) {
  if ((int(flip_x) + int(flip_y) + int(flip_z)) % 2 == 0)
    throw InvalidInputError("axis_flip: an even number of flips is a rotation, not a reflection");
  Eigen::Vector3d d{flip_x ? -1.0 : 1.0, flip_y ? -1.0 : 1.0, flip_z ? -1.0 : 1.0};
  return ReflectionMatrix(d.asDiagonal().toDenseMatrix());
}

SymMatrix3 covariance(const PointCloud& cloud) {
  validate(cloud);
  const Eigen::Index n = cloud.size();
  if (n == 0) throw InvalidInputError("covariance: empty cloud");
  Eigen::RowVector3d mean = cloud.positions.colwise().mean();
  PointMatrix centered = cloud.positions.rowwise() - mean;
  Eigen::Matrix3d cov =
      (centered.transpose() * centered) / static_cast<double>(n);
  return SymMatrix3::from_upper(cov);
}

namespace {

double off_diagonal_norm(const Eigen::Matrix3d& a) {
  return std::sqrt(2.0 * (a(0, 1) * a(0, 1) + a(0, 2) * a(0, 2) +
                          a(1, 2) * a(1, 2)));
}

// One Jacobi rotation zeroing a(p,q); accumulates into v.
void rotate(Eigen::Matrix3d& a, Eigen::Matrix3d& v, int p, int q) {
  if (a(p, q) == 0.0) return;
  double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
  double t = (theta >= 0 ? 1.0 : -1.0) /
             (std::abs(theta) + std::sqrt(theta * theta + 1.0));
  double c = 1.0 / std::sqrt(t * t + 1.0);
  double s = t * c;

  Eigen::Matrix3d j = Eigen::Matrix3d::Identity();
  j(p, p) = c;
  j(q, q) = c;
  j(p, q) = s;
  j(q, p) = -s;
  a = j.transpose() * a * j;
  a(p, q) = a(q, p) = 0.0;  // zero by construction; clear residual round-off
  v = v * j;
}

}  // namespace

EigenBasis jacobi_eigen(const SymMatrix3& m) {
  Eigen::Matrix3d a = m.matrix();
  if (!a.allFinite()) throw NumericalError("jacobi_eigen: non-finite input");
  const double scale = a.norm();
  const double tol = kJacobiTol * scale;
  Eigen::Matrix3d v = Eigen::Matrix3d::Identity();

  int sweep = 0;
  while (off_diagonal_norm(a) > tol) {
    if (sweep++ >= kJacobiMaxSweeps)
      throw NumericalError("jacobi_eigen: no convergence in 50 sweeps");
    rotate(a, v, 0, 1);
    rotate(a, v, 0, 2);
    rotate(a, v, 1, 2);
  }

  EigenBasis basis;
  basis.values = a.diagonal();
  basis.vectors = v;
  // Sort descending, carrying columns.
  for (int i = 0; i < 2; ++i) {
    for (int j = i + 1; j < 3; ++j) {
      if (basis.values(j) > basis.values(i)) {
        std::swap(basis.values(i), basis.values(j));
        basis.vectors.col(i).swap(basis.vectors.col(j));
      }
    }
  }
  const double gap_tol =
      kDegeneracyRelTol * std::max(1.0, std::abs(basis.values(0)));
  basis.degenerate = (basis.values(0) - basis.values(1) <= gap_tol) ||
                     (basis.values(1) - basis.values(2) <= gap_tol);
  return basis;
}

ReflectionMatrix householder(const Eigen::Vector3d& normal) {
  double norm = normal.norm();
  if (!(norm > 1e-12) || !normal.allFinite())
    throw InvalidInputError("householder: zero or non-finite normal");
  Eigen::Vector3d n = normal / norm;
  Eigen::Matrix3d f =
      Eigen::Matrix3d::Identity() - 2.0 * (n * n.transpose());
  return ReflectionMatrix(f);
}

PointCloud apply_transform(const PointCloud& cloud, const Eigen::Matrix3d& m) {
  validate(cloud);
  if (!m.allFinite()) throw NumericalError("apply_transform: non-finite matrix");
  PointCloud out = cloud;
  out.positions = cloud.positions * m.transpose();
  return out;
}

}  // namespace qc
