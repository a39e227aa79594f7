#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "qc/linalg.hpp"
#include "qc/rng.hpp"

using namespace qc;

namespace {

PointCloud cloud_from_rows(std::initializer_list<Eigen::Vector3d> rows) {
  PointCloud cloud;
  cloud.positions.resize(static_cast<Eigen::Index>(rows.size()), 3);
  Eigen::Index i = 0;
  for (const Eigen::Vector3d& row : rows)
    cloud.positions.row(i++) = row.transpose();
  cloud.features.resize(cloud.positions.rows(), 0);
  return cloud;
}

PointCloud random_cloud(Rng& rng, Eigen::Index n,
                        const Eigen::Vector3d& scales) {
  PointCloud cloud;
  cloud.positions.resize(n, 3);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < 3; ++j)
      cloud.positions(i, j) = rng.normal() * scales(j);
  cloud.features.resize(n, 0);
  return cloud;
}

// Independent closed-form eigenvalues of a symmetric 3x3 via the
// trigonometric solution of the characteristic cubic.
Eigen::Vector3d eigenvalues_oracle(const Eigen::Matrix3d& a) {
  const double p1 = a(0, 1) * a(0, 1) + a(0, 2) * a(0, 2) + a(1, 2) * a(1, 2);
  Eigen::Vector3d eig;
  if (p1 == 0.0) {
    eig << a(0, 0), a(1, 1), a(2, 2);
  } else {
    const double q = a.trace() / 3.0;
    const double p2 = (a(0, 0) - q) * (a(0, 0) - q) +
                      (a(1, 1) - q) * (a(1, 1) - q) +
                      (a(2, 2) - q) * (a(2, 2) - q) + 2.0 * p1;
    const double p = std::sqrt(p2 / 6.0);
    const Eigen::Matrix3d b = (a - q * Eigen::Matrix3d::Identity()) / p;
    const double r = std::clamp(b.determinant() / 2.0, -1.0, 1.0);
    const double phi = std::acos(r) / 3.0;
    eig(0) = q + 2.0 * p * std::cos(phi);
    eig(2) = q + 2.0 * p * std::cos(phi + 2.0 * M_PI / 3.0);
    eig(1) = 3.0 * q - eig(0) - eig(2);
  }
  std::sort(eig.data(), eig.data() + 3, std::greater<double>());
  return eig;
}

}  // namespace

TEST_SUITE("linalg") {
  TEST_CASE("covariance of the unit cross") {
    const PointCloud cloud = cloud_from_rows({{1, 0, 0},
                                              {-1, 0, 0},
                                              {0, 1, 0},
                                              {0, -1, 0}});
    const Eigen::Matrix3d cov = covariance(cloud).matrix();
    Eigen::Matrix3d expected = Eigen::Matrix3d::Zero();
    expected(0, 0) = 0.5;
    expected(1, 1) = 0.5;
    CHECK((cov - expected).cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("covariance ignores translation") {
    Rng rng(7);
    PointCloud cloud = random_cloud(rng, 40, {2.0, 1.0, 0.5});
    const Eigen::Matrix3d before = covariance(cloud).matrix();
    cloud.positions.rowwise() += Eigen::RowVector3d(3.0, -7.0, 11.0);
    const Eigen::Matrix3d after = covariance(cloud).matrix();
    CHECK((before - after).cwiseAbs().maxCoeff() < 1e-12);
  }

  TEST_CASE("covariance rejects an empty cloud") {
    PointCloud empty;
    empty.positions.resize(0, 3);
    empty.features.resize(0, 0);
    CHECK_THROWS_AS(covariance(empty), InvalidInputError);
  }

  TEST_CASE("jacobi eigenvalues match the closed-form cubic") {
    Rng rng(13);
    for (int trial = 0; trial < 200; ++trial) {
      Eigen::Matrix3d m;
      for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j) m(i, j) = m(j, i) = rng.uniform(-5, 5);
      const SymMatrix3 sym = SymMatrix3::from_upper(m);
      const EigenBasis basis = jacobi_eigen(sym);
      const Eigen::Vector3d oracle = eigenvalues_oracle(m);
      const double scale = std::max(1.0, m.norm());
      CHECK((basis.values - oracle).cwiseAbs().maxCoeff() < 1e-10 * scale);
      // descending order
      CHECK(basis.values(0) >= basis.values(1));
      CHECK(basis.values(1) >= basis.values(2));
      // orthonormal eigenvectors solving the eigenproblem
      CHECK((basis.vectors.transpose() * basis.vectors -
             Eigen::Matrix3d::Identity())
                .cwiseAbs()
                .maxCoeff() < 1e-12);
      CHECK((m * basis.vectors -
             basis.vectors * basis.values.asDiagonal().toDenseMatrix())
                .cwiseAbs()
                .maxCoeff() < 1e-9 * scale);
    }
  }

  TEST_CASE("jacobi on a diagonal matrix is exact") {
    SymMatrix3 m;
    m.a00 = -1.0;
    m.a11 = 4.0;
    m.a22 = 2.0;
    const EigenBasis basis = jacobi_eigen(m);
    CHECK(basis.values(0) == 4.0);
    CHECK(basis.values(1) == 2.0);
    CHECK(basis.values(2) == -1.0);
    CHECK_FALSE(basis.degenerate);
    // columns are signed unit axes, sorted to match the values
    CHECK(std::abs(basis.vectors.col(0).cwiseAbs().maxCoeff() - 1.0) == 0.0);
  }

  TEST_CASE("degeneracy flag tracks eigenvalue gaps") {
    SymMatrix3 close;
    close.a00 = 2.0;
    close.a11 = 2.0;
    close.a22 = 1.0;
    CHECK(jacobi_eigen(close).degenerate);

    SymMatrix3 apart;
    apart.a00 = 3.0;
    apart.a11 = 2.0;
    apart.a22 = 1.0;
    CHECK_FALSE(jacobi_eigen(apart).degenerate);
  }

  TEST_CASE("householder worked example") {
    const Eigen::Vector3d n(1.0, 1.0, 0.0);  // renormalized internally
    const Eigen::Matrix3d f = householder(n).matrix();
    const Eigen::Vector3d image = f * Eigen::Vector3d(1, 0, 0);
    CHECK((image - Eigen::Vector3d(0, -1, 0)).cwiseAbs().maxCoeff() < 1e-15);
  }

  TEST_CASE("householder is an involution with determinant -1") {
    Rng rng(29);
    for (int trial = 0; trial < 50; ++trial) {
      const Eigen::Matrix3d f = householder(rng.unit_vector()).matrix();
      CHECK((f * f - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() <
            1e-14);
      CHECK(std::abs(f.determinant() + 1.0) < 1e-12);
    }
  }

  TEST_CASE("householder rejects a zero normal") {
    CHECK_THROWS_AS(householder(Eigen::Vector3d::Zero()), InvalidInputError);
  }

  TEST_CASE("reflection matrix validation") {
    CHECK_NOTHROW(ReflectionMatrix::axis_flip(true, false, false));
    CHECK_NOTHROW(ReflectionMatrix::axis_flip(true, true, true));
    // even flip count is a rotation, not a reflection
    CHECK_THROWS_AS(ReflectionMatrix::axis_flip(true, true, false),
                    InvalidInputError);
    CHECK_THROWS_AS(ReflectionMatrix(Eigen::Matrix3d::Identity()),
                    InvalidInputError);
    Eigen::Matrix3d skewed = Eigen::Matrix3d::Identity();
    skewed(0, 1) = 0.5;
    CHECK_THROWS_AS(ReflectionMatrix{skewed}, InvalidInputError);
  }

  TEST_CASE("apply_transform moves positions and keeps labels") {
    PointCloud cloud = cloud_from_rows({{1, 2, 3}, {4, 5, 6}});
    cloud.labels = {1, 3};
    const Eigen::Matrix3d f =
        ReflectionMatrix::axis_flip(false, false, true).matrix();
    const PointCloud out = apply_transform(cloud, f);
    CHECK(out.positions(0, 0) == 1.0);
    CHECK(out.positions(0, 2) == -3.0);
    CHECK(out.positions(1, 2) == -6.0);
    CHECK(out.labels == cloud.labels);
  }
}
