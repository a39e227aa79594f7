#pragma once

#include <Eigen/Dense>
#include <vector>

#include "qc/errors.hpp"

namespace qc {

using PointMatrix = Eigen::Matrix<double, Eigen::Dynamic, 3>;

// A point set with optional per-point features and integer labels.
// Invariants: features has N rows whenever it has any columns; labels is empty
// or has exactly N entries.
struct PointCloud {
  PointMatrix positions;       // N x 3, rows are points
  Eigen::MatrixXd features;    // N x c, c >= 0
  std::vector<int> labels;     // empty or size N

  Eigen::Index size() const { return positions.rows(); }
  bool has_labels() const { return !labels.empty(); }
  Eigen::Index feature_count() const { return features.cols(); }
};

inline void validate(const PointCloud& cloud) {
  const Eigen::Index n = cloud.size();
  if (cloud.features.cols() > 0 && cloud.features.rows() != n)
    throw InvalidInputError("point cloud: feature rows do not match point count");
  if (!cloud.labels.empty() && static_cast<Eigen::Index>(cloud.labels.size()) != n)
    throw InvalidInputError("point cloud: label count does not match point count");
  if (!cloud.positions.allFinite())
    throw NumericalError("point cloud: non-finite position");
}

}  // namespace qc
