#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "qc/linalg.hpp"

namespace qc {

// Semantic classes emitted by generate_room.
enum RoomLabel : int {
  kFloor = 0,
  kCeiling = 1,
  kWall = 2,
  kObjectA = 3,  // boxes
  kObjectB = 4,  // spheres
};
inline constexpr int kRoomClasses = 5;

enum class SymmetryMode { kNone, kMirrorPaired };

// Synthetic room recipe. The room spans [-ex/2, ex/2] x [-ey/2, ey/2] in
// plan and [-0.4 ez, 0.6 ez] vertically: the vertical asymmetry plus the
// floor-heavy point allocation keep |floor z| != |ceiling z| about both the
// origin and the centroid, so the two classes stay separable for models that
// only see squared coordinates.
struct SceneSpec {
  std::uint64_t seed = 0;
  Eigen::Vector3d extents{8.0, 6.0, 3.0};
  int min_objects = 2;
  int max_objects = 5;
  SymmetryMode symmetry = SymmetryMode::kNone;
  int point_budget = 2048;  // approximate raw point count
};

// Labeled room cloud: floor/ceiling/wall planes plus boxes and spheres
// resting on the floor. kMirrorPaired makes the point set exactly mirror
// symmetric across the x = 0 mid-plane (objects are placed in mirrored
// pairs, plane points are sampled on one half and mirrored).
// Throws InvalidInputError on non-positive extents or a bad object range.
PointCloud generate_room(const SceneSpec& spec);

// Exactly n points: voxel-grid deduplication (largest pitch keeping at least
// n survivors, found by binary search) followed by farthest-point selection.
// Both stages are deterministic: voxel representatives and FPS ties resolve
// to the lowest row index. A cloud with fewer than n points is padded by
// cycling indices (sampling with replacement) and warns on stderr.
PointCloud grid_sample(const PointCloud& cloud, Eigen::Index n);

enum class Axis { kX, kY, kZ, kXYZ };

// Axis mode: per-coordinate sign flips about the origin (kXYZ flips all
// three; every mode has determinant -1).
PointCloud reflect(const PointCloud& cloud, Axis axis);
// Plane mode: Householder reflection across the plane through the cloud
// centroid with the given normal.
PointCloud reflect(const PointCloud& cloud, const Eigen::Vector3d& plane_normal);

struct AugmentParams {
  double scale_min = 0.9;
  double scale_max = 1.1;
  double jitter_sigma = 0.01;
  double jitter_clip = 0.05;
};

// Isotropic scale drawn from [scale_min, scale_max] followed by per-point
// Gaussian jitter clipped per coordinate. Deterministic under the seed.
PointCloud augment(const PointCloud& cloud, const AugmentParams& params,
                   std::uint64_t seed);

// CSV with header x,y,z[,f1..fc][,label]; floats printed with %.17g so a
// save/load round trip reproduces every double bit for bit.
void save_cloud(const PointCloud& cloud, const std::string& path);
void save_cloud(const PointCloud& cloud, std::ostream& out);
PointCloud load_cloud(const std::string& path);
PointCloud load_cloud(std::istream& in);

}  // namespace qc
