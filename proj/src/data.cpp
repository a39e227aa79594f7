#include "qc/data.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>
#include <tuple>

#include "qc/rng.hpp"

namespace qc {

namespace {

struct Builder {
  std::vector<Eigen::Vector3d> points;
  std::vector<int> labels;

  void add(const Eigen::Vector3d& p, int label) {
    points.push_back(p);
    labels.push_back(label);
  }
  // Mirror across the x = 0 mid-plane; exact, since negation is exact.
  void add_mirrored(const Eigen::Vector3d& p, int label) {
    add(p, label);
    add(Eigen::Vector3d{-p.x(), p.y(), p.z()}, label);
  }

  PointCloud finish() const {
    PointCloud cloud;
    cloud.positions.resize(static_cast<Eigen::Index>(points.size()), 3);
    for (std::size_t i = 0; i < points.size(); ++i)
      cloud.positions.row(static_cast<Eigen::Index>(i)) =
          points[i].transpose();
    cloud.features.resize(static_cast<Eigen::Index>(points.size()), 0);
    cloud.labels = labels;
    return cloud;
  }
};

// Surface point on an axis-aligned box with the given half extents, faces
// picked by area.
Eigen::Vector3d box_surface_point(const Eigen::Vector3d& half, Rng& rng) {
  const double ax = half.y() * half.z();
  const double ay = half.x() * half.z();
  const double az = half.x() * half.y();
  const double pick = rng.uniform() * (ax + ay + az);
  const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
  Eigen::Vector3d p{rng.uniform(-half.x(), half.x()),
                    rng.uniform(-half.y(), half.y()),
                    rng.uniform(-half.z(), half.z())};
  if (pick < ax)
    p.x() = sign * half.x();
  else if (pick < ax + ay)
    p.y() = sign * half.y();
  else
    p.z() = sign * half.z();
  return p;
}

}  // namespace

PointCloud generate_room(const SceneSpec& spec) {
  if (!(spec.extents.array() > 0.0).all() || !spec.extents.allFinite())
    throw InvalidInputError("generate_room: extents must be positive");
  if (spec.min_objects < 0 || spec.max_objects < spec.min_objects)
    throw InvalidInputError("generate_room: bad object count range");
  if (spec.point_budget < 8)
    throw InvalidInputError("generate_room: point budget too small");

  Rng rng(spec.seed);
  const bool mirror = spec.symmetry == SymmetryMode::kMirrorPaired;
  const double xr = spec.extents.x() / 2.0;
  const double yr = spec.extents.y() / 2.0;
  // Vertical asymmetry: floor and ceiling sit at different |z|.
  const double z0 = -0.4 * spec.extents.z();
  const double z1 = 0.6 * spec.extents.z();

  int n_objects =
      spec.min_objects +
      static_cast<int>(rng.integer(spec.max_objects - spec.min_objects + 1));
  if (mirror) n_objects *= 2;  // placed as mirrored pairs

  const int budget = spec.point_budget;
  int n_floor, n_ceiling, n_wall, n_object;
  if (n_objects > 0) {
    n_floor = (budget * 28) / 100;
    n_ceiling = (budget * 17) / 100;
    n_wall = (budget * 25) / 100;
    n_object = budget - n_floor - n_ceiling - n_wall;
  } else {
    n_floor = (budget * 40) / 100;
    n_ceiling = (budget * 24) / 100;
    n_wall = budget - n_floor - n_ceiling;
    n_object = 0;
  }

  Builder out;

  auto add_plane_point = [&](int label, auto sample) {
    if (mirror) {
      Eigen::Vector3d p = sample(/*half=*/true);
      out.add_mirrored(p, label);
    } else {
      out.add(sample(/*half=*/false), label);
    }
  };
  const int floor_draws = mirror ? (n_floor + 1) / 2 : n_floor;
  for (int i = 0; i < floor_draws; ++i)
    add_plane_point(kFloor, [&](bool half) {
      return Eigen::Vector3d{rng.uniform(half ? 0.0 : -xr, xr),
                             rng.uniform(-yr, yr), z0};
    });
  const int ceiling_draws = mirror ? (n_ceiling + 1) / 2 : n_ceiling;
  for (int i = 0; i < ceiling_draws; ++i)
    add_plane_point(kCeiling, [&](bool half) {
      return Eigen::Vector3d{rng.uniform(half ? 0.0 : -xr, xr),
                             rng.uniform(-yr, yr), z1};
    });

  // Walls: the pair at x = +-xr and the pair at y = +-yr.
  const int wall_draws = mirror ? (n_wall + 1) / 2 : n_wall;
  for (int i = 0; i < wall_draws; ++i) {
    const double z = rng.uniform(z0, z1);
    if (i % 2 == 0) {
      const double y = rng.uniform(-yr, yr);
      if (mirror) {
        out.add_mirrored({xr, y, z}, kWall);  // mirror lands on the -x wall
      } else {
        const double side = (i % 4 == 0) ? xr : -xr;
        out.add({side, y, z}, kWall);
      }
    } else {
      const double side = (i % 4 == 1) ? yr : -yr;
      if (mirror) {
        out.add_mirrored({rng.uniform(0.0, xr), side, z}, kWall);
      } else {
        out.add({rng.uniform(-xr, xr), side, z}, kWall);
      }
    }
  }

  if (n_objects > 0) {
    const int groups = mirror ? n_objects / 2 : n_objects;
    const int per_object = std::max(1, n_object / std::max(1, n_objects));
    for (int obj = 0; obj < groups; ++obj) {
      const bool box = obj % 2 == 0;
      const int label = box ? kObjectA : kObjectB;
      if (box) {
        Eigen::Vector3d half{rng.uniform(0.15, 0.45), rng.uniform(0.15, 0.45),
                             rng.uniform(0.15, 0.45)};
        Eigen::Vector3d center{
            rng.uniform(mirror ? half.x() + 0.1 : -xr + half.x() + 0.1,
                        xr - half.x() - 0.1),
            rng.uniform(-yr + half.y() + 0.1, yr - half.y() - 0.1),
            z0 + half.z()};
        for (int i = 0; i < per_object; ++i) {
          Eigen::Vector3d p = center + box_surface_point(half, rng);
          if (mirror)
            out.add_mirrored(p, label);
          else
            out.add(p, label);
        }
      } else {
        const double r = rng.uniform(0.15, 0.4);
        Eigen::Vector3d center{
            rng.uniform(mirror ? r + 0.1 : -xr + r + 0.1, xr - r - 0.1),
            rng.uniform(-yr + r + 0.1, yr - r - 0.1), z0 + r};
        for (int i = 0; i < per_object; ++i) {
          Eigen::Vector3d p = center + r * rng.unit_vector();
          if (mirror)
            out.add_mirrored(p, label);
          else
            out.add(p, label);
        }
      }
    }
  }
  return out.finish();
}

namespace {

using VoxelKey = std::tuple<std::int64_t, std::int64_t, std::int64_t>;

// Lowest-row-index representative per voxel; survivors come out in ascending
// row order.
std::vector<Eigen::Index> voxel_dedup(const PointMatrix& positions,
                                      double pitch) {
  std::map<VoxelKey, Eigen::Index> seen;
  for (Eigen::Index i = 0; i < positions.rows(); ++i) {
    VoxelKey key{static_cast<std::int64_t>(std::floor(positions(i, 0) / pitch)),
                 static_cast<std::int64_t>(std::floor(positions(i, 1) / pitch)),
                 static_cast<std::int64_t>(std::floor(positions(i, 2) / pitch))};
    seen.try_emplace(key, i);
  }
  std::vector<Eigen::Index> survivors;
  survivors.reserve(seen.size());
  for (const auto& [key, idx] : seen) survivors.push_back(idx);
  std::sort(survivors.begin(), survivors.end());
  return survivors;
}

PointCloud take_rows(const PointCloud& cloud,
                     const std::vector<Eigen::Index>& rows) {
  PointCloud out;
  out.positions.resize(static_cast<Eigen::Index>(rows.size()), 3);
  out.features.resize(static_cast<Eigen::Index>(rows.size()),
                      cloud.features.cols());
  if (cloud.has_labels()) out.labels.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.positions.row(static_cast<Eigen::Index>(i)) =
        cloud.positions.row(rows[i]);
    if (cloud.features.cols() > 0)
      out.features.row(static_cast<Eigen::Index>(i)) =
          cloud.features.row(rows[i]);
    if (cloud.has_labels()) out.labels.push_back(cloud.labels[rows[i]]);
  }
  return out;
}

}  // namespace

PointCloud grid_sample(const PointCloud& cloud, Eigen::Index n) {
  validate(cloud);
  if (n < 1) throw InvalidInputError("grid_sample: n must be positive");
  const Eigen::Index total = cloud.size();
  if (total == 0) throw InvalidInputError("grid_sample: empty cloud");

  if (total < n) {
    std::cerr << "grid_sample: cloud has " << total << " points, sampling "
              << n << " with replacement\n";
    std::vector<Eigen::Index> rows(n);
    for (Eigen::Index i = 0; i < n; ++i) rows[i] = i % total;
    return take_rows(cloud, rows);
  }

  // Largest pitch whose voxel survivors still number at least n.
  const Eigen::Vector3d span = cloud.positions.colwise().maxCoeff() -
                               cloud.positions.colwise().minCoeff();
  double lo = 1e-9;
  double hi = std::max(span.norm(), 1.0) + 1.0;
  if (static_cast<Eigen::Index>(voxel_dedup(cloud.positions, lo).size()) < n) {
    // Duplicate-heavy cloud: even the finest grid cannot keep n distinct.
    std::cerr << "grid_sample: fewer than " << n
              << " distinct voxels, padding with replacement\n";
    std::vector<Eigen::Index> rows = voxel_dedup(cloud.positions, lo);
    Eigen::Index unique = static_cast<Eigen::Index>(rows.size());
    for (Eigen::Index i = 0; rows.size() < static_cast<std::size_t>(n); ++i)
      rows.push_back(rows[i % unique]);
    return take_rows(cloud, rows);
  }
  for (int iter = 0; iter < 60; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (static_cast<Eigen::Index>(voxel_dedup(cloud.positions, mid).size()) >=
        n)
      lo = mid;
    else
      hi = mid;
  }
  std::vector<Eigen::Index> survivors = voxel_dedup(cloud.positions, lo);

  // Farthest-point selection down to exactly n, ties to the lowest index.
  const std::size_t m = survivors.size();
  std::vector<double> min_dist(m, std::numeric_limits<double>::infinity());
  std::vector<bool> selected(m, false);
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (Eigen::Index idx : survivors)
    centroid += cloud.positions.row(idx).transpose();
  centroid /= static_cast<double>(m);

  std::size_t current = 0;
  double best = -1.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double d =
        (cloud.positions.row(survivors[i]).transpose() - centroid)
            .squaredNorm();
    if (d > best) {
      best = d;
      current = i;
    }
  }

  std::vector<Eigen::Index> picked;
  picked.reserve(n);
  selected[current] = true;
  picked.push_back(survivors[current]);
  while (picked.size() < static_cast<std::size_t>(n)) {
    std::size_t next = 0;
    best = -1.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (selected[i]) continue;
      const double d = (cloud.positions.row(survivors[i]) -
                        cloud.positions.row(survivors[current]))
                           .squaredNorm();
      min_dist[i] = std::min(min_dist[i], d);
      if (min_dist[i] > best) {
        best = min_dist[i];
        next = i;
      }
    }
    selected[next] = true;
    picked.push_back(survivors[next]);
    current = next;
  }
  std::sort(picked.begin(), picked.end());
  return take_rows(cloud, picked);
}

PointCloud reflect(const PointCloud& cloud, Axis axis) {
  validate(cloud);
  PointCloud out = cloud;
  if (axis == Axis::kX || axis == Axis::kXYZ)
    out.positions.col(0) = -out.positions.col(0);
  if (axis == Axis::kY || axis == Axis::kXYZ)
    out.positions.col(1) = -out.positions.col(1);
  if (axis == Axis::kZ || axis == Axis::kXYZ)
    out.positions.col(2) = -out.positions.col(2);
  return out;
}

PointCloud reflect(const PointCloud& cloud,
                   const Eigen::Vector3d& plane_normal) {
  validate(cloud);
  if (cloud.size() == 0) throw InvalidInputError("reflect: empty cloud");
  const Eigen::Matrix3d f = householder(plane_normal).matrix();
  const Eigen::RowVector3d centroid = cloud.positions.colwise().mean();
  PointCloud out = cloud;
  out.positions =
      ((cloud.positions.rowwise() - centroid) * f.transpose()).rowwise() +
      centroid;
  return out;
}

PointCloud augment(const PointCloud& cloud, const AugmentParams& params,
                   std::uint64_t seed) {
  validate(cloud);
  if (!(params.scale_min > 0.0) || params.scale_max < params.scale_min)
    throw InvalidInputError("augment: bad scale range");
  if (params.jitter_sigma < 0.0 || params.jitter_clip < 0.0)
    throw InvalidInputError("augment: negative jitter");

  Rng rng(seed);
  const double scale = rng.uniform(params.scale_min, params.scale_max);
  PointCloud out = cloud;
  out.positions *= scale;
  if (params.jitter_sigma > 0.0) {
    for (Eigen::Index i = 0; i < out.positions.rows(); ++i)
      for (Eigen::Index j = 0; j < 3; ++j)
        out.positions(i, j) += std::clamp(rng.normal() * params.jitter_sigma,
                                          -params.jitter_clip,
                                          params.jitter_clip);
  }
  return out;
}

namespace {

void append_double(std::string& line, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  line += buf;
}

}  // namespace

void save_cloud(const PointCloud& cloud, std::ostream& out) {
  validate(cloud);
  std::string header = "x,y,z";
  for (Eigen::Index c = 0; c < cloud.features.cols(); ++c)
    header += ",f" + std::to_string(c + 1);
  if (cloud.has_labels()) header += ",label";
  out << header << "\n";

  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    std::string line;
    for (Eigen::Index j = 0; j < 3; ++j) {
      if (j) line += ',';
      append_double(line, cloud.positions(i, j));
    }
    for (Eigen::Index c = 0; c < cloud.features.cols(); ++c) {
      line += ',';
      append_double(line, cloud.features(i, c));
    }
    if (cloud.has_labels()) {
      line += ',';
      line += std::to_string(cloud.labels[static_cast<std::size_t>(i)]);
    }
    out << line << "\n";
  }
}

void save_cloud(const PointCloud& cloud, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidInputError("save_cloud: cannot open " + path);
  save_cloud(cloud, out);
  if (!out) throw InvalidInputError("save_cloud: write failed for " + path);
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(current);
      current.clear();
    } else if (ch != '\r') {
      current += ch;
    }
  }
  fields.push_back(current);
  return fields;
}

double parse_double(const std::string& s, int line_no) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0')
    throw InvalidInputError("load_cloud: bad number at line " +
                            std::to_string(line_no));
  return v;
}

}  // namespace

PointCloud load_cloud(std::istream& in) {
  std::string line;
  if (!std::getline(in, line))
    throw InvalidInputError("load_cloud: empty file");
  std::vector<std::string> header = split_csv(line);
  if (header.size() < 3 || header[0] != "x" || header[1] != "y" ||
      header[2] != "z")
    throw InvalidInputError("load_cloud: header must start with x,y,z");
  bool has_labels = !header.empty() && header.back() == "label";
  const Eigen::Index n_features =
      static_cast<Eigen::Index>(header.size()) - 3 - (has_labels ? 1 : 0);

  std::vector<std::array<double, 3>> positions;
  std::vector<std::vector<double>> features;
  std::vector<int> labels;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields = split_csv(line);
    if (fields.size() != header.size())
      throw InvalidInputError("load_cloud: wrong field count at line " +
                              std::to_string(line_no));
    positions.push_back({parse_double(fields[0], line_no),
                         parse_double(fields[1], line_no),
                         parse_double(fields[2], line_no)});
    std::vector<double> f(n_features);
    for (Eigen::Index c = 0; c < n_features; ++c)
      f[static_cast<std::size_t>(c)] = parse_double(fields[3 + c], line_no);
    features.push_back(std::move(f));
    if (has_labels) {
      char* end = nullptr;
      const long v = std::strtol(fields.back().c_str(), &end, 10);
      if (end == fields.back().c_str() || *end != '\0')
        throw InvalidInputError("load_cloud: bad label at line " +
                                std::to_string(line_no));
      labels.push_back(static_cast<int>(v));
    }
  }

  PointCloud cloud;
  const Eigen::Index n = static_cast<Eigen::Index>(positions.size());
  cloud.positions.resize(n, 3);
  cloud.features.resize(n, n_features);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < 3; ++j)
      cloud.positions(i, j) = positions[static_cast<std::size_t>(i)]
                                        [static_cast<std::size_t>(j)];
    for (Eigen::Index c = 0; c < n_features; ++c)
      cloud.features(i, c) =
          features[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)];
  }
  cloud.labels = std::move(labels);
  validate(cloud);
  return cloud;
}

PointCloud load_cloud(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInputError("load_cloud: cannot open " + path);
  return load_cloud(in);
}

}  // namespace qc
