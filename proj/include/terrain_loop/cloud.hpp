#ifndef TERRAIN_LOOP_CLOUD_HPP
#define TERRAIN_LOOP_CLOUD_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

#include "terrain_loop/errors.hpp"
#include "terrain_loop/rng.hpp"
#include "terrain_loop/se2.hpp"

namespace terrain_loop {

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  bool finite() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
  }
};

struct PointCloud {
  std::vector<Point3> points;

  std::size_t count() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

/// Tight axis-aligned x-y bounds.
struct Bounds {
  double x_min = 0.0;
  double x_max = 0.0;
  double y_min = 0.0;
  double y_max = 0.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }

  bool contains(double x, double y) const {
    return x >= x_min && x <= x_max && y >= y_min && y <= y_max;
  }
};

/// Global placement of a submap's local frame; used only for evaluation labels.
struct WorldPose {
  Se2Transform pose;
  double z_offset = 0.0;
};

struct Submap {
  int id = 0;
  PointCloud cloud;
  std::optional<WorldPose> world_pose;
};

inline Bounds bounding_box(const PointCloud& cloud) {
  if (cloud.empty()) throw EmptyCloudError("bounding_box: empty cloud");
  Bounds b{cloud.points[0].x, cloud.points[0].x, cloud.points[0].y, cloud.points[0].y};
  for (const Point3& p : cloud.points) {
    b.x_min = std::min(b.x_min, p.x);
    b.x_max = std::max(b.x_max, p.x);
    b.y_min = std::min(b.y_min, p.y);
    b.y_max = std::max(b.y_max, p.y);
  }
  return b;
}

/// Uniform random subset of `target` points, without replacement, deterministic
/// in `seed`. Clouds at or below the target pass through unchanged. The output
/// keeps the input ordering.
inline PointCloud downsample(const PointCloud& cloud, std::size_t target, std::uint64_t seed) {
  if (target < 1) throw std::invalid_argument("downsample: target must be >= 1");
  if (cloud.count() <= target) return cloud;

  std::vector<std::uint32_t> idx(cloud.count());
  std::iota(idx.begin(), idx.end(), 0u);
  std::mt19937_64 rng(mix64(seed));
  // Partial Fisher-Yates: the first `target` slots are the sample.
  for (std::size_t i = 0; i < target; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(target);
  std::sort(idx.begin(), idx.end());

  PointCloud out;
  out.points.reserve(target);
  for (std::uint32_t i : idx) out.points.push_back(cloud.points[i]);
  return out;
}

}  // namespace terrain_loop

#endif
