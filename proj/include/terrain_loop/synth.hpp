#ifndef TERRAIN_LOOP_SYNTH_HPP
#define TERRAIN_LOOP_SYNTH_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "terrain_loop/cloud.hpp"
#include "terrain_loop/errors.hpp"
#include "terrain_loop/rng.hpp"
#include "terrain_loop/se2.hpp"

namespace terrain_loop {

/// Parameters of a procedural terrain: a low-frequency random base surface
/// plus sparse rock-like elliptical Gaussian bumps.
struct TerrainSpec {
  double extent_x = 8.0;  // m
  double extent_y = 8.0;
  double base_amplitude = 0.08;   // m, stddev of the base surface
  double base_correlation = 2.0;  // m, wavelength scale of the base surface
  int bump_count = 90;
  double bump_amp_min = 0.05;  // m
  double bump_amp_max = 0.30;
  double bump_radius_min = 0.10;  // m
  double bump_radius_max = 0.40;
  double noise_sigma = 0.02;  // m, default sampling noise
  std::uint64_t seed = 0;

  void validate() const {
    if (!(extent_x > 0.0) || !(extent_y > 0.0)) throw std::invalid_argument("terrain extent must be positive");
    if (base_amplitude < 0.0 || base_correlation <= 0.0 || bump_count < 0 || bump_amp_min < 0.0 ||
        bump_amp_max < bump_amp_min || bump_radius_min <= 0.0 || bump_radius_max < bump_radius_min ||
        noise_sigma < 0.0) {
      throw std::invalid_argument("invalid terrain spec");
    }
  }
};

struct TerrainBump {
  Eigen::Vector2d center;
  double amplitude = 0.0;
  double radius_x = 0.1;
  double radius_y = 0.1;
  double angle = 0.0;
};

/// Deterministic smooth elevation function over the whole plane.
class Terrain {
 public:
  Terrain() = default;

  double operator()(double x, double y) const {
    double z = 0.0;
    for (const Wave& w : waves_) {
      z += wave_amplitude_ * std::cos(w.kx * x + w.ky * y + w.phase);
    }
    for (const TerrainBump& b : bumps_) {
      const double dx = x - b.center.x();
      const double dy = y - b.center.y();
      const double ca = std::cos(b.angle), sa = std::sin(b.angle);
      const double u = ca * dx + sa * dy;
      const double v = -sa * dx + ca * dy;
      z += b.amplitude * std::exp(-0.5 * (u * u / (b.radius_x * b.radius_x) +
                                          v * v / (b.radius_y * b.radius_y)));
    }
    return z;
  }

  const std::vector<TerrainBump>& bumps() const { return bumps_; }

 private:
  friend Terrain generate_terrain(const TerrainSpec&);
  struct Wave {
    double kx = 0.0, ky = 0.0, phase = 0.0;
  };
  std::vector<Wave> waves_;
  double wave_amplitude_ = 0.0;
  std::vector<TerrainBump> bumps_;
};

inline Terrain generate_terrain(const TerrainSpec& spec) {
  spec.validate();
  Terrain terrain;

  constexpr int kWaves = 24;
  if (spec.base_amplitude > 0.0) {
    auto rng = substream(spec.seed, 0xba5e);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    terrain.waves_.reserve(kWaves);
    for (int j = 0; j < kWaves; ++j) {
      const double dir = 2.0 * M_PI * u01(rng);
      const double wavelength = spec.base_correlation * (1.0 + 2.0 * u01(rng));
      const double k = 2.0 * M_PI / wavelength;
      terrain.waves_.push_back({k * std::cos(dir), k * std::sin(dir), 2.0 * M_PI * u01(rng)});
    }
    // Equal wave amplitudes with random phases: stddev equals base_amplitude.
    terrain.wave_amplitude_ = spec.base_amplitude * std::sqrt(2.0 / kWaves);
  }

  if (spec.bump_count > 0) {
    auto rng = substream(spec.seed, 0xb0b5);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    terrain.bumps_.reserve(static_cast<std::size_t>(spec.bump_count));
    for (int j = 0; j < spec.bump_count; ++j) {
      TerrainBump b;
      b.center = {spec.extent_x * u01(rng), spec.extent_y * u01(rng)};
      b.amplitude = spec.bump_amp_min + (spec.bump_amp_max - spec.bump_amp_min) * u01(rng);
      b.radius_x = spec.bump_radius_min + (spec.bump_radius_max - spec.bump_radius_min) * u01(rng);
      b.radius_y = spec.bump_radius_min + (spec.bump_radius_max - spec.bump_radius_min) * u01(rng);
      b.angle = 2.0 * M_PI * u01(rng);
      terrain.bumps_.push_back(b);
    }
  }
  return terrain;
}

/// Axis-aligned sampling window in terrain coordinates.
struct Window {
  double x0 = 0.0, y0 = 0.0, x1 = 1.0, y1 = 1.0;

  Eigen::Vector2d center() const { return {0.5 * (x0 + x1), 0.5 * (y0 + y1)}; }
  double area() const { return (x1 - x0) * (y1 - y0); }
};

/// Two clouds of the same terrain with the exact relative transform recorded.
struct GroundTruthPair {
  Submap submap_q;
  Submap submap_d;
  Se2Transform true_transform;  // query local frame -> database local frame
  double overlap_fraction = 0.0;
};

namespace detail {

inline PointCloud sample_window(const Terrain& terrain, const Window& w, std::size_t count,
                                double noise_sigma, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ux(w.x0, w.x1);
  std::uniform_real_distribution<double> uy(w.y0, w.y1);
  std::normal_distribution<double> noise(0.0, noise_sigma);
  PointCloud cloud;
  cloud.points.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double x = ux(rng);
    const double y = uy(rng);
    const double eta = noise_sigma > 0.0 ? noise(rng) : 0.0;
    cloud.points.push_back({x, y, terrain(x, y) + eta});
  }
  return cloud;
}

inline double window_overlap_fraction(const Window& a, const Window& b) {
  const double ix = std::max(0.0, std::min(a.x1, b.x1) - std::max(a.x0, b.x0));
  const double iy = std::max(0.0, std::min(a.y1, b.y1) - std::max(a.y0, b.y0));
  const double smaller = std::min(a.area(), b.area());
  return smaller > 0.0 ? (ix * iy) / smaller : 0.0;
}

}  // namespace detail

/// Samples each window uniformly with i.i.d. vertical noise and expresses the
/// clouds in their local frames. The database frame sits axis-aligned at its
/// window center; the query frame is rotated by `query_yaw` about its own
/// center, so the recorded query->database transform has theta = query_yaw.
inline GroundTruthPair sample_pair(const Terrain& terrain, const Window& window_q,
                                   const Window& window_d, std::size_t count, double noise_sigma,
                                   std::uint64_t seed, double query_yaw = 0.0,
                                   bool require_overlap = true) {
  GroundTruthPair pair;
  pair.overlap_fraction = detail::window_overlap_fraction(window_q, window_d);
  if (require_overlap && pair.overlap_fraction <= 0.0) {
    throw NoOverlapError("sample_pair: windows are disjoint");
  }

  const Eigen::Vector2d cq = window_q.center();
  const Eigen::Vector2d cd = window_d.center();

  auto rng_q = substream(seed, 1);
  auto rng_d = substream(seed, 2);
  PointCloud world_q = detail::sample_window(terrain, window_q, count, noise_sigma, rng_q);
  PointCloud world_d = detail::sample_window(terrain, window_d, count, noise_sigma, rng_d);

  // world -> query local: rotate by -yaw about the query window center.
  const double c = std::cos(query_yaw), s = std::sin(query_yaw);
  pair.submap_q.id = 0;
  pair.submap_q.cloud.points.reserve(count);
  for (const Point3& p : world_q.points) {
    const double dx = p.x - cq.x();
    const double dy = p.y - cq.y();
    pair.submap_q.cloud.points.push_back({c * dx + s * dy, -s * dx + c * dy, p.z});
  }
  pair.submap_q.world_pose = WorldPose{Se2Transform{query_yaw, cq}, 0.0};

  pair.submap_d.id = 1;
  pair.submap_d.cloud.points.reserve(count);
  for (const Point3& p : world_d.points) {
    pair.submap_d.cloud.points.push_back({p.x - cd.x(), p.y - cd.y(), p.z});
  }
  pair.submap_d.world_pose = WorldPose{Se2Transform{0.0, cd}, 0.0};

  pair.true_transform.theta = Se2Transform::normalize_angle(query_yaw);
  pair.true_transform.t = cq - cd;
  return pair;
}

}  // namespace terrain_loop

#endif
