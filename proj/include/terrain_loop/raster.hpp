#ifndef TERRAIN_LOOP_RASTER_HPP
#define TERRAIN_LOOP_RASTER_HPP

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "terrain_loop/cloud.hpp"
#include "terrain_loop/errors.hpp"
#include "terrain_loop/gp.hpp"
#include "terrain_loop/parallel.hpp"

namespace terrain_loop {

enum class RasterChannel { Grad, Var, Elev };

inline const char* raster_channel_name(RasterChannel c) {
  switch (c) {
    case RasterChannel::Grad: return "grad";
    case RasterChannel::Var: return "var";
    case RasterChannel::Elev: return "elev";
  }
  return "?";
}

/// Georeferenced raster pair sampled from a GpModel. Pixel (0,0)'s center sits
/// at `origin`; pixel (col,row) -> world = origin + resolution * (col,row).
/// Values are stored row-major, row 0 first.
struct GradientMap {
  double origin_x = 0.0;
  double origin_y = 0.0;
  double resolution = 0.03;  // m/pixel
  int width = 0;
  int height = 0;
  double prior_var = 1.0;  // sigma_k of the source model; upper bound for var
  std::vector<double> grad;
  std::vector<double> var;
  std::vector<double> elev;  // optional; empty unless requested

  std::size_t size() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }
  std::size_t index(int col, int row) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width) + static_cast<std::size_t>(col);
  }
  const std::vector<double>& channel(RasterChannel c) const {
    switch (c) {
      case RasterChannel::Grad: return grad;
      case RasterChannel::Var: return var;
      case RasterChannel::Elev: return elev;
    }
    throw std::invalid_argument("unknown raster channel");
  }
};

inline Eigen::Vector2d pixel_to_world(const GradientMap& map, double col, double row) {
  return {map.origin_x + map.resolution * col, map.origin_y + map.resolution * row};
}

inline Eigen::Vector2d world_to_pixel(const GradientMap& map, double x, double y) {
  return {(x - map.origin_x) / map.resolution, (y - map.origin_y) / map.resolution};
}

namespace detail {

/// Bilinear interpolation at fractional pixel coordinates; nullopt outside
/// the pixel-center footprint [0, w-1] x [0, h-1]. Coordinates within 1e-9 px
/// of a grid node snap onto it, so sampling at a pixel center returns that
/// pixel's value even through the world-coordinate round trip.
inline std::optional<double> sample_bilinear_px(const GradientMap& map, const std::vector<double>& data,
                                                double pc, double pr) {
  const double rc = std::round(pc);
  if (std::abs(pc - rc) < 1e-9) pc = rc;
  const double rr = std::round(pr);
  if (std::abs(pr - rr) < 1e-9) pr = rr;
  if (!(pc >= 0.0) || !(pr >= 0.0) || !(pc <= map.width - 1) || !(pr <= map.height - 1)) {
    return std::nullopt;
  }
  const int c0 = static_cast<int>(pc);
  const int r0 = static_cast<int>(pr);
  const int c1 = std::min(c0 + 1, map.width - 1);
  const int r1 = std::min(r0 + 1, map.height - 1);
  const double fc = pc - c0;
  const double fr = pr - r0;
  const double v00 = data[map.index(c0, r0)];
  const double v10 = data[map.index(c1, r0)];
  const double v01 = data[map.index(c0, r1)];
  const double v11 = data[map.index(c1, r1)];
  const double top = v00 + fc * (v10 - v00);
  const double bot = v01 + fc * (v11 - v01);
  return top + fr * (bot - top);
}

}  // namespace detail

inline std::optional<double> sample_bilinear(const GradientMap& map, RasterChannel channel, double x,
                                             double y) {
  const Eigen::Vector2d px = world_to_pixel(map, x, y);
  return detail::sample_bilinear_px(map, map.channel(channel), px.x(), px.y());
}

struct RenderOptions {
  std::size_t max_pixels = std::size_t(4096) * 4096;
  bool with_elevation = false;
  int threads = 0;
  int panel = 1024;  // queries per inference batch; fixed so output is thread-count independent
};

/// Samples gradient magnitude and elevation variance at every pixel center
/// over the bounding box. Each pixel equals pointwise infer_gradient /
/// infer_elevation at its center coordinate.
inline GradientMap render(const GpModel& model, const Bounds& bbox, double resolution,
                          const RenderOptions& options = {}) {
  if (!(resolution > 0.0)) throw std::invalid_argument("render: resolution must be > 0");
  if (!(bbox.width() > 0.0) || !(bbox.height() > 0.0)) {
    throw std::invalid_argument("render: bounding box must have positive area");
  }
  // eps guard keeps exact multiples (e.g. 3 m / 0.03) from rounding up a pixel
  const int width = std::max(1, static_cast<int>(std::ceil(bbox.width() / resolution - 1e-9)));
  const int height = std::max(1, static_cast<int>(std::ceil(bbox.height() / resolution - 1e-9)));
  const std::size_t total = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (total > options.max_pixels) {
    throw RasterTooLargeError("render: " + std::to_string(width) + "x" + std::to_string(height) +
                              " exceeds the pixel cap");
  }

  GradientMap map;
  map.origin_x = bbox.x_min;
  map.origin_y = bbox.y_min;
  map.resolution = resolution;
  map.width = width;
  map.height = height;
  map.prior_var = model.hyper.sigma_k;
  map.grad.resize(total);
  map.var.resize(total);
  if (options.with_elevation) map.elev.resize(total);

  const std::size_t panel = static_cast<std::size_t>(std::max(1, options.panel));
  const std::size_t n_panels = (total + panel - 1) / panel;
  parallel_for(
      n_panels,
      [&](std::size_t pi) {
        const std::size_t begin = pi * panel;
        const std::size_t end = std::min(begin + panel, total);
        const Eigen::Index b = static_cast<Eigen::Index>(end - begin);
        Eigen::Matrix<double, Eigen::Dynamic, 2> queries(b, 2);
        for (Eigen::Index k = 0; k < b; ++k) {
          const std::size_t idx = begin + static_cast<std::size_t>(k);
          const int row = static_cast<int>(idx / static_cast<std::size_t>(width));
          const int col = static_cast<int>(idx % static_cast<std::size_t>(width));
          queries(k, 0) = map.origin_x + resolution * col;
          queries(k, 1) = map.origin_y + resolution * row;
        }
        Eigen::VectorXd mean, variance;
        Eigen::Matrix<double, Eigen::Dynamic, 2> gradient;
        detail::infer_batch(model, queries, options.with_elevation ? &mean : nullptr, &variance,
                            &gradient);
        for (Eigen::Index k = 0; k < b; ++k) {
          const std::size_t idx = begin + static_cast<std::size_t>(k);
          map.grad[idx] = std::hypot(gradient(k, 0), gradient(k, 1));
          map.var[idx] = variance(k);
          if (options.with_elevation) map.elev[idx] = mean(k);
        }
      },
      options.threads);
  return map;
}

}  // namespace terrain_loop

#endif
