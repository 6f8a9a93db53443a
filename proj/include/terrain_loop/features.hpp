#ifndef TERRAIN_LOOP_FEATURES_HPP
#define TERRAIN_LOOP_FEATURES_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "terrain_loop/raster.hpp"

namespace terrain_loop {

struct DetectorParams {
  int num_scales = 5;
  double base_scale = 1.6;   // pixels
  double scale_step = 1.4;
  double response_floor = 1e-12;  // kills numeric noise on featureless rasters
  int max_keypoints = 500;
  double var_mask_ratio = 0.5;  // tau_v = ratio * prior_var
};

struct Keypoint {
  double col = 0.0;  // fractional pixel coordinates
  double row = 0.0;
  double scale = 1.6;     // pixels
  double response = 0.0;  // determinant-of-Hessian strength
};

struct Descriptor {
  std::array<double, 64> vec{};

  bool is_zero() const {
    for (double v : vec)
      if (v != 0.0) return false;
    return true;
  }
  double distance(const Descriptor& other) const {
    double acc = 0.0;
    for (int i = 0; i < 64; ++i) {
      const double d = vec[i] - other.vec[i];
      acc += d * d;
    }
    return std::sqrt(acc);
  }
};

struct FeatureSet {
  std::vector<Keypoint> keypoints;
  std::vector<Descriptor> descriptors;
};

/// Keypoint correspondence in metric coordinates of the two maps.
struct Association {
  Eigen::Vector2d world_q;
  Eigen::Vector2d world_d;
  double distance = 0.0;
};

struct MatchParams {
  double ratio = 0.85;  // Lowe ratio: nearest / second-nearest
  bool use_ratio = true;
};

namespace detail {

struct Image {
  int width = 0;
  int height = 0;
  std::vector<double> data;

  Image() = default;
  Image(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h, 0.0) {}
  double& at(int c, int r) { return data[static_cast<std::size_t>(r) * width + c]; }
  double at(int c, int r) const { return data[static_cast<std::size_t>(r) * width + c]; }
  double at_clamped(int c, int r) const {
    c = std::clamp(c, 0, width - 1);
    r = std::clamp(r, 0, height - 1);
    return at(c, r);
  }
};

inline Image gaussian_blur(const Image& src, double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[static_cast<std::size_t>(i + radius)] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    sum += kernel[static_cast<std::size_t>(i + radius)];
  }
  for (double& k : kernel) k /= sum;

  Image tmp(src.width, src.height);
  for (int r = 0; r < src.height; ++r) {
    for (int c = 0; c < src.width; ++c) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        acc += kernel[static_cast<std::size_t>(i + radius)] * src.at_clamped(c + i, r);
      }
      tmp.at(c, r) = acc;
    }
  }
  Image out(src.width, src.height);
  for (int r = 0; r < src.height; ++r) {
    for (int c = 0; c < src.width; ++c) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        acc += kernel[static_cast<std::size_t>(i + radius)] * tmp.at_clamped(c, r + i);
      }
      out.at(c, r) = acc;
    }
  }
  return out;
}

inline Image grad_image(const GradientMap& map) {
  Image img(map.width, map.height);
  img.data = map.grad;
  return img;
}

/// Central-difference x/y derivatives, zero at the border.
inline void derivative_images(const Image& src, Image& dx, Image& dy) {
  dx = Image(src.width, src.height);
  dy = Image(src.width, src.height);
  for (int r = 1; r + 1 < src.height; ++r) {
    for (int c = 1; c + 1 < src.width; ++c) {
      dx.at(c, r) = 0.5 * (src.at(c + 1, r) - src.at(c - 1, r));
      dy.at(c, r) = 0.5 * (src.at(c, r + 1) - src.at(c, r - 1));
    }
  }
}

inline double sample_image_bilinear(const Image& img, double c, double r) {
  if (c < 0.0 || r < 0.0 || c > img.width - 1 || r > img.height - 1) return 0.0;
  const int c0 = static_cast<int>(c);
  const int r0 = static_cast<int>(r);
  const int c1 = std::min(c0 + 1, img.width - 1);
  const int r1 = std::min(r0 + 1, img.height - 1);
  const double fc = c - c0, fr = r - r0;
  const double top = img.at(c0, r0) + fc * (img.at(c1, r0) - img.at(c0, r0));
  const double bot = img.at(c0, r1) + fc * (img.at(c1, r1) - img.at(c0, r1));
  return top + fr * (bot - top);
}

}  // namespace detail

/// Multi-scale determinant-of-Hessian blob detection on the gradient channel.
/// Candidates in high-variance areas (var > tau_v) are rejected; the top
/// responses are kept up to the keypoint cap.
inline std::vector<Keypoint> detect(const GradientMap& map, const DetectorParams& params = {}) {
  std::vector<Keypoint> out;
  if (map.width < 3 || map.height < 3) return out;
  const double tau_v = params.var_mask_ratio * map.prior_var;

  const detail::Image g = detail::grad_image(map);
  std::vector<detail::Image> responses;
  std::vector<double> scales;
  responses.reserve(static_cast<std::size_t>(params.num_scales));
  for (int s = 0; s < params.num_scales; ++s) {
    const double sigma = params.base_scale * std::pow(params.scale_step, s);
    scales.push_back(sigma);
    const detail::Image smooth = detail::gaussian_blur(g, sigma);
    detail::Image resp(map.width, map.height);
    const double norm = sigma * sigma * sigma * sigma;
    for (int r = 1; r + 1 < map.height; ++r) {
      for (int c = 1; c + 1 < map.width; ++c) {
        const double lxx = smooth.at(c + 1, r) - 2.0 * smooth.at(c, r) + smooth.at(c - 1, r);
        const double lyy = smooth.at(c, r + 1) - 2.0 * smooth.at(c, r) + smooth.at(c, r - 1);
        const double lxy = 0.25 * (smooth.at(c + 1, r + 1) + smooth.at(c - 1, r - 1) -
                                   smooth.at(c + 1, r - 1) - smooth.at(c - 1, r + 1));
        resp.at(c, r) = norm * (lxx * lyy - lxy * lxy);
      }
    }
    responses.push_back(std::move(resp));
  }

  for (int s = 0; s < params.num_scales; ++s) {
    const detail::Image& resp = responses[static_cast<std::size_t>(s)];
    for (int r = 1; r + 1 < map.height; ++r) {
      for (int c = 1; c + 1 < map.width; ++c) {
        const double v = resp.at(c, r);
        if (!(v > params.response_floor)) continue;

        bool is_max = true;
        for (int ds = -1; ds <= 1 && is_max; ++ds) {
          const int sn = s + ds;
          if (sn < 0 || sn >= params.num_scales) continue;
          const detail::Image& nb = responses[static_cast<std::size_t>(sn)];
          for (int dr = -1; dr <= 1 && is_max; ++dr) {
            for (int dc = -1; dc <= 1; ++dc) {
              if (ds == 0 && dr == 0 && dc == 0) continue;
              if (nb.at(c + dc, r + dr) >= v) {
                is_max = false;
                break;
              }
            }
          }
        }
        if (!is_max) continue;
        if (map.var[map.index(c, r)] > tau_v) continue;

        // Sub-pixel refinement: quadratic fit of the response surface.
        const double gx = 0.5 * (resp.at(c + 1, r) - resp.at(c - 1, r));
        const double gy = 0.5 * (resp.at(c, r + 1) - resp.at(c, r - 1));
        const double hxx = resp.at(c + 1, r) - 2.0 * v + resp.at(c - 1, r);
        const double hyy = resp.at(c, r + 1) - 2.0 * v + resp.at(c, r - 1);
        const double hxy = 0.25 * (resp.at(c + 1, r + 1) + resp.at(c - 1, r - 1) -
                                   resp.at(c + 1, r - 1) - resp.at(c - 1, r + 1));
        double ox = 0.0, oy = 0.0;
        const double det = hxx * hyy - hxy * hxy;
        if (std::abs(det) > 1e-30) {
          ox = std::clamp(-(hyy * gx - hxy * gy) / det, -0.5, 0.5);
          oy = std::clamp(-(hxx * gy - hxy * gx) / det, -0.5, 0.5);
        }
        Keypoint kp{c + ox, r + oy, scales[static_cast<std::size_t>(s)], v};

        const auto var_at = detail::sample_bilinear_px(map, map.var, kp.col, kp.row);
        if (!var_at || *var_at > tau_v) continue;
        out.push_back(kp);
      }
    }
  }

  std::sort(out.begin(), out.end(), [](const Keypoint& a, const Keypoint& b) {
    if (a.response != b.response) return a.response > b.response;
    if (a.row != b.row) return a.row < b.row;
    if (a.col != b.col) return a.col < b.col;
    return a.scale < b.scale;
  });
  if (out.size() > static_cast<std::size_t>(params.max_keypoints)) {
    out.resize(static_cast<std::size_t>(params.max_keypoints));
  }
  return out;
}

namespace detail {

inline double dominant_orientation(const Image& dx, const Image& dy, const Keypoint& kp) {
  constexpr int kBins = 36;
  std::array<double, kBins> hist{};
  const double radius = 10.0 * kp.scale / 3.3;
  const int ir = std::max(1, static_cast<int>(std::ceil(radius)));
  const int cc = static_cast<int>(std::lround(kp.col));
  const int cr = static_cast<int>(std::lround(kp.row));
  const double wsigma = 0.5 * radius;
  double total = 0.0;
  for (int dr = -ir; dr <= ir; ++dr) {
    for (int dc = -ir; dc <= ir; ++dc) {
      if (dc * dc + dr * dr > radius * radius) continue;
      const int c = cc + dc, r = cr + dr;
      if (c < 0 || r < 0 || c >= dx.width || r >= dx.height) continue;
      const double vx = dx.at(c, r), vy = dy.at(c, r);
      const double mag = std::hypot(vx, vy);
      if (mag <= 0.0) continue;
      const double w = mag * std::exp(-0.5 * (dc * dc + dr * dr) / (wsigma * wsigma));
      const double angle = std::atan2(vy, vx);  // [-pi, pi]
      int bin = static_cast<int>(std::floor((angle + M_PI) / (2.0 * M_PI) * kBins));
      bin = std::clamp(bin, 0, kBins - 1);
      hist[static_cast<std::size_t>(bin)] += w;
      total += w;
    }
  }
  if (total < 1e-12) return 0.0;

  for (int pass = 0; pass < 2; ++pass) {
    std::array<double, kBins> smooth{};
    for (int b = 0; b < kBins; ++b) {
      const double prev = hist[static_cast<std::size_t>((b + kBins - 1) % kBins)];
      const double next = hist[static_cast<std::size_t>((b + 1) % kBins)];
      smooth[static_cast<std::size_t>(b)] = 0.25 * prev + 0.5 * hist[static_cast<std::size_t>(b)] + 0.25 * next;
    }
    hist = smooth;
  }

  int best = 0;
  for (int b = 1; b < kBins; ++b) {
    if (hist[static_cast<std::size_t>(b)] > hist[static_cast<std::size_t>(best)]) best = b;
  }
  const double h0 = hist[static_cast<std::size_t>((best + kBins - 1) % kBins)];
  const double h1 = hist[static_cast<std::size_t>(best)];
  const double h2 = hist[static_cast<std::size_t>((best + 1) % kBins)];
  double offset = 0.0;
  const double denom = h0 - 2.0 * h1 + h2;
  if (std::abs(denom) > 1e-18) offset = std::clamp(0.5 * (h0 - h2) / denom, -0.5, 0.5);
  return (best + 0.5 + offset) * 2.0 * M_PI / kBins - M_PI;
}

inline Descriptor describe_with(const Image& dx, const Image& dy, const Keypoint& kp) {
  const double side = 20.0 * kp.scale / 3.3;
  const double theta = dominant_orientation(dx, dy, kp);
  const double ct = std::cos(theta), st = std::sin(theta);
  const double step = side / 20.0;
  const double wsigma = kp.scale;  // Gaussian weighting over the patch

  std::array<double, 64> acc{};
  for (int j = 0; j < 20; ++j) {
    const double v = (j - 9.5) * step;
    for (int i = 0; i < 20; ++i) {
      const double u = (i - 9.5) * step;
      const double pc = kp.col + ct * u - st * v;
      const double pr = kp.row + st * u + ct * v;
      const double gx = sample_image_bilinear(dx, pc, pr);  // zero outside the raster
      const double gy = sample_image_bilinear(dy, pc, pr);
      const double rx = ct * gx + st * gy;  // rotate into the keypoint frame
      const double ry = -st * gx + ct * gy;
      const double w = std::exp(-0.5 * (u * u + v * v) / (wsigma * wsigma));
      const int cell = (j / 5) * 4 + (i / 5);
      double* slot = acc.data() + cell * 4;
      slot[0] += w * rx;
      slot[1] += w * ry;
      slot[2] += w * std::abs(rx);
      slot[3] += w * std::abs(ry);
    }
  }

  Descriptor desc;
  double norm = 0.0;
  for (double a : acc) norm += a * a;
  norm = std::sqrt(norm);
  if (norm < 1e-12) return desc;  // degenerate flat patch marker
  for (int i = 0; i < 64; ++i) desc.vec[static_cast<std::size_t>(i)] = acc[static_cast<std::size_t>(i)] / norm;
  return desc;
}

}  // namespace detail

/// Describes all keypoints of one map, sharing the derivative images.
inline std::vector<Descriptor> describe_all(const GradientMap& map, const std::vector<Keypoint>& kps) {
  detail::Image dx, dy;
  const detail::Image g = detail::grad_image(map);
  detail::derivative_images(g, dx, dy);
  std::vector<Descriptor> out;
  out.reserve(kps.size());
  for (const Keypoint& kp : kps) out.push_back(detail::describe_with(dx, dy, kp));
  return out;
}

inline Descriptor describe(const GradientMap& map, const Keypoint& kp) {
  return describe_all(map, {kp}).front();
}

/// Brute-force L2 matching of query descriptors against database descriptors.
/// A pair is kept when the nearest/second-nearest ratio passes, or when the
/// database offers a single usable descriptor. Each database descriptor is
/// assigned to at most one query (its closest), which bounds the association
/// count by the smaller descriptor set. Degenerate (zero) descriptors never
/// match. Keypoint positions are reported in world coordinates.
inline std::vector<Association> match(const FeatureSet& query, const FeatureSet& database,
                                      const GradientMap& query_map, const GradientMap& database_map,
                                      const MatchParams& params = {}) {
  std::vector<Association> out;
  std::vector<std::size_t> usable;
  for (std::size_t i = 0; i < database.descriptors.size(); ++i) {
    if (!database.descriptors[i].is_zero()) usable.push_back(i);
  }
  if (usable.empty()) return out;

  struct Candidate {
    std::size_t query_index;
    double distance;
  };
  std::vector<std::optional<Candidate>> claimed(database.descriptors.size());
  for (std::size_t qi = 0; qi < query.descriptors.size(); ++qi) {
    const Descriptor& qd = query.descriptors[qi];
    if (qd.is_zero()) continue;
    std::size_t best = usable[0];
    double d1 = std::numeric_limits<double>::infinity();
    double d2 = std::numeric_limits<double>::infinity();
    for (std::size_t di : usable) {
      const double d = qd.distance(database.descriptors[di]);
      if (d < d1) {
        d2 = d1;
        d1 = d;
        best = di;
      } else if (d < d2) {
        d2 = d;
      }
    }
    const bool single = usable.size() == 1;
    if (params.use_ratio && !single && !(d1 <= params.ratio * d2)) continue;
    std::optional<Candidate>& slot = claimed[best];
    if (!slot || d1 < slot->distance) slot = Candidate{qi, d1};
  }

  for (std::size_t di = 0; di < claimed.size(); ++di) {
    if (!claimed[di]) continue;
    const Keypoint& qk = query.keypoints[claimed[di]->query_index];
    const Keypoint& dk = database.keypoints[di];
    out.push_back({pixel_to_world(query_map, qk.col, qk.row),
                   pixel_to_world(database_map, dk.col, dk.row), claimed[di]->distance});
  }
  return out;
}

}  // namespace terrain_loop

#endif
