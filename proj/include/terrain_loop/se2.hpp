#ifndef TERRAIN_LOOP_SE2_HPP
#define TERRAIN_LOOP_SE2_HPP

#include <Eigen/Core>
#include <cmath>

namespace terrain_loop {

/// Rigid planar transform: x -> R(theta) * x + t, theta in (-pi, pi].
struct Se2Transform {
  double theta = 0.0;
  Eigen::Vector2d t = Eigen::Vector2d::Zero();

  static Se2Transform identity() { return {}; }

  static double normalize_angle(double a) {
    a = std::remainder(a, 2.0 * M_PI);
    if (a <= -M_PI) a += 2.0 * M_PI;
    return a;
  }

  Eigen::Matrix2d rotation() const {
    const double c = std::cos(theta), s = std::sin(theta);
    Eigen::Matrix2d r;
    r << c, -s, s, c;
    return r;
  }

  Eigen::Vector2d apply(const Eigen::Vector2d& p) const {
    const double c = std::cos(theta), s = std::sin(theta);
    return {c * p.x() - s * p.y() + t.x(), s * p.x() + c * p.y() + t.y()};
  }

  Se2Transform inverse() const {
    const double c = std::cos(theta), s = std::sin(theta);
    Se2Transform inv;
    inv.theta = normalize_angle(-theta);
    inv.t = {-(c * t.x() + s * t.y()), -(-s * t.x() + c * t.y())};
    return inv;
  }

  /// this ∘ other: applies other first.
  Se2Transform compose(const Se2Transform& other) const {
    Se2Transform out;
    out.theta = normalize_angle(theta + other.theta);
    out.t = apply(other.t);
    return out;
  }
};

}  // namespace terrain_loop

#endif
