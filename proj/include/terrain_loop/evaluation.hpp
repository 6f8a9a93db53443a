#ifndef TERRAIN_LOOP_EVALUATION_HPP
#define TERRAIN_LOOP_EVALUATION_HPP

#include <algorithm>
#include <cstdlib>
#include <map>
#include <utility>
#include <vector>

#include "terrain_loop/cloud.hpp"
#include "terrain_loop/errors.hpp"
#include "terrain_loop/registration.hpp"

namespace terrain_loop {

struct OverlapLabel {
  int id_a = 0;
  int id_b = 0;
  double iou = 0.0;
  bool is_true = false;
};

struct PrPoint {
  int threshold = 0;
  double precision = 1.0;
  double recall = 1.0;
  long tp = 0;
  long fp = 0;
  long fn = 0;
  bool no_predictions = false;  // precision had an empty denominator
};

/// Match result annotated with the submap pair it scored.
struct PairResult {
  int query_id = 0;
  int db_id = 0;
  MatchResult result;
};

namespace detail {

inline Bounds global_bbox(const Submap& submap) {
  if (!submap.world_pose) {
    throw MissingPoseError("submap " + std::to_string(submap.id) + " has no world pose");
  }
  if (submap.cloud.empty()) throw EmptyCloudError("submap " + std::to_string(submap.id) + " is empty");
  const Se2Transform& pose = submap.world_pose->pose;
  Bounds b;
  bool first = true;
  for (const Point3& p : submap.cloud.points) {
    const Eigen::Vector2d w = pose.apply({p.x, p.y});
    if (first) {
      b = {w.x(), w.x(), w.y(), w.y()};
      first = false;
    } else {
      b.x_min = std::min(b.x_min, w.x());
      b.x_max = std::max(b.x_max, w.x());
      b.y_min = std::min(b.y_min, w.y());
      b.y_max = std::max(b.y_max, w.y());
    }
  }
  return b;
}

inline double rectangle_iou(const Bounds& a, const Bounds& b) {
  const double ix = std::max(0.0, std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min));
  const double iy = std::max(0.0, std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min));
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

}  // namespace detail

/// Intersection-over-union of the submaps' global-frame x-y bounding boxes.
inline double iou_overlap(const Submap& a, const Submap& b) {
  return detail::rectangle_iou(detail::global_bbox(a), detail::global_bbox(b));
}

/// One label per unordered distinct pair; true when iou exceeds the threshold.
inline std::vector<OverlapLabel> label_pairs(const std::vector<Submap>& db, double iou_threshold) {
  if (iou_threshold < 0.0 || iou_threshold > 1.0) {
    throw std::invalid_argument("label_pairs: threshold must be in [0,1]");
  }
  std::vector<Bounds> boxes;
  boxes.reserve(db.size());
  for (const Submap& s : db) boxes.push_back(detail::global_bbox(s));

  std::vector<OverlapLabel> labels;
  labels.reserve(db.size() * (db.size() - 1) / 2);
  for (std::size_t i = 0; i < db.size(); ++i) {
    for (std::size_t j = i + 1; j < db.size(); ++j) {
      const double iou = detail::rectangle_iou(boxes[i], boxes[j]);
      labels.push_back({db[i].id, db[j].id, iou, iou > iou_threshold});
    }
  }
  return labels;
}

/// Drops pairs of consecutive submap ids (trivially overlapping neighbors);
/// off by default in the evaluation flow.
inline std::vector<OverlapLabel> exclude_adjacent(std::vector<OverlapLabel> labels) {
  std::erase_if(labels, [](const OverlapLabel& l) { return std::abs(l.id_a - l.id_b) == 1; });
  return labels;
}

inline std::vector<PairResult> exclude_adjacent(std::vector<PairResult> results) {
  std::erase_if(results, [](const PairResult& r) { return std::abs(r.query_id - r.db_id) == 1; });
  return results;
}

/// Precision-recall over an inclusive inlier-threshold sweep. Every result
/// pair must be labeled; true-labeled pairs with no result count as misses.
/// Empty precision denominators are reported as 1.0 with `no_predictions`.
inline std::vector<PrPoint> precision_recall(const std::vector<PairResult>& results,
                                             const std::vector<OverlapLabel>& labels,
                                             int threshold_lo, int threshold_hi) {
  if (threshold_lo > threshold_hi) throw std::invalid_argument("precision_recall: bad sweep range");
  std::map<std::pair<int, int>, bool> label_map;
  long n_true = 0;
  for (const OverlapLabel& l : labels) {
    label_map[std::minmax(l.id_a, l.id_b)] = l.is_true;
    if (l.is_true) ++n_true;
  }
  std::vector<bool> truth(results.size());
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto key = std::minmax(results[i].query_id, results[i].db_id);
    const auto it = label_map.find(key);
    if (it == label_map.end()) {
      throw UnlabeledPairError("no overlap label for pair (" + std::to_string(key.first) + "," +
                               std::to_string(key.second) + ")");
    }
    truth[i] = it->second;
  }

  std::vector<PrPoint> curve;
  curve.reserve(static_cast<std::size_t>(threshold_hi - threshold_lo + 1));
  for (int t = threshold_lo; t <= threshold_hi; ++t) {
    PrPoint pt;
    pt.threshold = t;
    for (std::size_t i = 0; i < results.size(); ++i) {
      const bool predicted = classify(results[i].result, t);
      if (predicted && truth[i]) ++pt.tp;
      if (predicted && !truth[i]) ++pt.fp;
    }
    pt.fn = n_true - pt.tp;
    if (pt.tp + pt.fp > 0) {
      pt.precision = static_cast<double>(pt.tp) / static_cast<double>(pt.tp + pt.fp);
    } else {
      pt.precision = 1.0;
      pt.no_predictions = true;
    }
    pt.recall = (pt.tp + pt.fn > 0) ? static_cast<double>(pt.tp) / static_cast<double>(pt.tp + pt.fn) : 1.0;
    curve.push_back(pt);
  }
  return curve;
}

}  // namespace terrain_loop

#endif
