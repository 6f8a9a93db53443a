#ifndef TERRAIN_LOOP_FORMATS_HPP
#define TERRAIN_LOOP_FORMATS_HPP

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "terrain_loop/errors.hpp"
#include "terrain_loop/evaluation.hpp"
#include "terrain_loop/features.hpp"
#include "terrain_loop/io.hpp"

namespace terrain_loop {

/// One JSON object per line: {query_id, db_id, n, h, theta_rad, tx_m, ty_m,
/// accepted}. A never-accepted result has h = +inf, serialized as null.
inline void write_results_jsonl(std::ostream& out, const std::vector<PairResult>& results) {
  for (const PairResult& pr : results) {
    nlohmann::json j{{"query_id", pr.query_id}, {"db_id", pr.db_id},
                     {"n", pr.result.n},         {"h", pr.result.h},
                     {"theta_rad", pr.result.transform.theta},
                     {"tx_m", pr.result.transform.t.x()},
                     {"ty_m", pr.result.transform.t.y()},
                     {"accepted", pr.result.accepted}};
    out << j.dump() << "\n";
  }
}

inline std::vector<PairResult> read_results_jsonl(std::istream& in) {
  std::vector<PairResult> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
      PairResult pr;
      pr.query_id = j.at("query_id").get<int>();
      pr.db_id = j.at("db_id").get<int>();
      pr.result.n = j.at("n").get<int>();
      pr.result.h = j.at("h").is_null() ? std::numeric_limits<double>::infinity()
                                        : j.at("h").get<double>();
      pr.result.transform.theta = j.at("theta_rad").get<double>();
      pr.result.transform.t = {j.at("tx_m").get<double>(), j.at("ty_m").get<double>()};
      pr.result.accepted = j.at("accepted").get<bool>();
      out.push_back(pr);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("bad result record: ") + e.what(), line_no, 0);
    }
  }
  return out;
}

/// Poses CSV: id,theta,tx,ty,z
inline void write_poses_csv(std::ostream& out, const std::map<int, WorldPose>& poses) {
  out << "id,theta,tx,ty,z\n";
  std::string buf;
  for (const auto& [id, wp] : poses) {
    buf.clear();
    buf += std::to_string(id);
    buf.push_back(',');
    detail::format_double(buf, wp.pose.theta);
    buf.push_back(',');
    detail::format_double(buf, wp.pose.t.x());
    buf.push_back(',');
    detail::format_double(buf, wp.pose.t.y());
    buf.push_back(',');
    detail::format_double(buf, wp.z_offset);
    buf.push_back('\n');
    out << buf;
  }
}

inline std::map<int, WorldPose> read_poses_csv(std::istream& in) {
  std::map<int, WorldPose> out;
  std::string line;
  std::size_t line_no = 0;
  bool header_skipped = false;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view body = detail::trim(line);
    if (body.empty()) continue;
    auto toks = detail::split(body, ',');
    if (!header_skipped) {
      header_skipped = true;
      double probe;
      if (!toks.empty() && !detail::parse_double(detail::trim(toks[0]), probe)) continue;
    }
    if (toks.size() < 5) throw ParseError("poses row needs id,theta,tx,ty,z", line_no, 0);
    double id_d, theta, tx, ty, z;
    if (!detail::parse_double(detail::trim(toks[0]), id_d) ||
        !detail::parse_double(detail::trim(toks[1]), theta) ||
        !detail::parse_double(detail::trim(toks[2]), tx) ||
        !detail::parse_double(detail::trim(toks[3]), ty) ||
        !detail::parse_double(detail::trim(toks[4]), z)) {
      throw ParseError("malformed poses row", line_no, 0);
    }
    WorldPose wp;
    wp.pose.theta = theta;
    wp.pose.t = {tx, ty};
    wp.z_offset = z;
    out[static_cast<int>(id_d)] = wp;
  }
  return out;
}

/// PR CSV: threshold,precision,recall,tp,fp,fn
inline void write_pr_csv(std::ostream& out, const std::vector<PrPoint>& curve) {
  out << "threshold,precision,recall,tp,fp,fn\n";
  std::string buf;
  for (const PrPoint& p : curve) {
    buf.clear();
    buf += std::to_string(p.threshold);
    buf.push_back(',');
    detail::format_double(buf, p.precision);
    buf.push_back(',');
    detail::format_double(buf, p.recall);
    buf.push_back(',');
    buf += std::to_string(p.tp);
    buf.push_back(',');
    buf += std::to_string(p.fp);
    buf.push_back(',');
    buf += std::to_string(p.fn);
    buf.push_back('\n');
    out << buf;
  }
}

/// Labels CSV: pair_a,pair_b,iou,is_true
inline void write_labels_csv(std::ostream& out, const std::vector<OverlapLabel>& labels) {
  out << "pair_a,pair_b,iou,is_true\n";
  std::string buf;
  for (const OverlapLabel& l : labels) {
    buf.clear();
    buf += std::to_string(l.id_a);
    buf.push_back(',');
    buf += std::to_string(l.id_b);
    buf.push_back(',');
    detail::format_double(buf, l.iou);
    buf.push_back(',');
    buf += l.is_true ? '1' : '0';
    buf.push_back('\n');
    out << buf;
  }
}

/// Keypoint CSV: col,row,scale,response
inline void write_keypoints_csv(std::ostream& out, const std::vector<Keypoint>& kps) {
  out << "col,row,scale,response\n";
  std::string buf;
  for (const Keypoint& kp : kps) {
    buf.clear();
    detail::format_double(buf, kp.col);
    buf.push_back(',');
    detail::format_double(buf, kp.row);
    buf.push_back(',');
    detail::format_double(buf, kp.scale);
    buf.push_back(',');
    detail::format_double(buf, kp.response);
    buf.push_back('\n');
    out << buf;
  }
}

inline std::vector<Keypoint> read_keypoints_csv(std::istream& in) {
  std::vector<Keypoint> out;
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view body = detail::trim(line);
    if (body.empty()) continue;
    if (first) {
      first = false;
      continue;  // header
    }
    auto toks = detail::split(body, ',');
    Keypoint kp;
    if (toks.size() != 4 || !detail::parse_double(toks[0], kp.col) ||
        !detail::parse_double(toks[1], kp.row) || !detail::parse_double(toks[2], kp.scale) ||
        !detail::parse_double(toks[3], kp.response)) {
      throw ParseError("malformed keypoint row", line_no, 0);
    }
    out.push_back(kp);
  }
  return out;
}

/// Descriptor blob: uint32 count, uint32 dim, then count*dim little-endian
/// float64 values.
inline void write_descriptors(std::ostream& out, const std::vector<Descriptor>& descs) {
  const std::uint32_t count = static_cast<std::uint32_t>(descs.size());
  const std::uint32_t dim = 64;
  out.write(reinterpret_cast<const char*>(&count), 4);
  out.write(reinterpret_cast<const char*>(&dim), 4);
  for (const Descriptor& d : descs) {
    out.write(reinterpret_cast<const char*>(d.vec.data()), 64 * sizeof(double));
  }
}

inline std::vector<Descriptor> read_descriptors(std::istream& in) {
  std::uint32_t count = 0, dim = 0;
  if (!in.read(reinterpret_cast<char*>(&count), 4) || !in.read(reinterpret_cast<char*>(&dim), 4)) {
    throw IoError("truncated descriptor blob");
  }
  if (dim != 64) throw IoError("unexpected descriptor dimension " + std::to_string(dim));
  std::vector<Descriptor> out(count);
  for (Descriptor& d : out) {
    if (!in.read(reinterpret_cast<char*>(d.vec.data()), 64 * sizeof(double))) {
      throw IoError("truncated descriptor blob");
    }
  }
  return out;
}

}  // namespace terrain_loop

#endif
