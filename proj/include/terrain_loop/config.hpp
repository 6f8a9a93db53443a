#ifndef TERRAIN_LOOP_CONFIG_HPP
#define TERRAIN_LOOP_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "terrain_loop/errors.hpp"
#include "terrain_loop/features.hpp"
#include "terrain_loop/gp.hpp"
#include "terrain_loop/registration.hpp"

namespace terrain_loop {

/// Pipeline configuration. Defaults reproduce the reference operating point:
/// 0.03 m/pixel rendering, 5000-point downsampling, the literal 2*l_k kernel
/// reading, and the n >= 4 acceptance threshold.
struct Config {
  double resolution = 0.03;  // m/pixel
  KernelMode kernel_mode = KernelMode::Literal2Lk;
  double sigma_z_init = 0.02;    // m
  double var_mask_ratio = 0.5;   // tau_v relative to the prior variance
  int downsample_target = 5000;
  int fit_subsample = 400;  // LML fitting subset size (cubic cost guard)
  int max_keypoints = 500;
  double match_ratio = 0.85;
  bool ratio_test = true;
  int ransac_max_iterations = 2000;
  double ransac_inlier_dist = 0.15;  // m
  int ransac_min_inliers_accept = 4;
  double ssd_max = 4e7;  // calibrated on synthetic fixtures, see RansacParams
  bool ssd_normalized = true;  // false: strict raw-sum SSD
  int min_inliers_classify = 4;
  double iou_threshold = 0.3;
  int sweep_lo = 1;
  int sweep_hi = 20;
  std::uint64_t seed = 0;
  std::uint64_t raster_max_pixels = std::uint64_t(4096) * 4096;

  void validate() const {
    if (!(resolution > 0.0)) throw ConfigError("resolution must be > 0");
    if (!(sigma_z_init >= 0.0)) throw ConfigError("sigma_z_init must be >= 0");
    if (!(var_mask_ratio > 0.0)) throw ConfigError("var_mask_ratio must be > 0");
    if (downsample_target < 1) throw ConfigError("downsample_target must be >= 1");
    if (fit_subsample < 3) throw ConfigError("fit_subsample must be >= 3");
    if (max_keypoints < 1) throw ConfigError("max_keypoints must be >= 1");
    if (!(match_ratio > 0.0 && match_ratio <= 1.0)) throw ConfigError("match_ratio must be in (0,1]");
    if (ransac_max_iterations < 1) throw ConfigError("ransac_max_iterations must be >= 1");
    if (!(ransac_inlier_dist > 0.0)) throw ConfigError("ransac_inlier_dist must be > 0");
    if (ransac_min_inliers_accept < 2) throw ConfigError("ransac_min_inliers_accept must be >= 2");
    if (!(ssd_max > 0.0)) throw ConfigError("ssd_max must be > 0");
    if (min_inliers_classify < 0) throw ConfigError("min_inliers_classify must be >= 0");
    if (!(iou_threshold >= 0.0 && iou_threshold <= 1.0)) throw ConfigError("iou_threshold must be in [0,1]");
    if (sweep_lo > sweep_hi) throw ConfigError("sweep range is empty");
    if (raster_max_pixels < 1) throw ConfigError("raster_max_pixels must be >= 1");
  }

  DetectorParams detector_params() const {
    DetectorParams p;
    p.max_keypoints = max_keypoints;
    p.var_mask_ratio = var_mask_ratio;
    return p;
  }

  MatchParams match_params() const { return {match_ratio, ratio_test}; }

  RansacParams ransac_params(std::uint64_t pair_seed) const {
    return {ransac_max_iterations, ransac_inlier_dist, ransac_min_inliers_accept, ssd_max, pair_seed};
  }

  SsdOptions ssd_options() const { return {ssd_normalized, 100}; }
};

inline const char* kernel_mode_name(KernelMode mode) {
  return mode == KernelMode::Literal2Lk ? "literal-2lk" : "squared-lengthscale";
}

inline KernelMode kernel_mode_from_name(const std::string& name) {
  if (name == "literal-2lk") return KernelMode::Literal2Lk;
  if (name == "squared-lengthscale") return KernelMode::SquaredLengthscale;
  throw ConfigError("unknown kernel mode '" + name + "'");
}

inline nlohmann::json to_json(const Config& c) {
  return nlohmann::json{{"resolution", c.resolution},
                        {"kernel_mode", kernel_mode_name(c.kernel_mode)},
                        {"sigma_z_init", c.sigma_z_init},
                        {"var_mask_ratio", c.var_mask_ratio},
                        {"downsample_target", c.downsample_target},
                        {"fit_subsample", c.fit_subsample},
                        {"max_keypoints", c.max_keypoints},
                        {"match_ratio", c.match_ratio},
                        {"ratio_test", c.ratio_test},
                        {"ransac_max_iterations", c.ransac_max_iterations},
                        {"ransac_inlier_dist", c.ransac_inlier_dist},
                        {"ransac_min_inliers_accept", c.ransac_min_inliers_accept},
                        {"ssd_max", c.ssd_max},
                        {"ssd_normalized", c.ssd_normalized},
                        {"min_inliers_classify", c.min_inliers_classify},
                        {"iou_threshold", c.iou_threshold},
                        {"sweep_lo", c.sweep_lo},
                        {"sweep_hi", c.sweep_hi},
                        {"seed", c.seed},
                        {"raster_max_pixels", c.raster_max_pixels}};
}

/// Strict parse: unknown keys are rejected.
inline Config config_from_json(const nlohmann::json& j) {
  Config c;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "resolution") c.resolution = value.get<double>();
      else if (key == "kernel_mode") c.kernel_mode = kernel_mode_from_name(value.get<std::string>());
      else if (key == "sigma_z_init") c.sigma_z_init = value.get<double>();
      else if (key == "var_mask_ratio") c.var_mask_ratio = value.get<double>();
      else if (key == "downsample_target") c.downsample_target = value.get<int>();
      else if (key == "fit_subsample") c.fit_subsample = value.get<int>();
      else if (key == "max_keypoints") c.max_keypoints = value.get<int>();
      else if (key == "match_ratio") c.match_ratio = value.get<double>();
      else if (key == "ratio_test") c.ratio_test = value.get<bool>();
      else if (key == "ransac_max_iterations") c.ransac_max_iterations = value.get<int>();
      else if (key == "ransac_inlier_dist") c.ransac_inlier_dist = value.get<double>();
      else if (key == "ransac_min_inliers_accept") c.ransac_min_inliers_accept = value.get<int>();
      else if (key == "ssd_max") c.ssd_max = value.get<double>();
      else if (key == "ssd_normalized") c.ssd_normalized = value.get<bool>();
      else if (key == "min_inliers_classify") c.min_inliers_classify = value.get<int>();
      else if (key == "iou_threshold") c.iou_threshold = value.get<double>();
      else if (key == "sweep_lo") c.sweep_lo = value.get<int>();
      else if (key == "sweep_hi") c.sweep_hi = value.get<int>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "raster_max_pixels") c.raster_max_pixels = value.get<std::uint64_t>();
      else throw ConfigError("unknown config key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  c.validate();
  return c;
}

inline Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config parse failed: ") + e.what());
  }
  return config_from_json(j);
}

/// FNV-1a over the canonical (key-sorted) JSON form.
inline std::uint64_t config_hash(const Config& c) {
  const std::string s = to_json(c).dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace terrain_loop

#endif
