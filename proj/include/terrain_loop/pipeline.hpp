#ifndef TERRAIN_LOOP_PIPELINE_HPP
#define TERRAIN_LOOP_PIPELINE_HPP

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "terrain_loop/config.hpp"
#include "terrain_loop/evaluation.hpp"
#include "terrain_loop/features.hpp"
#include "terrain_loop/formats.hpp"
#include "terrain_loop/gp.hpp"
#include "terrain_loop/gp_fit.hpp"
#include "terrain_loop/io.hpp"
#include "terrain_loop/raster.hpp"
#include "terrain_loop/raster_io.hpp"
#include "terrain_loop/registration.hpp"

namespace terrain_loop {

namespace stage_seed {
// Fixed substream tags so per-entry randomness is a function of (seed, id)
// alone, never of build order.
constexpr std::uint64_t kDownsample = 0xd0;
constexpr std::uint64_t kFitSubsample = 0xf1;
constexpr std::uint64_t kRansac = 0x4a;
}  // namespace stage_seed

struct DatabaseEntry {
  Submap submap;  // downsampled cloud, i.e. the GP training data
  GpModel model;  // empty when the entry was loaded from disk
  GradientMap map;
  FeatureSet features;
  bool has_model = false;
};

/// Per-submap artifacts plus pairwise matching over the whole database.
class SubmapDatabase {
 public:
  explicit SubmapDatabase(Config config) : config_(std::move(config)) { config_.validate(); }

  const Config& config() const { return config_; }
  void set_seed(std::uint64_t seed) { config_.seed = seed; }
  std::size_t size() const { return entries_.size(); }

  std::vector<int> ids() const {
    std::vector<int> out;
    out.reserve(entries_.size());
    for (const auto& [id, e] : entries_) out.push_back(id);
    return out;
  }

  const DatabaseEntry& entry(int id) const {
    const auto it = entries_.find(id);
    if (it == entries_.end()) throw UnknownIdError("unknown submap id " + std::to_string(id));
    return it->second;
  }

  /// downsample -> fit hyperparameters -> train -> render -> detect/describe.
  void build_entry(const Submap& submap, std::ostream* log = nullptr, int threads = 0) {
    if (entries_.count(submap.id)) {
      throw DuplicateIdError("submap id " + std::to_string(submap.id) + " already built");
    }
    try {
      entries_.emplace(submap.id, build_artifacts(submap, log, threads));
    } catch (const DuplicateIdError&) {
      throw;
    } catch (const Error& e) {
      throw Error("submap " + std::to_string(submap.id) + ": " + e.what());
    }
  }

  /// Matches the query entry against every other entry, ascending by id.
  std::vector<PairResult> match_query(int query_id) const {
    const DatabaseEntry& q = entry(query_id);
    std::vector<PairResult> out;
    for (const auto& [db_id, d] : entries_) {
      if (db_id == query_id) continue;
      out.push_back(match_pair(query_id, q, db_id, d));
    }
    return out;
  }

  /// One result per unordered pair; the lower id plays the query role.
  std::vector<PairResult> match_all_pairs() const {
    std::vector<PairResult> out;
    for (auto qit = entries_.begin(); qit != entries_.end(); ++qit) {
      for (auto dit = std::next(qit); dit != entries_.end(); ++dit) {
        out.push_back(match_pair(qit->first, qit->second, dit->first, dit->second));
      }
    }
    return out;
  }

  void save(const std::filesystem::path& dir) const {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    nlohmann::json manifest{{"format_version", 1},
                            {"config", to_json(config_)},
                            {"config_hash", config_hash_hex(config_)},
                            {"entries", ids()}};
    for (const auto& [id, e] : entries_) {
      const fs::path edir = dir / std::to_string(id);
      fs::create_directories(edir);
      {
        std::ofstream out(edir / "cloud.xyz", std::ios::binary);
        write_xyz(out, e.submap.cloud);
      }
      if (e.has_model) {
        nlohmann::json mj{{"sigma_k", e.model.hyper.sigma_k},
                          {"l_k", e.model.hyper.l_k},
                          {"sigma_z", e.model.hyper.sigma_z},
                          {"kernel_mode", kernel_mode_name(e.model.mode)},
                          {"z_offset", e.model.z_offset},
                          {"jitter", e.model.jitter},
                          {"n", e.model.n()}};
        std::ofstream out(edir / "model.json");
        out << mj.dump(2) << "\n";
      }
      write_raster_f32(edir / "grad.f32", e.map, RasterChannel::Grad);
      write_raster_f32(edir / "var.f32", e.map, RasterChannel::Var);
      {
        std::ofstream out(edir / "keypoints.csv", std::ios::binary);
        write_keypoints_csv(out, e.features.keypoints);
      }
      {
        std::ofstream out(edir / "descriptors.bin", std::ios::binary);
        write_descriptors(out, e.features.descriptors);
      }
    }
    std::ofstream out(dir / "manifest.json", std::ios::binary);
    if (!out) throw IoError("cannot write manifest in '" + dir.string() + "'");
    out << manifest.dump(2) << "\n";
  }

  /// Loads rasters, features and clouds; GP models are not rehydrated (they
  /// are not needed for matching or evaluation).
  static SubmapDatabase load(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    std::ifstream in(dir / "manifest.json");
    if (!in) throw IoError("cannot open manifest in '" + dir.string() + "'");
    nlohmann::json manifest = nlohmann::json::parse(in);
    SubmapDatabase db(config_from_json(manifest.at("config")));
    for (const auto& idj : manifest.at("entries")) {
      const int id = idj.get<int>();
      const fs::path edir = dir / std::to_string(id);
      DatabaseEntry e;
      e.submap.id = id;
      e.submap.cloud = load_pointcloud(edir / "cloud.xyz");
      read_raster_f32(edir / "grad.f32", e.map, RasterChannel::Grad);
      read_raster_f32(edir / "var.f32", e.map, RasterChannel::Var);
      {
        std::ifstream kin(edir / "keypoints.csv");
        if (!kin) throw IoError("missing keypoints for entry " + std::to_string(id));
        e.features.keypoints = read_keypoints_csv(kin);
      }
      {
        std::ifstream din(edir / "descriptors.bin", std::ios::binary);
        if (!din) throw IoError("missing descriptors for entry " + std::to_string(id));
        e.features.descriptors = read_descriptors(din);
      }
      db.entries_.emplace(id, std::move(e));
    }
    return db;
  }

  static std::string config_hash_hex(const Config& c) {
    char buf[19];
    std::snprintf(buf, sizeof(buf), "0x%016llx", static_cast<unsigned long long>(config_hash(c)));
    return buf;
  }

 private:
  DatabaseEntry build_artifacts(const Submap& submap, std::ostream* log, int threads) const {
    using clock = std::chrono::steady_clock;
    auto elapsed_ms = [](clock::time_point a, clock::time_point b) {
      return std::chrono::duration<double, std::milli>(b - a).count();
    };
    DatabaseEntry e;
    e.submap.id = submap.id;
    e.submap.world_pose = submap.world_pose;

    const auto t0 = clock::now();
    e.submap.cloud = downsample(submap.cloud, static_cast<std::size_t>(config_.downsample_target),
                                derive_seed(config_.seed, stage_seed::kDownsample,
                                            static_cast<std::uint64_t>(submap.id)));

    const auto t1 = clock::now();
    const PointCloud fit_cloud =
        downsample(e.submap.cloud, static_cast<std::size_t>(config_.fit_subsample),
                   derive_seed(config_.seed, stage_seed::kFitSubsample,
                               static_cast<std::uint64_t>(submap.id)));
    Hyperparams init;
    init.sigma_k = std::max(empirical_z_variance(fit_cloud), 1e-8);
    init.l_k = config_.kernel_mode == KernelMode::Literal2Lk ? 0.01 : 0.1;
    init.sigma_z = config_.sigma_z_init;
    const Hyperparams hyper = fit_hyperparameters(fit_cloud, init, config_.kernel_mode);

    const auto t2 = clock::now();
    e.model = train(e.submap.cloud, hyper, config_.kernel_mode);
    e.has_model = true;

    const auto t3 = clock::now();
    RenderOptions ropt;
    ropt.max_pixels = config_.raster_max_pixels;
    ropt.threads = threads;
    e.map = render(e.model, bounding_box(e.submap.cloud), config_.resolution, ropt);
    // The rasters are the product; dropping the factor bounds entry memory
    // (it is O(n^2) while everything else is O(n)).
    e.model.chol.resize(0, 0);

    const auto t4 = clock::now();
    e.features.keypoints = detect(e.map, config_.detector_params());
    e.features.descriptors = describe_all(e.map, e.features.keypoints);
    const auto t5 = clock::now();

    if (log) {
      *log << "submap " << submap.id << ": downsample " << elapsed_ms(t0, t1) << " ms, fit "
           << elapsed_ms(t1, t2) << " ms, train " << elapsed_ms(t2, t3) << " ms, render "
           << elapsed_ms(t3, t4) << " ms (" << e.map.width << "x" << e.map.height << "), features "
           << elapsed_ms(t4, t5) << " ms (" << e.features.keypoints.size() << " keypoints)\n";
    }
    return e;
  }

  static double empirical_z_variance(const PointCloud& cloud) {
    double mean = 0.0;
    for (const Point3& p : cloud.points) mean += p.z;
    mean /= static_cast<double>(cloud.count());
    double var = 0.0;
    for (const Point3& p : cloud.points) var += (p.z - mean) * (p.z - mean);
    return var / static_cast<double>(cloud.count());
  }

  PairResult match_pair(int query_id, const DatabaseEntry& q, int db_id,
                        const DatabaseEntry& d) const {
    const std::vector<Association> assoc =
        match(q.features, d.features, q.map, d.map, config_.match_params());
    const std::uint64_t pair_seed =
        derive_seed(derive_seed(config_.seed, stage_seed::kRansac, static_cast<std::uint64_t>(query_id)),
                    static_cast<std::uint64_t>(db_id));
    const MatchResult result =
        ransac_match(assoc, q.map, d.map, config_.ransac_params(pair_seed), config_.ssd_options());
    return {query_id, db_id, result};
  }

  Config config_;
  std::map<int, DatabaseEntry> entries_;
};

}  // namespace terrain_loop

#endif
