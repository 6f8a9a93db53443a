// Command-line front end: build submap databases, match them pairwise, and
// evaluate precision-recall against overlap labels.

#include <CLI11.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "terrain_loop/terrain_loop.hpp"

namespace fs = std::filesystem;
using namespace terrain_loop;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitInput = 2;
constexpr int kExitUnknownId = 3;
constexpr int kExitLabeling = 4;

struct BuildArgs {
  std::vector<std::string> inputs;
  std::string out_dir;
  std::string config_file;
  bool dump_rasters = false;
  int threads = 0;
};

struct FlagOverrides {
  CLI::App* cmd = nullptr;
  double resolution = 0.03;
  std::string kernel_mode = "literal-2lk";
  double sigma_z = 0.02;
  double var_mask_ratio = 0.5;
  int downsample = 5000;
  int fit_subsample = 400;
  std::uint64_t seed = 0;
  int ransac_iterations = 2000;
  double inlier_dist = 0.15;
  int min_inliers_accept = 4;
  double ssd_max = 4e7;
  bool no_ratio_test = false;
  bool ssd_raw = false;

  void attach(CLI::App* c) {
    cmd = c;
    c->add_option("--resolution", resolution, "Raster resolution, m/pixel");
    c->add_option("--kernel-mode", kernel_mode, "literal-2lk | squared-lengthscale");
    c->add_option("--sigma-z", sigma_z, "Observation noise stddev init, m");
    c->add_option("--var-mask-ratio", var_mask_ratio, "Keypoint variance mask, relative to prior");
    c->add_option("--downsample", downsample, "Point count after downsampling");
    c->add_option("--fit-subsample", fit_subsample, "Subset size for hyperparameter fitting");
    c->add_option("--seed", seed, "Master seed");
    c->add_option("--ransac-iterations", ransac_iterations, "RANSAC iteration count");
    c->add_option("--inlier-dist", inlier_dist, "RANSAC inlier distance, m");
    c->add_option("--min-inliers-accept", min_inliers_accept, "RANSAC acceptance inlier count");
    c->add_option("--ssd-max", ssd_max, "Maximum accepted SSD metric");
    c->add_flag("--no-ratio-test", no_ratio_test, "Disable the descriptor ratio test");
    c->add_flag("--ssd-raw", ssd_raw, "Raw SSD sum instead of the per-pixel normalization");
  }

  // Flags beat the config file, which beats defaults.
  void apply(Config& cfg) const {
    if (cmd->count("--resolution")) cfg.resolution = resolution;
    if (cmd->count("--kernel-mode")) cfg.kernel_mode = kernel_mode_from_name(kernel_mode);
    if (cmd->count("--sigma-z")) cfg.sigma_z_init = sigma_z;
    if (cmd->count("--var-mask-ratio")) cfg.var_mask_ratio = var_mask_ratio;
    if (cmd->count("--downsample")) cfg.downsample_target = downsample;
    if (cmd->count("--fit-subsample")) cfg.fit_subsample = fit_subsample;
    if (cmd->count("--seed")) cfg.seed = seed;
    if (cmd->count("--ransac-iterations")) cfg.ransac_max_iterations = ransac_iterations;
    if (cmd->count("--inlier-dist")) cfg.ransac_inlier_dist = inlier_dist;
    if (cmd->count("--min-inliers-accept")) cfg.ransac_min_inliers_accept = min_inliers_accept;
    if (cmd->count("--ssd-max")) cfg.ssd_max = ssd_max;
    if (no_ratio_test) cfg.ratio_test = false;
    if (ssd_raw) cfg.ssd_normalized = false;
    cfg.validate();
  }
};

int run_build(const BuildArgs& args, const FlagOverrides& flags) {
  Config cfg;
  if (!args.config_file.empty()) cfg = load_config(args.config_file);
  flags.apply(cfg);

  SubmapDatabase db(cfg);
  int next_id = 0;
  for (const std::string& input : args.inputs) {
    if (!fs::exists(input)) {
      std::cerr << "error: input file '" << input << "' does not exist\n";
      return kExitInput;
    }
    Submap submap;
    submap.id = next_id++;
    submap.cloud = load_pointcloud(input);
    db.build_entry(submap, &std::cerr, args.threads);
  }
  db.save(args.out_dir);
  if (args.dump_rasters) {
    for (int id : db.ids()) {
      const DatabaseEntry& e = db.entry(id);
      const fs::path edir = fs::path(args.out_dir) / std::to_string(id);
      write_raster_pgm(edir / "grad.pgm", e.map, RasterChannel::Grad);
      write_raster_pgm(edir / "var.pgm", e.map, RasterChannel::Var);
    }
  }
  std::cerr << "built " << db.size() << " entries -> " << args.out_dir << "\n";
  return kExitOk;
}

struct MatchArgs {
  std::string db_dir;
  std::string out_file;
  std::string config_file;
  int query_id = -1;
  bool all_pairs = false;
  int min_inliers = -1;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

int run_match(const MatchArgs& args) {
  SubmapDatabase db = SubmapDatabase::load(args.db_dir);
  if (!args.config_file.empty()) {
    const Config external = load_config(args.config_file);
    if (config_hash(external) != config_hash(db.config())) {
      std::cerr << "error: config hash mismatch with database manifest\n";
      return kExitInput;
    }
  }
  if (args.seed_set) db.set_seed(args.seed);  // affects only the RANSAC draws here
  const Config& cfg = db.config();

  std::vector<PairResult> results;
  if (args.all_pairs) {
    results = db.match_all_pairs();
  } else {
    results = db.match_query(args.query_id);
  }
  const int min_inliers = args.min_inliers >= 0 ? args.min_inliers : cfg.min_inliers_classify;
  for (PairResult& pr : results) {
    pr.result.accepted = classify(pr.result, min_inliers);
  }

  std::ofstream out(args.out_file, std::ios::binary);
  if (!out) {
    std::cerr << "error: cannot write '" << args.out_file << "'\n";
    return kExitInput;
  }
  write_results_jsonl(out, results);
  std::cerr << "wrote " << results.size() << " match records -> " << args.out_file << "\n";
  return kExitOk;
}

struct EvalArgs {
  std::string db_dir;
  std::string results_file;
  std::string poses_file;
  std::string out_file;
  std::string labels_out;
  double iou_threshold = 0.3;
  std::string sweep = "1:20";
  bool exclude_adjacent = false;
};

int run_eval(const EvalArgs& args) {
  std::ifstream rin(args.results_file);
  if (!rin) {
    std::cerr << "error: cannot open results '" << args.results_file << "'\n";
    return kExitInput;
  }
  const std::vector<PairResult> results = read_results_jsonl(rin);

  std::ifstream pin(args.poses_file);
  if (!pin) {
    std::cerr << "error: cannot open poses '" << args.poses_file << "'\n";
    return kExitInput;
  }
  const std::map<int, WorldPose> poses = read_poses_csv(pin);

  SubmapDatabase db = SubmapDatabase::load(args.db_dir);
  std::vector<Submap> submaps;
  for (int id : db.ids()) {
    Submap s = db.entry(id).submap;
    const auto it = poses.find(id);
    if (it == poses.end()) throw MissingPoseError("no pose for submap " + std::to_string(id));
    s.world_pose = it->second;
    submaps.push_back(std::move(s));
  }

  int lo = 0, hi = 0;
  if (std::sscanf(args.sweep.c_str(), "%d:%d", &lo, &hi) != 2 || lo > hi) {
    std::cerr << "error: bad sweep range '" << args.sweep << "' (want lo:hi)\n";
    return kExitInput;
  }

  std::vector<OverlapLabel> labels = label_pairs(submaps, args.iou_threshold);
  std::vector<PairResult> scored = results;
  if (args.exclude_adjacent) {
    labels = exclude_adjacent(std::move(labels));
    scored = exclude_adjacent(std::move(scored));
  }
  const std::vector<PrPoint> curve = precision_recall(scored, labels, lo, hi);

  std::ofstream out(args.out_file, std::ios::binary);
  if (!out) {
    std::cerr << "error: cannot write '" << args.out_file << "'\n";
    return kExitInput;
  }
  write_pr_csv(out, curve);
  if (!args.labels_out.empty()) {
    std::ofstream lout(args.labels_out, std::ios::binary);
    write_labels_csv(lout, labels);
  }
  std::cerr << "wrote " << curve.size() << " PR rows -> " << args.out_file << "\n";
  return kExitOk;
}

struct SynthArgs {
  std::string out_dir;
  std::uint64_t terrain_seed = 1;
  std::uint64_t sample_seed = 2;
  double extent = 8.0;
  double base_amp = 0.08;
  double base_corr = 2.0;
  int bumps = 90;
  double bump_amp_min = 0.05, bump_amp_max = 0.30;
  double bump_radius_min = 0.10, bump_radius_max = 0.40;
  double noise = 0.02;
  int points = 5000;
  double window = 4.0;
  double overlap = 0.5;
  double yaw_deg = 0.0;
  int count = 0;  // > 0: database mode
  std::string format = "xyz";
};

TerrainSpec terrain_spec_from(const SynthArgs& args) {
  TerrainSpec spec;
  spec.extent_x = spec.extent_y = args.extent;
  spec.base_amplitude = args.base_amp;
  spec.base_correlation = args.base_corr;
  spec.bump_count = args.bumps;
  spec.bump_amp_min = args.bump_amp_min;
  spec.bump_amp_max = args.bump_amp_max;
  spec.bump_radius_min = args.bump_radius_min;
  spec.bump_radius_max = args.bump_radius_max;
  spec.noise_sigma = args.noise;
  spec.seed = args.terrain_seed;
  return spec;
}

std::string cloud_filename(const std::string& stem, const std::string& format) {
  return stem + "." + format;
}

int run_synth(const SynthArgs& args) {
  if (args.format != "xyz" && args.format != "ply" && args.format != "csv") {
    std::cerr << "error: unknown cloud format '" << args.format << "'\n";
    return kExitInput;
  }
  const TerrainSpec spec = terrain_spec_from(args);
  spec.validate();
  const Terrain terrain = generate_terrain(spec);
  fs::create_directories(args.out_dir);
  const fs::path out_dir(args.out_dir);

  if (args.count <= 0) {
    // Pair mode: two windows sharing `overlap` of their area, query rotated.
    const double cx = 0.5 * spec.extent_x, cy = 0.5 * spec.extent_y;
    const double w = args.window;
    const double shift = (1.0 - args.overlap) * w;
    const Window wd{cx - w / 2, cy - w / 2, cx + w / 2, cy + w / 2};
    const Window wq{wd.x0 + shift, wd.y0, wd.x1 + shift, wd.y1};
    const double yaw = args.yaw_deg * M_PI / 180.0;
    const GroundTruthPair pair = sample_pair(terrain, wq, wd, static_cast<std::size_t>(args.points),
                                             args.noise, args.sample_seed, yaw);
    save_pointcloud(out_dir / cloud_filename("query", args.format), pair.submap_q.cloud);
    save_pointcloud(out_dir / cloud_filename("database", args.format), pair.submap_d.cloud);

    nlohmann::json gt{{"theta", pair.true_transform.theta},
                      {"tx", pair.true_transform.t.x()},
                      {"ty", pair.true_transform.t.y()},
                      {"overlap_fraction", pair.overlap_fraction},
                      {"seeds", {{"terrain", args.terrain_seed}, {"sample", args.sample_seed}}}};
    std::ofstream out(out_dir / "ground_truth.json", std::ios::binary);
    out << gt.dump(2) << "\n";
    std::cerr << "wrote pair fixture -> " << args.out_dir << "\n";
    return kExitOk;
  }

  // Database mode: windows on a seeded random walk, one submap each.
  std::map<int, WorldPose> poses;
  auto rng = substream(args.sample_seed, 0xDB);
  std::uniform_real_distribution<double> ustep(-0.35 * args.window, 0.35 * args.window);
  std::uniform_real_distribution<double> uyaw(-M_PI, M_PI);
  double cx = 0.5 * spec.extent_x, cy = 0.5 * spec.extent_y;
  const double w = args.window;
  for (int i = 0; i < args.count; ++i) {
    if (i > 0) {
      cx = std::clamp(cx + ustep(rng), w / 2, spec.extent_x - w / 2);
      cy = std::clamp(cy + ustep(rng), w / 2, spec.extent_y - w / 2);
    }
    const double yaw = uyaw(rng);
    const Window win{cx - w / 2, cy - w / 2, cx + w / 2, cy + w / 2};
    GroundTruthPair pair = sample_pair(terrain, win, win, static_cast<std::size_t>(args.points),
                                       args.noise, derive_seed(args.sample_seed, static_cast<std::uint64_t>(i)),
                                       yaw);
    char name[32];
    std::snprintf(name, sizeof(name), "submap_%03d", i);
    save_pointcloud(out_dir / cloud_filename(name, args.format), pair.submap_q.cloud);
    poses[i] = *pair.submap_q.world_pose;
  }
  std::ofstream pout(out_dir / "poses.csv", std::ios::binary);
  write_poses_csv(pout, poses);
  std::cerr << "wrote " << args.count << " submaps -> " << args.out_dir << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Loop-closure detection on GP gradient maps of terrain submaps"};
  app.require_subcommand(1);

  BuildArgs build_args;
  FlagOverrides build_flags;
  CLI::App* build = app.add_subcommand("build", "Build a submap database from point-cloud files");
  build->add_option("inputs", build_args.inputs, "Point-cloud files (xyz/csv/ply)")->required();
  build->add_option("--out", build_args.out_dir, "Output database directory")->required();
  build->add_option("--config", build_args.config_file, "JSON config file");
  build->add_flag("--dump-rasters", build_args.dump_rasters, "Also write PGM previews");
  build->add_option("--threads", build_args.threads, "Worker thread cap");
  build_flags.attach(build);

  MatchArgs match_args;
  CLI::App* match_cmd = app.add_subcommand("match", "Match database entries pairwise");
  match_cmd->add_option("db", match_args.db_dir, "Database directory")->required();
  match_cmd->add_option("--out", match_args.out_file, "Output JSON-lines file")->required();
  match_cmd->add_option("--config", match_args.config_file, "Config file to verify against the manifest");
  CLI::Option* qopt = match_cmd->add_option("--query", match_args.query_id, "Query submap id");
  match_cmd->add_flag("--all-pairs", match_args.all_pairs, "Match every unordered pair");
  match_cmd->add_option("--min-inliers", match_args.min_inliers, "Classification threshold");
  CLI::Option* sopt = match_cmd->add_option("--seed", match_args.seed, "Override the RANSAC seed");

  EvalArgs eval_args;
  CLI::App* eval_cmd = app.add_subcommand("eval", "Precision-recall over an inlier-threshold sweep");
  eval_cmd->add_option("db", eval_args.db_dir, "Database directory")->required();
  eval_cmd->add_option("--results", eval_args.results_file, "Match results JSON-lines")->required();
  eval_cmd->add_option("--poses", eval_args.poses_file, "Poses CSV (id,theta,tx,ty,z)")->required();
  eval_cmd->add_option("--out", eval_args.out_file, "Output PR CSV")->required();
  eval_cmd->add_option("--labels-out", eval_args.labels_out, "Optional labels CSV dump");
  eval_cmd->add_option("--iou-threshold", eval_args.iou_threshold, "True-match IoU threshold");
  eval_cmd->add_option("--sweep", eval_args.sweep, "Inlier threshold sweep lo:hi");
  eval_cmd->add_flag("--exclude-adjacent", eval_args.exclude_adjacent,
                     "Drop consecutive-id pairs from the evaluation");

  SynthArgs synth_args;
  CLI::App* synth_cmd = app.add_subcommand("synth", "Generate synthetic terrain fixtures");
  synth_cmd->add_option("--out", synth_args.out_dir, "Output directory")->required();
  synth_cmd->add_option("--terrain-seed", synth_args.terrain_seed, "Terrain seed");
  synth_cmd->add_option("--sample-seed", synth_args.sample_seed, "Sampling seed");
  synth_cmd->add_option("--extent", synth_args.extent, "Terrain extent, m");
  synth_cmd->add_option("--base-amp", synth_args.base_amp, "Base surface amplitude, m");
  synth_cmd->add_option("--base-corr", synth_args.base_corr, "Base surface correlation length, m");
  synth_cmd->add_option("--bumps", synth_args.bumps, "Bump count");
  synth_cmd->add_option("--bump-amp-min", synth_args.bump_amp_min, "Bump amplitude range low, m");
  synth_cmd->add_option("--bump-amp-max", synth_args.bump_amp_max, "Bump amplitude range high, m");
  synth_cmd->add_option("--bump-radius-min", synth_args.bump_radius_min, "Bump radius range low, m");
  synth_cmd->add_option("--bump-radius-max", synth_args.bump_radius_max, "Bump radius range high, m");
  synth_cmd->add_option("--noise", synth_args.noise, "Vertical noise sigma, m");
  synth_cmd->add_option("--points", synth_args.points, "Points per cloud");
  synth_cmd->add_option("--window", synth_args.window, "Sampling window side, m");
  synth_cmd->add_option("--overlap", synth_args.overlap, "Pair window overlap fraction");
  synth_cmd->add_option("--yaw", synth_args.yaw_deg, "Query yaw, degrees");
  synth_cmd->add_option("--count", synth_args.count, "Database mode: submap count");
  synth_cmd->add_option("--format", synth_args.format, "Cloud file format: xyz|ply|csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitInput;
  }

  try {
    if (build->parsed()) return run_build(build_args, build_flags);
    if (match_cmd->parsed()) {
      if (!match_args.all_pairs && qopt->count() == 0) {
        std::cerr << "error: match needs --query ID or --all-pairs\n";
        return kExitInput;
      }
      match_args.seed_set = sopt->count() > 0;
      return run_match(match_args);
    }
    if (eval_cmd->parsed()) return run_eval(eval_args);
    if (synth_cmd->parsed()) return run_synth(synth_args);
  } catch (const UnknownIdError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUnknownId;
  } catch (const UnlabeledPairError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitLabeling;
  } catch (const MissingPoseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitLabeling;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const EmptyCloudError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const NonFiniteValueError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitInternal;
}
