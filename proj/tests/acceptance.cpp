// Acceptance suite: runs every release criterion at its stated tolerance and
// prints one pass/fail line per criterion. Exit code is the failure count.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "support/oracles.hpp"
#include "terrain_loop/terrain_loop.hpp"

namespace fs = std::filesystem;
using namespace terrain_loop;
using clock_type = std::chrono::steady_clock;

namespace {

struct CheckFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define REQUIRE_MSG(cond, msg)            \
  do {                                    \
    if (!(cond)) {                        \
      std::ostringstream oss_;            \
      oss_ << msg;                        \
      throw CheckFailure(oss_.str());     \
    }                                     \
  } while (0)

double seconds_since(clock_type::time_point start) {
  return std::chrono::duration<double>(clock_type::now() - start).count();
}

std::string fmt(double v) {
  std::ostringstream oss;
  oss.precision(3);
  oss << v;
  return oss.str();
}

// --- 1: Cholesky-path inference vs dense-direct-inverse oracle --------------

std::string gp_oracle_equivalence() {
  const auto start = clock_type::now();
  std::mt19937_64 rng(2024);
  double max_err = 0.0;
  for (int inst = 0; inst < 50; ++inst) {
    std::uniform_int_distribution<int> un(1, 50);
    const int n = un(rng);
    const PointCloud cloud = test::random_cloud(rng, static_cast<std::size_t>(n));
    const Hyperparams hyper = test::random_hyper(rng);
    const GpModel model = train(cloud, hyper);
    const test::DenseGpOracle oracle(cloud, hyper);
    std::uniform_real_distribution<double> u(-0.5, 2.5);
    for (int q = 0; q < 20; ++q) {
      const Eigen::Vector2d query(u(rng), u(rng));
      const Prediction p = infer_elevation(model, query);
      max_err = std::max(max_err, std::abs(p.mean - oracle.mean(query)));
      max_err = std::max(max_err, std::abs(p.variance - std::max(0.0, oracle.variance(query))));
      const Eigen::Vector2d g = infer_gradient(model, query);
      max_err = std::max(max_err, (g - oracle.gradient(query)).cwiseAbs().maxCoeff());
    }
  }
  const double elapsed = seconds_since(start);
  REQUIRE_MSG(max_err <= 1e-9, "max abs error " << max_err << " > 1e-9");
  REQUIRE_MSG(elapsed < 10.0, "runtime " << elapsed << " s >= 10 s");
  return "max err " + fmt(max_err) + ", " + fmt(elapsed) + " s";
}

// --- 2: analytic gradient vs central finite differences ---------------------

std::string gradient_operator_correctness() {
  const auto start = clock_type::now();
  std::mt19937_64 rng(31337);
  const PointCloud cloud = test::random_cloud(rng, 200);
  const GpModel model = train(cloud, Hyperparams{0.5, 0.05, 0.05});
  std::uniform_real_distribution<double> u(0.2, 1.8);
  const double h = 1e-4;
  double max_err = 0.0;
  for (int q = 0; q < 100; ++q) {
    const Eigen::Vector2d query(u(rng), u(rng));
    const Eigen::Vector2d g = infer_gradient(model, query);
    const double fd_x = (infer_elevation(model, {query.x() + h, query.y()}).mean -
                         infer_elevation(model, {query.x() - h, query.y()}).mean) /
                        (2 * h);
    const double fd_y = (infer_elevation(model, {query.x(), query.y() + h}).mean -
                         infer_elevation(model, {query.x(), query.y() - h}).mean) /
                        (2 * h);
    max_err = std::max({max_err, std::abs(g.x() - fd_x), std::abs(g.y() - fd_y)});
  }
  const double elapsed = seconds_since(start);
  REQUIRE_MSG(max_err <= 1e-4, "max abs error " << max_err << " > 1e-4");
  REQUIRE_MSG(elapsed < 10.0, "runtime " << elapsed << " s >= 10 s");
  return "max err " + fmt(max_err) + ", " + fmt(elapsed) + " s";
}

// --- 3: posterior variance bounds -------------------------------------------

std::string variance_bounds() {
  const auto start = clock_type::now();
  std::mt19937_64 rng(777);
  const PointCloud cloud = test::random_cloud(rng, 300);
  const Hyperparams hyper{0.8, 0.04, 0.05};
  const GpModel model = train(cloud, hyper);
  std::uniform_real_distribution<double> u(-2.0, 4.0);
  double lo = 1e300, hi = -1e300;
  for (int q = 0; q < 10000; ++q) {
    const double var = infer_elevation(model, {u(rng), u(rng)}).variance;
    lo = std::min(lo, var);
    hi = std::max(hi, var);
  }
  REQUIRE_MSG(lo >= 0.0, "variance " << lo << " < 0");
  REQUIRE_MSG(hi <= hyper.sigma_k + 1e-9, "variance " << hi << " > sigma_k + 1e-9");
  // far field: > 10 length-scales (sqrt(l_k) = 0.2 m) from every training point
  const double far_var = infer_elevation(model, {2.0 + 50.0, 2.0 + 50.0}).variance;
  REQUIRE_MSG(std::abs(far_var - hyper.sigma_k) <= 1e-6 * hyper.sigma_k,
              "far-field variance " << far_var << " not within 1e-6*sigma_k of " << hyper.sigma_k);
  const double elapsed = seconds_since(start);
  REQUIRE_MSG(elapsed < 5.0, "runtime " << elapsed << " s >= 5 s");
  return "range [" + fmt(lo) + ", " + fmt(hi) + "] vs sigma_k " + fmt(hyper.sigma_k) + ", " +
         fmt(elapsed) + " s";
}

// --- 4: gradient rasters invariant to elevation shifts ----------------------

std::string elevation_invariance() {
  std::mt19937_64 rng(4242);
  PointCloud cloud = test::random_cloud(rng, 2000, 3.0, 0.5);
  const Hyperparams hyper{0.3, 0.01, 0.02};
  const GpModel base = train(cloud, hyper);
  const Bounds bbox = bounding_box(cloud);
  const GradientMap map0 = render(base, bbox, 0.03);

  for (Point3& p : cloud.points) p.z += 7.3;
  const GpModel shifted = train(cloud, hyper);
  const GradientMap map1 = render(shifted, bbox, 0.03);

  double max_diff = 0.0;
  for (std::size_t i = 0; i < map0.size(); ++i) {
    max_diff = std::max(max_diff, std::abs(map0.grad[i] - map1.grad[i]));
  }
  REQUIRE_MSG(max_diff <= 1e-9, "grad raster changed by " << max_diff << " > 1e-9 per pixel");
  return "max pixel change " + fmt(max_diff) + " over " + std::to_string(map0.size()) + " px";
}

// --- 5: SE(2) estimator ------------------------------------------------------

std::string se2_estimator() {
  Se2Transform truth;
  truth.theta = 30.0 * M_PI / 180.0;
  truth.t = {1.0, 2.0};
  {
    std::mt19937_64 rng(555);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    std::vector<PointPair> pairs;
    for (int i = 0; i < 5; ++i) {
      const Eigen::Vector2d q(u(rng), u(rng));
      pairs.push_back({q, truth.apply(q)});
    }
    const Se2Transform est = estimate_se2(pairs);
    REQUIRE_MSG(std::abs(est.theta - truth.theta) <= 1e-9,
                "noiseless theta error " << std::abs(est.theta - truth.theta));
    REQUIRE_MSG((est.t - truth.t).norm() <= 1e-9, "noiseless t error " << (est.t - truth.t).norm());
  }
  double worst_theta = 0.0, worst_t = 0.0;
  for (int seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(9000 + seed);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    std::normal_distribution<double> noise(0.0, 0.01);
    std::vector<PointPair> pairs;
    for (int i = 0; i < 20; ++i) {
      const Eigen::Vector2d q(u(rng), u(rng));
      pairs.push_back({q, truth.apply(q) + Eigen::Vector2d(noise(rng), noise(rng))});
    }
    const Se2Transform est = estimate_se2(pairs);
    worst_theta = std::max(worst_theta, std::abs(Se2Transform::normalize_angle(est.theta - truth.theta)));
    worst_t = std::max(worst_t, (est.t - truth.t).norm());
  }
  REQUIRE_MSG(worst_theta <= 0.5 * M_PI / 180.0,
              "noisy rotation error " << worst_theta * 180.0 / M_PI << " deg > 0.5 deg");
  REQUIRE_MSG(worst_t <= 0.02, "noisy translation error " << worst_t << " m > 0.02 m");
  return "noisy worst: " + fmt(worst_theta * 180.0 / M_PI) + " deg, " + fmt(worst_t) + " m";
}

// --- 6: SSD metric vs pixel-loop oracle --------------------------------------

std::string ssd_oracle_equivalence() {
  std::mt19937_64 rng(31415);
  auto textured = [&](double ox, double oy) {
    GradientMap map;
    map.origin_x = ox;
    map.origin_y = oy;
    map.resolution = 0.03;
    map.width = 60;
    map.height = 60;
    map.prior_var = 1.0;
    map.grad.resize(map.size());
    map.var.resize(map.size());
    std::uniform_real_distribution<double> ug(0.0, 1.0);
    std::uniform_real_distribution<double> uv(0.02, 0.4);
    for (std::size_t i = 0; i < map.size(); ++i) {
      map.grad[i] = ug(rng);
      map.var[i] = uv(rng);
    }
    return map;
  };

  double max_err = 0.0;
  std::uniform_real_distribution<double> utheta(-0.5, 0.5);
  std::uniform_real_distribution<double> ushift(-0.4, 0.4);
  int compared = 0;
  for (int inst = 0; inst < 20; ++inst) {
    const GradientMap query = textured(ushift(rng), ushift(rng));
    const GradientMap database = textured(0.0, 0.0);
    Se2Transform t;
    t.theta = utheta(rng);
    t.t = {ushift(rng), ushift(rng)};
    const auto impl = ssd_metric(t, query, database);
    const auto oracle = test::ssd_oracle(t, query, database);
    REQUIRE_MSG(impl.has_value() == oracle.has_value(), "overlap disagreement on case " << inst);
    if (impl) {
      max_err = std::max(max_err, std::abs(*impl - *oracle));
      ++compared;
    }
  }
  REQUIRE_MSG(compared >= 15, "too few overlapping cases: " << compared);
  REQUIRE_MSG(max_err <= 1e-9, "max SSD deviation " << max_err << " > 1e-9");

  const GradientMap self = textured(0.4, -0.2);
  const auto h = ssd_metric(Se2Transform::identity(), self, self);
  REQUIRE_MSG(h.has_value(), "self SSD reported no overlap");
  REQUIRE_MSG(*h == 0.0, "self SSD is " << *h << ", expected exactly 0");
  return "max err " + fmt(max_err) + " over " + std::to_string(compared) + " cases, self = 0";
}

// --- 7: end-to-end synthetic loop closure ------------------------------------

struct BuiltMap {
  GradientMap map;
  FeatureSet features;
};

BuiltMap build_map(const Submap& submap, const Config& cfg, int id) {
  BuiltMap out;
  const PointCloud cloud = downsample(submap.cloud, static_cast<std::size_t>(cfg.downsample_target),
                                      derive_seed(cfg.seed, stage_seed::kDownsample,
                                                  static_cast<std::uint64_t>(id)));
  const PointCloud fit_cloud =
      downsample(cloud, static_cast<std::size_t>(cfg.fit_subsample),
                 derive_seed(cfg.seed, stage_seed::kFitSubsample, static_cast<std::uint64_t>(id)));
  Hyperparams init;
  double mean = 0.0, var = 0.0;
  for (const Point3& p : fit_cloud.points) mean += p.z;
  mean /= static_cast<double>(fit_cloud.count());
  for (const Point3& p : fit_cloud.points) var += (p.z - mean) * (p.z - mean);
  init.sigma_k = std::max(var / static_cast<double>(fit_cloud.count()), 1e-8);
  init.l_k = 0.01;
  init.sigma_z = cfg.sigma_z_init;
  const Hyperparams hyper = fit_hyperparameters(fit_cloud, init, cfg.kernel_mode);
  const GpModel model = train(cloud, hyper, cfg.kernel_mode);
  out.map = render(model, bounding_box(cloud), cfg.resolution);
  out.features.keypoints = detect(out.map, cfg.detector_params());
  out.features.descriptors = describe_all(out.map, out.features.keypoints);
  return out;
}

MatchResult match_maps(const BuiltMap& q, const BuiltMap& d, const Config& cfg, std::uint64_t pair_seed) {
  const std::vector<Association> assoc =
      match(q.features, d.features, q.map, d.map, cfg.match_params());
  return ransac_match(assoc, q.map, d.map, cfg.ransac_params(pair_seed), cfg.ssd_options());
}

std::string end_to_end_loop_closure() {
  const auto start = clock_type::now();
  const Config cfg;  // defaults: 5000 points, 0.03 m/pixel, min_inliers 4
  constexpr int kPairs = 20;
  const double yaws[kPairs] = {0.0,  M_PI, 0.5,  -1.2, 2.6,  M_PI, -0.3, 1.9,  -2.8, 0.9,
                               M_PI, -0.7, 2.2,  0.2,  -1.6, 3.0,  1.1,  -2.2, 0.6,  M_PI};

  std::vector<GroundTruthPair> pairs;
  std::vector<BuiltMap> queries, databases;
  int accepted_and_accurate = 0;
  std::ostringstream detail;
  for (int i = 0; i < kPairs; ++i) {
    TerrainSpec spec;
    spec.seed = 1000 + static_cast<std::uint64_t>(i);
    const Terrain terrain = generate_terrain(spec);
    // overlap fraction in [0.4, 0.8] with alternating shift axis
    const double frac = 0.4 + 0.02 * i;
    const double shift = (1.0 - frac) * 4.0;
    const Window wd{2.0, 2.0, 6.0, 6.0};
    const Window wq = (i % 2 == 0) ? Window{wd.x0 + shift, wd.y0, wd.x1 + shift, wd.y1}
                                   : Window{wd.x0, wd.y0 + shift, wd.x1, wd.y1 + shift};
    GroundTruthPair pair =
        sample_pair(terrain, wq, wd, 5000, 0.02, 3000 + static_cast<std::uint64_t>(i), yaws[i]);
    REQUIRE_MSG(pair.overlap_fraction >= 0.4 - 1e-12,
                "fixture " << i << " overlap " << pair.overlap_fraction << " < 0.4");

    BuiltMap q = build_map(pair.submap_q, cfg, 2 * i);
    BuiltMap d = build_map(pair.submap_d, cfg, 2 * i + 1);
    const MatchResult res = match_maps(q, d, cfg, derive_seed(cfg.seed, stage_seed::kRansac,
                                                              static_cast<std::uint64_t>(i)));
    bool ok = false;
    if (res.accepted) {
      const double dtheta = std::abs(
          Se2Transform::normalize_angle(res.transform.theta - pair.true_transform.theta));
      const double dt = (res.transform.t - pair.true_transform.t).norm();
      ok = dtheta <= 2.0 * M_PI / 180.0 && dt <= 0.06;
      if (!ok) {
        detail << " [pair " << i << ": dtheta " << dtheta * 180.0 / M_PI << " deg, dt " << dt
               << " m, n " << res.n << "]";
      }
    } else {
      detail << " [pair " << i << ": rejected, n " << res.n << "]";
    }
    if (ok) ++accepted_and_accurate;
    pairs.push_back(std::move(pair));
    queries.push_back(std::move(q));
    databases.push_back(std::move(d));
  }

  // negatives: query map of pair i against the database map of pair i+1,
  // i.e. clouds of two independent random terrains
  int false_accepts = 0;
  for (int i = 0; i < kPairs; ++i) {
    const MatchResult res = match_maps(queries[static_cast<std::size_t>(i)],
                                       databases[static_cast<std::size_t>((i + 1) % kPairs)], cfg,
                                       derive_seed(cfg.seed, 0xbad0 + static_cast<std::uint64_t>(i)));
    if (classify(res, 4)) ++false_accepts;
  }

  const double elapsed = seconds_since(start);
  REQUIRE_MSG(accepted_and_accurate >= 18, "only " << accepted_and_accurate
                                                   << "/20 positive pairs accepted within (2 deg, 0.06 m):"
                                                   << detail.str());
  REQUIRE_MSG(false_accepts == 0, false_accepts << " negative pairs accepted at min_inliers 4");
  REQUIRE_MSG(elapsed < 600.0, "runtime " << elapsed << " s >= 600 s");
  return std::to_string(accepted_and_accurate) + "/20 positives, 0/20 negatives, " + fmt(elapsed) + " s";
}

// --- 8: precision-recall harness arithmetic ----------------------------------

std::string pr_harness_arithmetic() {
  std::vector<OverlapLabel> labels = {{0, 1, 0.8, true},  {0, 2, 0.7, true},  {1, 2, 0.6, true},
                                      {0, 3, 0.9, true},  {1, 3, 0.5, true},  {2, 3, 0.0, false},
                                      {0, 4, 0.0, false}};
  auto result_with = [](int n, bool accepted) {
    MatchResult r;
    r.n = n;
    r.accepted = accepted;
    r.h = 0.1;
    return r;
  };
  std::vector<PairResult> results = {{0, 1, result_with(5, true)},  {0, 2, result_with(4, true)},
                                     {1, 2, result_with(6, true)},  {0, 3, result_with(0, false)},
                                     {1, 3, result_with(0, false)}, {2, 3, result_with(7, true)},
                                     {0, 4, result_with(0, false)}};
  const auto point = precision_recall(results, labels, 1, 1);
  REQUIRE_MSG(point.size() == 1, "expected a single PR point");
  REQUIRE_MSG(point[0].tp == 3 && point[0].fp == 1 && point[0].fn == 2,
              "tallies tp=" << point[0].tp << " fp=" << point[0].fp << " fn=" << point[0].fn);
  REQUIRE_MSG(point[0].precision == 0.75, "precision " << point[0].precision << " != 0.75");
  REQUIRE_MSG(point[0].recall == 0.6, "recall " << point[0].recall << " != 0.6");

  const auto curve = precision_recall(results, labels, 1, 20);
  REQUIRE_MSG(curve.size() == 20, "sweep produced " << curve.size() << " rows, expected 20");
  for (std::size_t i = 1; i < curve.size(); ++i) {
    REQUIRE_MSG(curve[i].recall <= curve[i - 1].recall, "recall not monotone at threshold "
                                                            << curve[i].threshold);
  }
  return "P=0.75 R=0.6 exact; 20 monotone rows";
}

// --- 9: IoU geometry and labeling rules ---------------------------------------

Submap box_submap(int id, double x0, double y0, double x1, double y1) {
  Submap s;
  s.id = id;
  s.cloud.points = {{x0, y0, 0.0}, {x1, y0, 0.0}, {x0, y1, 0.0}, {x1, y1, 0.0}};
  s.world_pose = WorldPose{Se2Transform::identity(), 0.0};
  return s;
}

std::string iou_criterion() {
  const Submap a = box_submap(0, 0, 0, 2, 2);
  const Submap ident = box_submap(1, 0, 0, 2, 2);
  const Submap disjoint = box_submap(2, 5, 5, 7, 7);
  const Submap half = box_submap(3, 1, 0, 3, 2);
  REQUIRE_MSG(std::abs(iou_overlap(a, ident) - 1.0) <= 1e-12, "identical IoU != 1");
  REQUIRE_MSG(iou_overlap(a, disjoint) == 0.0, "disjoint IoU != 0");
  REQUIRE_MSG(std::abs(iou_overlap(a, half) - 1.0 / 3.0) <= 1e-12, "half-strip IoU != 1/3");

  // synthetic database with planted IoU levels 1/3 (> 0.3), ~0.2 and ~0.043
  std::vector<Submap> db = {box_submap(0, 0, 0, 2, 2), box_submap(1, 1, 0, 3, 2),
                            box_submap(2, 1.33, 0, 3.33, 2), box_submap(3, 1.83, 0, 3.83, 2)};
  const auto etna = label_pairs(db, 0.3);
  const auto morocco = label_pairs(db, 0.1);
  auto find_label = [](const std::vector<OverlapLabel>& labels, int a_id, int b_id) {
    for (const OverlapLabel& l : labels) {
      if (l.id_a == a_id && l.id_b == b_id) return l;
    }
    throw CheckFailure("label lookup failed");
  };
  REQUIRE_MSG(find_label(etna, 0, 1).is_true, "IoU 1/3 should pass the 0.3 rule");
  REQUIRE_MSG(!find_label(etna, 0, 2).is_true, "IoU ~0.2 should fail the 0.3 rule");
  REQUIRE_MSG(find_label(morocco, 0, 2).is_true, "IoU ~0.2 should pass the 0.1 rule");
  REQUIRE_MSG(!find_label(morocco, 0, 3).is_true, "IoU ~0.04 should fail the 0.1 rule");
  return "rectangle cases exact; 0.3/0.1 labeling rules reproduced";
}

// --- 10: byte-identical build+match+eval reruns -------------------------------

int run_cli(const std::string& args) {
  const std::string cmd = std::string(TERRAIN_LOOP_CLI_PATH) + " " + args + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE_MSG(in.good(), "cannot read " << path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

std::string determinism() {
  const auto start = clock_type::now();
  const fs::path root = fs::temp_directory_path() / "terrain_loop_acceptance_det";
  fs::remove_all(root);
  fs::create_directories(root);

  auto run_once = [&](const std::string& tag) {
    const std::string base = (root / tag).string();
    REQUIRE_MSG(run_cli("synth --out " + base + "/fix --count 5 --terrain-seed 21 --sample-seed 22"
                        " --extent 6 --bumps 40 --points 1200 --window 2.4 --noise 0.02") == 0,
                "synth failed");
    std::string clouds;
    for (int i = 0; i < 5; ++i) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%s/fix/submap_%03d.xyz ", base.c_str(), i);
      clouds += buf;
    }
    REQUIRE_MSG(run_cli("build --out " + base + "/db " + clouds +
                        "--downsample 1200 --fit-subsample 150 --seed 5") == 0,
                "build failed");
    REQUIRE_MSG(run_cli("match " + base + "/db --all-pairs --out " + base + "/res.jsonl") == 0,
                "match failed");
    REQUIRE_MSG(run_cli("eval " + base + "/db --results " + base + "/res.jsonl --poses " + base +
                        "/fix/poses.csv --iou-threshold 0.3 --out " + base + "/pr.csv --labels-out " +
                        base + "/labels.csv") == 0,
                "eval failed");
  };
  run_once("a");
  run_once("b");

  std::size_t compared = 0;
  for (const auto& entry : fs::recursive_directory_iterator(root / "a")) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), root / "a");
    const fs::path other = root / "b" / rel;
    REQUIRE_MSG(fs::exists(other), "missing counterpart for " << rel);
    REQUIRE_MSG(slurp(entry.path()) == slurp(other), "byte mismatch in " << rel);
    ++compared;
  }
  fs::remove_all(root);
  const double elapsed = seconds_since(start);
  return std::to_string(compared) + " files byte-identical, " + fmt(elapsed) + " s";
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<std::string()> run;
  };
  const std::vector<Criterion> criteria = {
      {"GP oracle equivalence", gp_oracle_equivalence},
      {"Gradient-operator correctness", gradient_operator_correctness},
      {"Variance bounds", variance_bounds},
      {"Elevation invariance", elevation_invariance},
      {"SE(2) estimator", se2_estimator},
      {"SSD oracle equivalence", ssd_oracle_equivalence},
      {"End-to-end synthetic loop closure", end_to_end_loop_closure},
      {"PR harness arithmetic", pr_harness_arithmetic},
      {"IoU geometry and labeling", iou_criterion},
      {"Determinism of build+match+eval", determinism},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    try {
      const std::string detail = c.run();
      std::printf("[PASS] %s (%s)\n", c.name, detail.c_str());
    } catch (const std::exception& e) {
      ++failures;
      std::printf("[FAIL] %s: %s\n", c.name, e.what());
    }
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - static_cast<std::size_t>(failures),
              criteria.size());
  return failures;
}
