#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "terrain_loop/formats.hpp"

namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(TERRAIN_LOOP_CLI_PATH) + " " + args + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

std::size_t line_count(const std::string& text) {
  std::size_t n = 0;
  for (char c : text)
    if (c == '\n') ++n;
  return n;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
};

// Shared small operating point: fast but large enough for real matches.
const std::string kSynthFlags =
    " --extent 6 --bumps 40 --points 900 --window 2.4 --noise 0.02";
const std::string kBuildFlags = " --downsample 900 --fit-subsample 150 --seed 5";

}  // namespace

TEST_CASE("cli synth") {
  TempDir dir("tl_cli_synth");

  SECTION("pair fixtures are deterministic and carry ground truth") {
    REQUIRE(run_cli("synth --out " + dir.str() + "/a --terrain-seed 3 --sample-seed 4 --overlap 0.5 --yaw 180" +
                    kSynthFlags) == 0);
    REQUIRE(run_cli("synth --out " + dir.str() + "/b --terrain-seed 3 --sample-seed 4 --overlap 0.5 --yaw 180" +
                    kSynthFlags) == 0);
    CHECK(slurp(dir.path / "a/query.xyz") == slurp(dir.path / "b/query.xyz"));
    CHECK(slurp(dir.path / "a/database.xyz") == slurp(dir.path / "b/database.xyz"));
    CHECK(slurp(dir.path / "a/ground_truth.json") == slurp(dir.path / "b/ground_truth.json"));

    const nlohmann::json gt = nlohmann::json::parse(slurp(dir.path / "a/ground_truth.json"));
    CHECK(gt.at("theta").get<double>() == Catch::Approx(M_PI).margin(1e-12));
    CHECK(gt.at("overlap_fraction").get<double>() == Catch::Approx(0.5).margin(1e-12));
  }

  SECTION("invalid spec exits 2") {
    CHECK(run_cli("synth --out " + dir.str() + "/bad --extent -3") == 2);
  }

  SECTION("ply fixtures parse back") {
    REQUIRE(run_cli("synth --out " + dir.str() + "/p --format ply --points 200 --extent 6 --bumps 40"
                    " --window 2.4") == 0);
    CHECK(terrain_loop::load_pointcloud(dir.path / "p/query.ply").count() == 200);
  }
}

TEST_CASE("cli build/match/eval") {
  TempDir dir("tl_cli_flow");
  REQUIRE(run_cli("synth --out " + dir.str() + "/fix --count 4 --terrain-seed 11 --sample-seed 12" +
                  kSynthFlags) == 0);
  const std::string clouds = dir.str() + "/fix/submap_000.xyz " + dir.str() + "/fix/submap_001.xyz " +
                             dir.str() + "/fix/submap_002.xyz " + dir.str() + "/fix/submap_003.xyz";

  SECTION("happy path emits a database, matches, and a PR curve") {
    REQUIRE(run_cli("build --out " + dir.str() + "/db " + clouds + kBuildFlags + " --resolution 0.03") == 0);
    CHECK(fs::exists(dir.path / "db/manifest.json"));
    CHECK(fs::exists(dir.path / "db/0/cloud.xyz"));
    CHECK(fs::exists(dir.path / "db/3/descriptors.bin"));
    const nlohmann::json manifest = nlohmann::json::parse(slurp(dir.path / "db/manifest.json"));
    CHECK(manifest.at("config").at("resolution").get<double>() == 0.03);
    CHECK(manifest.at("entries").size() == 4);

    REQUIRE(run_cli("match " + dir.str() + "/db --all-pairs --out " + dir.str() + "/res.jsonl") == 0);
    const std::string results = slurp(dir.path / "res.jsonl");
    CHECK(line_count(results) == 6);  // C(4,2)

    REQUIRE(run_cli("eval " + dir.str() + "/db --results " + dir.str() + "/res.jsonl --poses " +
                    dir.str() + "/fix/poses.csv --iou-threshold 0.3 --out " + dir.str() + "/pr.csv") == 0);
    const std::string pr = slurp(dir.path / "pr.csv");
    CHECK(line_count(pr) == 21);  // header + sweep 1..20
    CHECK(pr.substr(0, pr.find('\n')) == "threshold,precision,recall,tp,fp,fn");
    const std::size_t last_row = pr.rfind('\n', pr.size() - 2);
    CHECK(pr.substr(last_row + 1, 5) == "20,1,");  // final row keeps precision 1
  }

  SECTION("a synth pair passes build+match with defaults") {
    REQUIRE(run_cli("synth --out " + dir.str() + "/pair --terrain-seed 31 --sample-seed 32"
                    " --overlap 0.6 --yaw 120 --extent 6 --points 1600 --window 2.6") == 0);
    REQUIRE(run_cli("build --out " + dir.str() + "/pdb " + dir.str() + "/pair/query.xyz " +
                    dir.str() + "/pair/database.xyz --downsample 1600 --fit-subsample 150 --seed 5") == 0);
    REQUIRE(run_cli("match " + dir.str() + "/pdb --all-pairs --out " + dir.str() + "/pres.jsonl") == 0);
    std::ifstream in(dir.path / "pres.jsonl");
    const auto results = terrain_loop::read_results_jsonl(in);
    REQUIRE(results.size() == 1);
    CHECK(results[0].result.accepted);
    CHECK(results[0].result.n >= 4);
  }

  SECTION("missing input exits 2") {
    CHECK(run_cli("build --out " + dir.str() + "/db2 " + dir.str() + "/fix/does_not_exist.xyz") == 2);
  }

  SECTION("min-inliers gates the accepted flag") {
    REQUIRE(run_cli("build --out " + dir.str() + "/db3 " + clouds + kBuildFlags) == 0);
    REQUIRE(run_cli("match " + dir.str() + "/db3 --all-pairs --min-inliers 5 --out " + dir.str() +
                    "/res5.jsonl") == 0);
    std::ifstream in(dir.path / "res5.jsonl");
    const auto results = terrain_loop::read_results_jsonl(in);
    REQUIRE(results.size() == 6);
    for (const auto& pr : results) {
      if (pr.result.accepted) CHECK(pr.result.n >= 5);
    }
  }

  SECTION("unknown query id exits 3") {
    REQUIRE(run_cli("build --out " + dir.str() + "/db4 " + clouds + kBuildFlags) == 0);
    CHECK(run_cli("match " + dir.str() + "/db4 --query 42 --out " + dir.str() + "/resq.jsonl") == 3);
  }

  SECTION("results against unlabeled pairs exit 4") {
    REQUIRE(run_cli("build --out " + dir.str() + "/db5 " + clouds + kBuildFlags) == 0);
    std::ofstream bad(dir.path / "bad.jsonl");
    bad << R"({"query_id":0,"db_id":9,"n":5,"h":0.1,"theta_rad":0,"tx_m":0,"ty_m":0,"accepted":true})"
        << "\n";
    bad.close();
    CHECK(run_cli("eval " + dir.str() + "/db5 --results " + dir.str() + "/bad.jsonl --poses " +
                  dir.str() + "/fix/poses.csv --out " + dir.str() + "/pr5.csv") == 4);
  }

  SECTION("config hash guard rejects mismatched configs") {
    REQUIRE(run_cli("build --out " + dir.str() + "/db6 " + clouds + kBuildFlags) == 0);
    std::ofstream cfg(dir.path / "other.json");
    cfg << R"({"resolution": 0.05})" << "\n";
    cfg.close();
    CHECK(run_cli("match " + dir.str() + "/db6 --all-pairs --config " + dir.str() +
                  "/other.json --out " + dir.str() + "/res6.jsonl") == 2);
  }

  SECTION("unknown config keys exit 2") {
    std::ofstream cfg(dir.path / "bad_cfg.json");
    cfg << R"({"resolutionn": 0.05})" << "\n";
    cfg.close();
    CHECK(run_cli("build --out " + dir.str() + "/db7 " + clouds + " --config " + dir.str() +
                  "/bad_cfg.json") == 2);
  }
}
