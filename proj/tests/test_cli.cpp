#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "gda/model.hpp"
#include "json.hpp"

// End-to-end checks against the installed binary. The test runner passes the
// binary location through GDA_BIN; everything is exercised the way a user
// would, via argv and files, and only exit codes + artifacts are asserted.

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string& bin() {
  static const std::string b = [] {
    const char* p = std::getenv("GDA_BIN");
    REQUIRE_MESSAGE(p != nullptr, "GDA_BIN must point at the gda binary");
    return std::string(p);
  }();
  return b;
}

const fs::path& scratch() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "gda-cli-tests";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

int run(const std::string& args) {
  const std::string cmd = bin() + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  REQUIRE(rc != -1);
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -2;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE_MESSAGE(in.good(), "missing artifact: " << p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// tiny but complete model config, written once for the train/eval chain
fs::path tiny_config_path() {
  static const fs::path p = [] {
    gda::model::ModelConfig cfg;
    cfg.block_widths = {8, 10, 12, 10};
    cfg.attention.d_k = 4;
    cfg.k_local = 4;
    cfg.graph.k_graph = 4;
    cfg.seed = 7;
    const fs::path path = scratch() / "tiny.json";
    std::ofstream(path) << gda::model::to_json(cfg);
    return path;
  }();
  return p;
}

}  // namespace

TEST_CASE("help exits clean, junk flags exit with the config code") {
  CHECK(run("--help") == 0);
  CHECK(run("gen-data --help") == 0);
  CHECK(run("--no-such-flag") == 3);
  CHECK(run("gen-data --family sphere --frobnicate") == 3);
  CHECK(run("definitely-not-a-command") == 3);
}

TEST_CASE("gen-data writes deterministic clouds") {
  const auto a = scratch() / "a.ply";
  const auto b = scratch() / "b.ply";
  CHECK(run("gen-data --family sphere --n-points 64 --seed 5 --out " + a.string()) == 0);
  CHECK(run("gen-data --family sphere --n-points 64 --seed 5 --out " + b.string()) == 0);
  CHECK(slurp(a) == slurp(b));

  const auto x = scratch() / "c.xyz";
  CHECK(run("gen-data --family cube --n-points 32 --seed 5 --out " + x.string()) == 0);
  const std::string text = slurp(x);
  CHECK(text.find("ply") == std::string::npos);  // plain coordinate rows
}

TEST_CASE("disentangle produces the split artifacts and honors bounds") {
  const auto cloud = scratch() / "cloud.ply";
  REQUIRE(run("gen-data --family plane-crease --n-points 128 --seed 3 --out " +
              cloud.string()) == 0);

  const std::string prefix = (scratch() / "split").string();
  CHECK(run("disentangle --input " + cloud.string() + " --k-graph 10 --m 32 --out-prefix " +
            prefix) == 0);
  for (const char* suffix : {".sharp.ply", ".gentle.ply", ".scores.ply", ".split.json"})
    CHECK(fs::exists(prefix + suffix));

  const json side = json::parse(slurp(prefix + ".split.json"));
  CHECK(side.at("n_points").get<long>() == 128);
  CHECK(side.at("m").get<long>() == 32);
  CHECK(side.at("sharp_idx").size() == 32);

  // m beyond N/2 is a config violation, not a crash
  CHECK(run("disentangle --input " + cloud.string() + " --m 100 --out-prefix " + prefix) == 3);
  // missing input is an I/O failure
  CHECK(run("disentangle --input /nonexistent/nope.ply --out-prefix " + prefix) == 2);
}

TEST_CASE("spectral-check passes on its default grid") {
  const auto rep = scratch() / "spectral.json";
  CHECK(run("spectral-check --n 24 --k-graph 6 --trials 4 --seed 2 --out " + rep.string()) == 0);
  const json j = json::parse(slurp(rep));
  REQUIRE(j.is_array());
  CHECK(j.size() == 4);
  for (const auto& t : j) CHECK(t.at("max_response_error").get<double>() <= 1e-8);
}

TEST_CASE("train twice with one seed gives byte-identical checkpoints") {
  const auto ck1 = scratch() / "m1.ckpt";
  const auto ck2 = scratch() / "m2.ckpt";
  const std::string common =
      " --config " + tiny_config_path().string() +
      " --per-class 2 --n-points 24 --data-seed 11 --epochs 1 --batch-size 2 --seed 4 --out ";
  CHECK(run("train" + common + ck1.string()) == 0);
  CHECK(run("train" + common + ck2.string()) == 0);
  const std::string b1 = slurp(ck1);
  CHECK(b1 == slurp(ck2));
  CHECK(b1.substr(0, 4) == "GDAN");
  CHECK(fs::exists(scratch() / "curve.csv"));
  CHECK(json::parse(slurp(scratch() / "m1.ckpt.run.json")).at("command") == "train");
}

TEST_CASE("eval runs from a checkpoint and unit-scale voting changes nothing") {
  const auto ck = scratch() / "m1.ckpt";
  REQUIRE_MESSAGE(fs::exists(ck), "train test must run first");
  const auto r1 = scratch() / "eval1.json";
  const auto r2 = scratch() / "eval2.json";
  const std::string common = "eval --checkpoint " + ck.string() +
                             " --per-class 2 --n-points 24 --data-seed 12 ";
  CHECK(run(common + "--votes 1 --out " + r1.string()) == 0);
  CHECK(run(common + "--votes 5 --scale 1 1 --out " + r2.string()) == 0);
  const json j1 = json::parse(slurp(r1));
  const json j2 = json::parse(slurp(r2));
  CHECK(j1.at("overall_accuracy").get<double>() == j2.at("overall_accuracy").get<double>());
  CHECK(j1.at("confusion") == j2.at("confusion"));

  CHECK(run("eval --checkpoint /nonexistent.ckpt") == 2);
}

TEST_CASE("params reports a count for the tiny config") {
  CHECK(run("params --config " + tiny_config_path().string()) == 0);
}

TEST_CASE("attention-export writes the anchor rows") {
  const auto csv = scratch() / "attention.csv";
  CHECK(run("attention-export --family plane-crease --n-points 48 --k-graph 6 --anchor 3 "
            "--d-k 4 --seed 2 --out " +
            csv.string()) == 0);
  const std::string text = slurp(csv);
  CHECK(text.rfind("component,slot,point_index,weight", 0) == 0);
  CHECK(text.find("sharp") != std::string::npos);
  CHECK(text.find("gentle") != std::string::npos);
}

TEST_CASE("robustness sweep writes one row per grid value") {
  const auto ck = scratch() / "m1.ckpt";
  REQUIRE(fs::exists(ck));
  const auto csv = scratch() / "rob.csv";
  CHECK(run("robustness --checkpoint " + ck.string() +
            " --mode rotate --grid 0 --grid 90 --per-class 2 --n-points 24 --data-seed 13 "
            "--out " +
            csv.string()) == 0);
  const std::string text = slurp(csv);
  CHECK(text.rfind("grid_value,accuracy", 0) == 0);
  int rows = 0;
  for (char ch : text)
    if (ch == '\n') ++rows;
  CHECK(rows == 3);  // header + two grid points
}
