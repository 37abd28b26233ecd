#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "wasmfp/catalog.h"
#include "wasmfp/cli.h"
#include "wasmfp/fingerprint.h"
#include "wasmfp/wasm_validate.h"

using namespace wasmfp;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = 0;
  std::string out, err;
  Json json() const { return Json::parse(out); }
};

Run run(std::vector<std::string> args, const std::string& stdin_text = "") {
  std::istringstream in(stdin_text);
  std::ostringstream out, err;
  Run r;
  r.code = run_cli(args, in, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("wasmfp-cli-" + std::to_string(::getpid()) + "-" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST(Cli, ClassifyRatios) {
  const auto r = run({"classify", "--ss1", "3.05", "--ss2", "3.10", "--ratios", "5.59,6.21"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.json().at("is_chromium"), true);
  const auto no = run({"classify", "--ratios", "1.67,1.98"});
  EXPECT_EQ(no.json().at("is_chromium"), false);
}

TEST(Cli, ClassifyFromStdin) {
  std::vector<double> v(kTestCount, 20.0);
  v[kScriptedSetter1] = 120;
  v[kScriptedSetter2] = 130;
  const auto r = run({"classify", "--input", "-"}, Json{{"timings_ms", v}, {"test_names", test_names()}}.dump());
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.json().at("is_chromium"), true);
  EXPECT_DOUBLE_EQ(r.json().at("ratios").at("ss1_over_sg0").get<double>(), 6.0);
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run({}).code, kExitUsage);
  EXPECT_EQ(run({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(run({"classify", "--ratios", "1"}).code, kExitUsage);
  EXPECT_EQ(run({"classify"}).code, kExitUsage);
  EXPECT_EQ(run({"classify", "--ratios", "0,1"}).code, kExitDataError);
  EXPECT_EQ(run({"classify", "--input", "-"}, "{broken").code, kExitDataError);
  EXPECT_EQ(run({"evaluate", "--dataset", "/nonexistent/data.json"}).code, kExitDataError);
  EXPECT_EQ(run({"--help"}).code, kExitOk);
}

TEST(Cli, UnknownSubcommandTouchesNothing) {
  const auto dir = scratch("untouched");
  const auto r = run({"gen-wasmm", "--out", dir.string()});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_FALSE(fs::exists(dir));
}

TEST(Cli, GenWasmWritesModulesAndManifest) {
  const auto dir = scratch("gen");
  const auto r = run({"gen-wasm", "--out", dir.string(), "--iterations", "500"});
  ASSERT_EQ(r.code, 0) << r.err;
  int wasm = 0, manifests = 0;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".wasm") {
      ++wasm;
      std::ifstream f(entry.path(), std::ios::binary);
      std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), {});
      EXPECT_TRUE(validate_bytes(bytes).ok()) << entry.path();
    } else if (entry.path().filename() == "manifest.json") {
      ++manifests;
      std::ifstream f(entry.path());
      EXPECT_EQ(Json::parse(f).at("tests")[0].at("default_iterations"), 500);
    }
  }
  EXPECT_EQ(wasm, 20);
  EXPECT_EQ(manifests, 1);
  fs::remove_all(dir);
}

TEST(Cli, SimulateEvaluateTally) {
  const auto sim = run({"simulate", "--per-class", "87,55", "--seed", "11"});
  ASSERT_EQ(sim.code, 0) << sim.err;
  const auto db = database_from_json(sim.json());
  ASSERT_EQ(db.size(), 142);

  // hand tally from the raw timings
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  for (Eigen::Index j = 0; j < db.size(); ++j) {
    const auto& m = db.matrix();
    const bool predicted = m(kScriptedSetter1, j) / m(kScriptedGetter0, j) >= 3.05 &&
                           m(kScriptedSetter2, j) / m(kScriptedGetter0, j) >= 3.10;
    const auto& b = db.labels()[static_cast<std::size_t>(j)].browser;
    const bool chromium = b == "Chrome" || b == "Edge";
    (chromium ? (predicted ? tp : fn) : (predicted ? fp : tn))++;
  }

  const auto eval = run({"evaluate", "--dataset", "-"}, sim.out);
  ASSERT_EQ(eval.code, 0) << eval.err;
  const auto e = eval.json();
  EXPECT_EQ(e.at("total"), 142);
  EXPECT_EQ(e.at("tp"), tp);
  EXPECT_EQ(e.at("fp"), fp);
  EXPECT_EQ(e.at("tn"), tn);
  EXPECT_EQ(e.at("fn"), fn);

  const auto pretty = run({"evaluate", "--dataset", "-", "--pretty"}, sim.out);
  EXPECT_NE(pretty.out.find("accuracy"), std::string::npos);
}

TEST(Cli, SimulateIsDeterministic) {
  const auto a = run({"simulate", "--per-class", "3", "--seed", "5"});
  const auto b = run({"simulate", "--per-class", "3", "--seed", "5"});
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(run({"simulate", "--profiles", "nope"}).code, kExitUsage);
  EXPECT_EQ(run({"simulate", "--per-class", "1,2,3"}).code, kExitUsage);
  const auto two = run({"simulate", "--profiles", "chrome-windows,safari-ios", "--per-class", "2,3"});
  EXPECT_EQ(database_from_json(two.json()).size(), 5);
}

TEST(Cli, FitThresholdsModes) {
  Json samples = {{"samples",
                   {{{"ss1", 3.05}, {"ss2", 4.0}, {"label", "chromium"}},
                    {{"ss1", 6.0}, {"ss2", 3.38}, {"label", "chromium"}},
                    {{"ss1", 1.5}, {"ss2", 1.5}, {"label", "other"}}}}};
  const auto r = run({"fit-thresholds", "--dataset", "-"}, samples.dump());
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_DOUBLE_EQ(r.json().at("config").at("ss1_threshold").get<double>(), 3.05);
  EXPECT_DOUBLE_EQ(r.json().at("config").at("ss2_threshold").get<double>(), 3.38);
  const auto g = run({"fit-thresholds", "--dataset", "-", "--mode", "grid"}, samples.dump());
  ASSERT_EQ(g.code, 0) << g.err;
  EXPECT_EQ(g.json().at("report").at("confusion").at("accuracy"), 1.0);
  EXPECT_EQ(run({"fit-thresholds", "--dataset", "-", "--mode", "best"}, samples.dump()).code, kExitUsage);
  Json one_class = {{"samples", {{{"ss1", 1.5}, {"ss2", 1.5}, {"label", "other"}}}}};
  EXPECT_EQ(run({"fit-thresholds", "--dataset", "-"}, one_class.dump()).code, kExitDataError);
}

TEST(Cli, MatchAndPcaFit) {
  const auto dir = scratch("match");
  fs::create_directories(dir);
  const auto db_path = (dir / "db.json").string();
  ASSERT_EQ(run({"simulate", "--per-class", "4", "--seed", "2", "--out", db_path}).code, 0);
  std::ifstream f(db_path);
  const auto db = database_from_json(Json::parse(f));
  const auto col = db.column(9);
  const Json query(std::vector<double>(col.values().begin(), col.values().end()));

  for (const char* model : {"euclidean", "inner-product", "mahalanobis"}) {
    const auto r = run({"match", "--db", db_path, "--query", "-", "--model", model}, query.dump());
    ASSERT_EQ(r.code, 0) << model << ": " << r.err;
    EXPECT_EQ(r.json().at("index"), 9) << model;
  }
  const auto pca_path = (dir / "pca.json").string();
  ASSERT_EQ(run({"pca-fit", "--db", db_path, "--k", "20", "--out", pca_path}).code, 0);
  const auto r = run({"match", "--db", db_path, "--query", "-", "--model", "pca", "--pca", pca_path}, query.dump());
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.json().at("index"), 9);
  EXPECT_EQ(run({"match", "--db", db_path, "--query", "-", "--model", "pca"}, query.dump()).code, kExitUsage);
  EXPECT_EQ(run({"pca-fit", "--db", db_path, "--k", "21"}).code, kExitDataError);
  fs::remove_all(dir);
}

TEST(Cli, EnvironmentFallback) {
  ::setenv("WASMFP_SS1", "6.0", 1);
  const auto r = run({"classify", "--ratios", "5.59,6.21"});
  EXPECT_EQ(r.json().at("is_chromium"), false);
  const auto flag_wins = run({"classify", "--ratios", "5.59,6.21", "--ss1", "3.05"});
  EXPECT_EQ(flag_wins.json().at("is_chromium"), true);
  ::unsetenv("WASMFP_SS1");
}
