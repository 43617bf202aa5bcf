#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "generators.hpp"
#include "seqlab/io.hpp"
#include "seqlab/runner.hpp"

namespace seqlab {
namespace {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("seqlab_runner_test_" + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }
  void write(const std::string& name, const std::string& text) const { std::ofstream(path_ / name) << text; }

 private:
  fs::path path_;
};

Json parse(const std::string& s) { return Json::parse(s); }

std::string error_field(const Json& j) {
  try {
    run_config(parse_config(j));
  } catch (const ConfigError& e) {
    return e.field;
  }
  return "<no error>";
}

TEST(ConfigJson, SetsRoundTrip) {
  std::mt19937_64 gen(11);
  for (std::size_t n : {1, 4}) {
    for (const auto& [name, set] : testing::set_catalog(n)) {
      const ConstraintSet back = set_from_json(to_json(set));
      EXPECT_EQ(to_json(back), to_json(set)) << name;
      for (int k = 0; k < 5; ++k) {
        const Vector x = testing::random_vector(gen, n);
        const Vector p = project(set, x, 1e-12), q = project(back, x, 1e-12);
        EXPECT_LE(dist2(p, q), 1e-9) << name;
      }
    }
  }
}

TEST(ConfigJson, PenaltiesRoundTrip) {
  for (const auto& [name, f] : testing::penalty_catalog(3)) {
    EXPECT_EQ(to_json(penalty_from_json(to_json(f))), to_json(f)) << name;
  }
}

TEST(ConfigJson, ScalarBoxBoundsNeedDim) {
  const ConstraintSet b = set_from_json(parse(R"({"kind": "box", "dim": 3, "lo": -1, "hi": 2})"));
  EXPECT_EQ(b.dim(), 3u);
  EXPECT_TRUE(contains(b, {-1.0, 0.0, 2.0}, 0.0));
}

TEST(ConfigJson, ErrorsNameTheField) {
  EXPECT_EQ(error_field(parse(R"({"experiment": "solve", "seed": 1,
      "set": {"kind": "box", "dim": 1, "lo": -1, "hi": 1},
      "penalty": {"kind": "l1", "lambda": -1}, "x": [0]})")),
            "penalty.lambda");
  EXPECT_EQ(error_field(parse(R"({"experiment": "solve", "seed": 1,
      "set": {"kind": "cube", "dim": 1}, "x": [0]})")),
            "set.kind");
  EXPECT_EQ(error_field(parse(R"({"experiment": "solve", "seed": 1,
      "set": {"kind": "ball", "dim": 2, "radius": "big"}, "x": [0, 0]})")),
            "set.radius");
  EXPECT_EQ(error_field(parse(R"({"experiment": "nope", "seed": 1})")), "experiment");
  EXPECT_EQ(error_field(parse(R"({"experiment": "cstar"})")), "seed");
  EXPECT_EQ(error_field(parse(R"({"experiment": "solve", "seed": 1,
      "set": {"kind": "box", "dim": 2, "lo": -1, "hi": 1}, "x": [0]})")),
            "x");
  EXPECT_EQ(error_field(parse(R"({"experiment": "risk", "seed": 1, "reps": 100,
      "set": {"kind": "box", "dim": 1, "lo": -1, "hi": 1}, "theta": [3]})")),
            "theta");
}

TEST(ConfigJson, MalformedFileIsConfigError) {
  TempDir dir;
  dir.write("bad.json", R"({"experiment": "risk", "seed": )");
  EXPECT_THROW(read_json_file(dir.path() / "bad.json"), ConfigError);
  EXPECT_THROW(read_json_file(dir.path() / "missing.json"), ConfigError);
}

TEST(ConfigJson, ExperimentOverrideMustAgree) {
  const Json j = parse(R"({"experiment": "cstar", "seed": 1})");
  EXPECT_NO_THROW(parse_config(j, "", "cstar"));
  EXPECT_THROW(parse_config(j, "", "risk"), ConfigError);
}

TEST(RunConfig, SolveEchoesTheProjection) {
  const RunReport r = run_config(parse_config(parse(R"({"experiment": "solve", "seed": 1,
      "set": {"kind": "box", "dim": 1, "lo": -1, "hi": 1}, "penalty": {"kind": "zero"}, "x": [5]})")));
  EXPECT_TRUE(r.pass);
  ASSERT_EQ(r.results["point"].size(), 1u);
  EXPECT_NEAR(r.results["point"][0].get<double>(), 1.0, 1e-12);
}

TEST(RunConfig, CstarCertificate) {
  const RunReport r = run_config(parse_config(parse(R"({"experiment": "cstar", "seed": 1})")));
  EXPECT_TRUE(r.pass);
  EXPECT_GE(r.results["cstar_lower"].get<double>(), 6.05e-6);
  EXPECT_TRUE(r.results["holds"].get<bool>());
  EXPECT_LT(r.results["sufficiency_rhs"].get<double>(), r.results["b_squared"].get<double>());
}

TEST(RunConfig, ReportsAreDeterministic) {
  const Json j = parse(R"({"experiment": "risk", "seed": 7, "reps": 200, "width_reps": 100,
      "set": {"kind": "l1_ball", "dim": 3, "radius": 1}, "penalty": {"kind": "zero"}, "theta": [0.5, 0, 0]})");
  const std::string a = run_config(parse_config(j)).render("json");
  const std::string b = run_config(parse_config(j)).render("json");
  EXPECT_EQ(a, b);
  const std::string c = run_config(parse_config(j)).render("csv");
  EXPECT_EQ(c, run_config(parse_config(j)).render("csv"));
}

TEST(RunConfig, NameSelectsTheSubSeed) {
  Json j = parse(R"({"experiment": "risk", "seed": 7, "reps": 50, "width_reps": 20,
      "set": {"kind": "box", "dim": 2, "lo": -1, "hi": 1}, "theta": [0, 0]})");
  j["name"] = "first";
  const double a = run_config(parse_config(j)).results["mean_sq_loss"].get<double>();
  j["name"] = "second";
  const double b = run_config(parse_config(j)).results["mean_sq_loss"].get<double>();
  EXPECT_NE(a, b);
}

TEST(Csv, QuotesCellsThatNeedIt) {
  EXPECT_EQ(to_csv({"a", "b"}, {{"1", "x,y"}, {"say \"hi\"", "2"}}), "a,b\n1,\"x,y\"\n\"say \"\"hi\"\"\",2\n");
}

TEST(Suite, EmptyDirectoryIsConfigError) {
  TempDir dir;
  EXPECT_THROW(run_suite(dir.path()), ConfigError);
}

TEST(Suite, FailingCheckIsNamed) {
  TempDir dir;
  dir.write("a_ok.json", R"({"experiment": "cstar", "seed": 1})");
  dir.write("b_fail.json", R"({"experiment": "cstar", "seed": 1, "lower_threshold": 1e-3})");
  const SuiteReport s = run_suite(dir.path());
  EXPECT_FALSE(s.pass);
  ASSERT_EQ(s.entries.size(), 2u);
  EXPECT_TRUE(s.entries[0].report.pass);
  EXPECT_FALSE(s.entries[1].report.pass);
  const Json agg = s.to_json();
  EXPECT_EQ(agg["runs"][1]["file"], "b_fail.json");
  EXPECT_NE(agg["runs"][1]["failed_checks"].dump().find("hard_constant"), std::string::npos);
}

TEST(Suite, WritesOnlyToConfiguredOutputs) {
  TempDir dir, out;
  dir.write("c.json", R"({"experiment": "cstar", "seed": 1})");
  EXPECT_TRUE(run_suite(dir.path()).pass);
  EXPECT_EQ(std::distance(fs::directory_iterator(dir.path()), fs::directory_iterator()), 1);
  EXPECT_TRUE(run_suite(dir.path(), out.path()).pass);
  EXPECT_TRUE(fs::exists(out.path() / "c.json"));
  const std::string first = [&] {
    std::ifstream in(out.path() / "c.json");
    return std::string(std::istreambuf_iterator<char>(in), {});
  }();
  run_suite(dir.path(), out.path());
  std::ifstream in(out.path() / "c.json");
  EXPECT_EQ(first, std::string(std::istreambuf_iterator<char>(in), {}));
}

}  // namespace
}  // namespace seqlab
