#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "rfbias/cli.hpp"
#include "test_util.hpp"

namespace rfbias {
namespace {

namespace fs = std::filesystem;
using testing::read_file;
using testing::scratch_dir;

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::size_t line_count(const fs::path& p) {
  const std::string s = read_file(p);
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

TEST(Cli, SynthSplitTrainPredictEvaluate) {
  const auto dir = scratch_dir();
  const std::string data = (dir / "eq1.csv").string();
  auto r = run({"synth", "--coeffs", "2,3,4,5,6,7,8,9", "--n", "300", "--seed", "4", "--out", data});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(line_count(data), 301u);

  r = run({"split", "--in", data, "--train", "0.6", "--validation", "0.2", "--test", "0.2", "--seed", "2",
           "--out-dir", (dir / "parts").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(line_count(dir / "parts" / "train.csv"), 181u);
  EXPECT_EQ(line_count(dir / "parts" / "validation.csv"), 61u);
  EXPECT_EQ(line_count(dir / "parts" / "test.csv"), 61u);

  const std::string model = (dir / "model.json").string();
  r = run({"train", "--train", (dir / "parts" / "train.csv").string(), "--ntree", "20", "--seed", "3", "--out",
           model});
  ASSERT_EQ(r.code, 0) << r.err;

  const std::string pred = (dir / "pred.csv").string();
  r = run({"predict", "--model", model, "--data", (dir / "parts" / "test.csv").string(), "--out", pred});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(read_file(pred).substr(0, 22), "row,truth,prediction\n0");

  const std::string corr = (dir / "corr.json").string();
  r = run({"fit-correction", "--model", model, "--validation", (dir / "parts" / "validation.csv").string(),
           "--fit-on", "validation", "--family", "auto", "--out", corr});
  ASSERT_EQ(r.code, 0) << r.err;

  const std::string corrected = (dir / "corrected.csv").string();
  r = run({"apply-correction", "--correction", corr, "--predictions", pred, "--out", corrected});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(read_file(corrected).substr(0, 30), "row,truth,prediction,corrected");

  r = run({"evaluate", "--predictions", corrected, "--out", (dir / "report.csv").string(), "--format", "csv"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("MSE:"), std::string::npos);
  EXPECT_EQ(line_count(dir / "report.csv"), 3u);

  r = run({"plot-data", "--predictions", corrected, "--out", (dir / "plot.csv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(line_count(dir / "plot.csv"), 61u);
}

TEST(Cli, FitOnMissingValidationSetIsDataError) {
  const auto dir = scratch_dir();
  const std::string data = (dir / "d.csv").string();
  ASSERT_EQ(run({"synth", "--coeffs", "1,2", "--n", "50", "--out", data}).code, 0);
  ASSERT_EQ(run({"train", "--train", data, "--ntree", "3", "--out", (dir / "m.json").string()}).code, 0);
  const auto r = run({"fit-correction", "--model", (dir / "m.json").string(), "--train", data, "--fit-on",
                      "validation", "--out", (dir / "c.json").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("validation"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir / "c.json"));
}

TEST(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(run({"frobnicate"}).code, 1);
  EXPECT_EQ(run({"synth", "--n", "5"}).code, 1);
  EXPECT_EQ(run({"synth", "--coeffs", "1", "--n", "five", "--out", "x.csv"}).code, 1);
  EXPECT_EQ(run({"evaluate", "--predictions", "p.csv", "--format", "xml"}).code, 1);
}

TEST(Cli, MissingInputIsDataError) {
  const auto dir = scratch_dir();
  const auto r = run({"predict", "--model", (dir / "none.json").string(), "--data", "x.csv", "--out", "y.csv"});
  EXPECT_EQ(r.code, 2);
  EXPECT_FALSE(r.err.empty());
}

TEST(Cli, InvalidNumericFlagIsReportedBeforeWork) {
  const auto dir = scratch_dir();
  const auto r = run({"synth", "--coeffs", "1", "--n", "0", "--out", (dir / "d.csv").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("n_points"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir / "d.csv"));
}

TEST(Cli, PipelineIsByteReproducible) {
  const auto dir = scratch_dir();
  auto pipeline = [&](const std::string& sub) {
    return run({"pipeline", "--coeffs", "1,1,1,1,1,1,1,1", "--n", "600", "--train", "0.6", "--validation", "0.2",
                "--test", "0.2", "--fit-on", "validation", "--ntree", "15", "--seed", "9", "--threads", "2",
                "--out-dir", (dir / sub).string()});
  };
  auto a = pipeline("a");
  ASSERT_EQ(a.code, 0) << a.err;
  auto b = pipeline("b");
  ASSERT_EQ(b.code, 0) << b.err;
  for (const char* f : {"train.csv", "validation.csv", "test.csv", "model.json", "correction.json",
                        "correction_linear.json", "predictions.csv", "report.json", "plot.csv"}) {
    ASSERT_TRUE(fs::exists(dir / "a" / f)) << f;
    EXPECT_EQ(read_file(dir / "a" / f), read_file(dir / "b" / f)) << f;
  }
  EXPECT_EQ(read_file(dir / "a" / "predictions.csv").substr(0, 33), "row,truth,prediction,linear,logit");
}

TEST(Cli, PipelineOnCsvWithPureForest) {
  const auto dir = scratch_dir();
  const std::string data = (dir / "d.csv").string();
  ASSERT_EQ(run({"synth", "--coeffs", "1,2,3", "--noise-terms", "1", "--n", "200", "--out", data}).code, 0);
  const auto r = run({"pipeline", "--data", data, "--forest", "pure", "--ntree", "10", "--leaf-min", "3",
                      "--format", "csv", "--out-dir", (dir / "out").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir / "out" / "report.csv"));
  EXPECT_FALSE(fs::exists(dir / "out" / "validation.csv"));
  EXPECT_NE(read_file(dir / "out" / "model.json").find("\"family\":\"pure\""), std::string::npos);
}

}  // namespace
}  // namespace rfbias
