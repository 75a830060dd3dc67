#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "edgeadain/metrics.hpp"
#include "edgeadain/png_io.hpp"
#include "test_util.hpp"

using namespace edgeadain;
using namespace testutil;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
};

Result run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + (env.empty() ? "" : " ") + std::string(EDGEADAIN_CLI) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  std::string out;
  std::array<char, 4096> buf;
  while (std::fgets(buf.data(), buf.size(), pipe)) out += buf.data();
  const int status = pclose(pipe);
  return {WEXITSTATUS(status), out};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

Image vessel_image(int h, int w) {
  Image img(h, w, 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double cx = w / 2 + 8 * std::sin(y * 0.15);
      img.at(y, x) = static_cast<float>(0.75 - 0.5 * std::exp(-(x - cx) * (x - cx) / 3.0) +
                                        0.05 * std::sin(x * 0.9 + y * 0.4));
    }
  return img;
}

// One tiny trained checkpoint shared by the whole suite.
class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = new TempDir("cli");
    fs::create_directories(dir() / "content");
    fs::create_directories(dir() / "style");
    for (int i = 0; i < 2; ++i)
      write_png(dir() / "content" / ("c" + std::to_string(i) + ".png"), random_image(24, 24, 3, 10 + i));
    write_png(dir() / "style" / "s.png", random_image(24, 24, 3, 20));
    write_png(dir() / "style.png", random_image(32, 32, 3, 21));
    write_png(dir() / "input.png", vessel_image(40, 36));
    const Result r = run("train --input-dir " + q(dir() / "content") + " --style " + q(dir() / "style") +
                         " --out " + q(dir() / "model") + " --iters 1 --crop 16 --seed 3");
    ASSERT_EQ(r.code, 0) << r.out;
  }
  static void TearDownTestSuite() { delete root_; }
  static fs::path dir() { return root_->path(); }
  static std::string model() { return q(dir() / "model" / "final"); }

  static inline TempDir* root_ = nullptr;
};

}  // namespace

TEST_F(Cli, TrainWritesCheckpointAndLog) {
  EXPECT_TRUE(fs::exists(dir() / "model" / "final" / "manifest.json"));
  EXPECT_TRUE(fs::exists(dir() / "model" / "final" / "checkpoint.json"));
  std::istringstream log(slurp(dir() / "model" / "train_log.csv"));
  std::string line;
  int rows = -1;
  while (std::getline(log, line)) ++rows;
  EXPECT_EQ(rows, 1);
}

TEST_F(Cli, TrainSeedIsDeterministic) {
  const std::string base = "train --input-dir " + q(dir() / "content") + " --style " + q(dir() / "style") +
                           " --iters 2 --crop 16 --seed 7 --lr 1e-3 --alpha 1 --beta 0.1 --gamma 0.2 --out ";
  ASSERT_EQ(run(base + q(dir() / "s7a")).code, 0);
  ASSERT_EQ(run(base + q(dir() / "s7b")).code, 0);
  EXPECT_EQ(slurp(dir() / "s7a" / "train_log.csv"), slurp(dir() / "s7b" / "train_log.csv"));
  EXPECT_NE(slurp(dir() / "s7a" / "final" / "checkpoint.json").find("\"beta\": 0.1"), std::string::npos);
}

TEST_F(Cli, SegmentWritesBinaryMask) {
  const fs::path out = dir() / "mask.png";
  const Result r = run("segment --input " + q(dir() / "input.png") + " --style " + q(dir() / "style.png") +
                       " --weights " + model() + " --out " + q(out));
  ASSERT_EQ(r.code, 0) << r.out;
  const Image m = read_png(out);
  EXPECT_EQ(m.height(), 40);
  EXPECT_EQ(m.width(), 36);
  for (float v : m.data()) EXPECT_TRUE(v == 0.0f || v == 1.0f);
}

TEST_F(Cli, SegmentIsByteIdenticalAcrossRuns) {
  const std::string args = "segment --input " + q(dir() / "input.png") + " --style " + q(dir() / "style.png") +
                           " --weights " + model() + " --out ";
  ASSERT_EQ(run(args + q(dir() / "m1.png")).code, 0);
  ASSERT_EQ(run(args + q(dir() / "m2.png")).code, 0);
  EXPECT_EQ(slurp(dir() / "m1.png"), slurp(dir() / "m2.png"));
}

TEST_F(Cli, SegmentConstantInputIsBackground) {
  write_png(dir() / "flat.png", Image(32, 32, 1, 0.5f));
  const Result r = run("segment --input " + q(dir() / "flat.png") + " --style " + q(dir() / "style.png") +
                       " --weights " + model() + " --out " + q(dir() / "flat_mask.png"));
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(read_mask_png(dir() / "flat_mask.png").count(), 0u);
}

TEST_F(Cli, SegmentSelfComparisonScoresPerfectDice) {
  const std::string base = "segment --input " + q(dir() / "input.png") + " --style " + q(dir() / "style.png") +
                           " --weights " + model();
  ASSERT_EQ(run(base + " --out " + q(dir() / "self.png")).code, 0);
  const Result r = run(base + " --out " + q(dir() / "self2.png") + " --gt " + q(dir() / "self.png") +
                       " --overlay " + q(dir() / "overlay.png"));
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("dice=1.000000"), std::string::npos) << r.out;
  const Image ov = read_png(dir() / "overlay.png");
  EXPECT_EQ(ov.channels(), 3);
}

TEST_F(Cli, WeightsFromEnvironment) {
  const Result r = run("segment --input " + q(dir() / "input.png") + " --style " + q(dir() / "style.png") +
                           " --out " + q(dir() / "env.png"),
                       "EDGEADAIN_WEIGHTS=" + q(dir() / "model"));
  ASSERT_EQ(r.code, 0) << r.out;
  ASSERT_EQ(run("segment --input " + q(dir() / "input.png") + " --style " + q(dir() / "style.png") +
                " --weights " + model() + " --out " + q(dir() / "explicit.png"))
                .code,
            0);
  EXPECT_EQ(slurp(dir() / "env.png"), slurp(dir() / "explicit.png"));
}

TEST_F(Cli, MissingFilesFailWithoutPartialOutputs) {
  const fs::path out = dir() / "never.png";
  Result r = run("segment --input " + q(dir() / "nope.png") + " --style " + q(dir() / "style.png") +
                 " --weights " + model() + " --out " + q(out));
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.out.find("nope.png"), std::string::npos) << r.out;
  EXPECT_FALSE(fs::exists(out));

  // Output path written before a later failure is removed again.
  r = run("segment --input " + q(dir() / "input.png") + " --style " + q(dir() / "style.png") +
          " --weights " + model() + " --out " + q(out) + " --gt " + q(dir() / "style.png") + " --overlay " +
          q(dir() / "no_such_dir" / "ov.png"));
  EXPECT_NE(r.code, 0);
  EXPECT_FALSE(fs::exists(out));

  r = run("segment --input " + q(dir() / "input.png") + " --style " + q(dir() / "style.png") +
          " --weights " + q(dir() / "missing_ckpt") + " --out " + q(out));
  EXPECT_NE(r.code, 0);
  EXPECT_FALSE(fs::exists(out));
}

TEST_F(Cli, ConfigFileAndFlagPrecedence) {
  std::ofstream(dir() / "cfg.json") << R"({"train": {"iterations": 4, "crop": 16, "seed": 1}})";
  Result r = run("train --config " + q(dir() / "cfg.json") + " --input-dir " + q(dir() / "content") +
                 " --style " + q(dir() / "style") + " --out " + q(dir() / "cfgrun") + " --iters 2");
  ASSERT_EQ(r.code, 0) << r.out;
  std::istringstream log(slurp(dir() / "cfgrun" / "train_log.csv"));
  std::string line;
  int rows = -1;
  while (std::getline(log, line)) ++rows;
  EXPECT_EQ(rows, 2);

  std::ofstream(dir() / "bad.json") << R"({"train": {"iteratons": 4}})";
  r = run("train --config " + q(dir() / "bad.json") + " --input-dir " + q(dir() / "content") + " --style " +
          q(dir() / "style") + " --out " + q(dir() / "badrun"));
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.out.find("iteratons"), std::string::npos) << r.out;
  EXPECT_FALSE(fs::exists(dir() / "badrun"));
}

TEST_F(Cli, PreprocessEdgesStylize) {
  ASSERT_EQ(run("preprocess --input " + q(dir() / "input.png") + " --out " + q(dir() / "pre.png")).code, 0);
  EXPECT_EQ(read_png(dir() / "pre.png").height(), 40);
  ASSERT_EQ(run("edges --input " + q(dir() / "input.png") + " --out " + q(dir() / "edge.png")).code, 0);
  ASSERT_EQ(run("edges --edge-on-raw --input " + q(dir() / "input.png") + " --out " + q(dir() / "edge_raw.png")).code, 0);
  const Result r = run("stylize --input " + q(dir() / "input.png") + " --style " + q(dir() / "style.png") +
                       " --weights " + model() + " --edge " + q(dir() / "edge.png") + " --edge-weight 0.5 --out " +
                       q(dir() / "styl.png"));
  ASSERT_EQ(r.code, 0) << r.out;
  const Image s = read_png(dir() / "styl.png");
  EXPECT_EQ(s.height(), 40);
  EXPECT_EQ(s.width(), 36);

  const Result bad = run("stylize --input " + q(dir() / "input.png") + " --style " + q(dir() / "style.png") +
                         " --weights " + model() + " --edge-provider file --edge-file " + q(dir() / "style.png") +
                         " --out " + q(dir() / "bad_styl.png"));
  EXPECT_NE(bad.code, 0);
  EXPECT_NE(bad.out.find("edge map size mismatch"), std::string::npos) << bad.out;
}

TEST_F(Cli, EvalMatchesLibraryAndReportsTables) {
  fs::create_directories(dir() / "pred");
  fs::create_directories(dir() / "gt");
  for (int i = 0; i < 3; ++i) {
    const std::string n = "x" + std::to_string(i) + ".png";
    write_mask_png(dir() / "pred" / n, random_mask(12, 12, 80 + i));
    write_mask_png(dir() / "gt" / n, random_mask(12, 12, 90 + i));
  }
  const Result r = run("eval --input-dir " + q(dir() / "pred") + " --gt " + q(dir() / "gt") + " --report " +
                       q(dir() / "report.csv"));
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(slurp(dir() / "report.csv"), report_csv(evaluate_batch(dir() / "pred", dir() / "gt")));
  EXPECT_TRUE(fs::exists(dir() / "report.md"));
  EXPECT_NE(r.out.find("| Method | Sensitivity | Specificity | Accuracy | Dice |"), std::string::npos);
  EXPECT_NE(r.out.find("Detection Rate"), std::string::npos);

  const Result self = run("eval --input-dir " + q(dir() / "gt") + " --gt " + q(dir() / "gt"));
  ASSERT_EQ(self.code, 0);
  EXPECT_NE(self.out.find("1.0000 | 1.0000 | 1.0000 | 1.0000"), std::string::npos) << self.out;

  write_mask_png(dir() / "pred" / "extra.png", BinaryMask(12, 12));
  const Result bad = run("eval --input-dir " + q(dir() / "pred") + " --gt " + q(dir() / "gt") + " --report " +
                         q(dir() / "bad.csv"));
  EXPECT_NE(bad.code, 0);
  EXPECT_NE(bad.out.find("extra.png"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir() / "bad.csv"));
}

TEST_F(Cli, BenchReportsPerImageRows) {
  fs::create_directories(dir() / "bench");
  write_png(dir() / "bench" / "a.png", vessel_image(32, 32));
  write_png(dir() / "bench" / "b.png", vessel_image(24, 40));
  const Result r = run("bench --input-dir " + q(dir() / "bench") + " --style " + q(dir() / "style.png") +
                       " --weights " + model() + " --repeat 3 --report " + q(dir() / "bench.csv"));
  ASSERT_EQ(r.code, 0) << r.out;
  std::istringstream csv(slurp(dir() / "bench.csv"));
  std::string line;
  int rows = -1;
  while (std::getline(csv, line)) rows += line.empty() ? 0 : 1;
  EXPECT_EQ(rows, 2);
  EXPECT_NE(r.out.find("Execution Time/image (s)"), std::string::npos) << r.out;
  EXPECT_NE(run("bench --input-dir " + q(dir() / "gt_missing") + " --style " + q(dir() / "style.png") +
                " --weights " + model())
                .code,
            0);
}

TEST_F(Cli, UsageErrors) {
  EXPECT_NE(run("").code, 0);
  EXPECT_NE(run("segment --out x.png").code, 0);
  EXPECT_NE(run("train --encoder resnet").code, 0);
}
