#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "scs/app.hpp"
#include "scs/gradcheck.hpp"

namespace fs = std::filesystem;
using namespace scs;
using namespace scs::app;

namespace {

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() / ("scs_cli_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

struct CliResult {
  int code;
  std::string out, err;
};

CliResult cli(std::vector<std::string> args) {
  args.insert(args.begin(), "scsnet");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_text(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

const char* kTinyConfig =
    "model.base_channels = 8\n"
    "model.deep_channels = 16\n"
    "model.cpm_hidden = 16\n"
    "model.sr_blocks = 1\n"
    "model.disc_base = 4\n"
    "data.size = 8\n"
    "data.image_size = 32\n"
    "train.batch_size = 2\n"
    "train.max_steps = 4\n"
    "train.checkpoint_every = 2\n";

std::vector<std::string> log_lines(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  return lines;
}

// Trains the tiny config once and keeps the checkpoint for inference tests.
class TrainedModel : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir;
    write_text(dir_->path() / "c.txt", kTinyConfig);
    ASSERT_EQ(cli({"train", "--config", (dir_->path() / "c.txt").string(), "--out", (dir_->path() / "run").string()})
                  .code,
              kExitOk);
    ASSERT_EQ(cli({"datagen", "--out", (dir_->path() / "data").string(), "--n", "3", "--size", "64", "--seed", "4"})
                  .code,
              kExitOk);
  }
  static void TearDownTestSuite() { delete dir_; }
  static fs::path ckpt() { return dir_->path() / "run" / "latest.ckpt"; }
  static fs::path data() { return dir_->path() / "data"; }
  static fs::path gray(int size) {
    const fs::path p = dir_->path() / ("gray" + std::to_string(size) + ".png");
    if (!fs::exists(p)) {
      auto img = imaging::synth_image(11, size, size);
      auto lab = imaging::rgb_to_lab(img);
      for (std::int64_t i = 0; i < lab.plane(); ++i) lab.data[static_cast<std::size_t>(lab.plane() + i)] = 0.0f;
      for (std::int64_t i = 0; i < lab.plane(); ++i) lab.data[static_cast<std::size_t>(2 * lab.plane() + i)] = 0.0f;
      imaging::write_image(p, imaging::lab_to_rgb(lab));
    }
    return p;
  }
  static TempDir* dir_;
};

TempDir* TrainedModel::dir_ = nullptr;

}  // namespace

TEST(RunConfigTest, DefaultsRoundTripThroughDump) {
  const RunConfig defaults;
  const RunConfig parsed = parse_run_config(dump_run_config(defaults));
  EXPECT_EQ(dump_run_config(parsed), dump_run_config(defaults));
  EXPECT_EQ(run_config_keys().size(), 40u);
}

TEST(RunConfigTest, ParsesTypedValuesAndComments) {
  const auto c = parse_run_config(
      "# desk run\n"
      "model.base_channels = 16   # narrower\n"
      "\n"
      "loss.layer3=0.5\n"
      "train.scale = 2.5\n"
      "train.schedule = ref\n"
      "train.symmetric_d = true\n"
      "data.path = /tmp/x\n"
      "mode = ref\n");
  EXPECT_EQ(c.train.model.base_channels, 16);
  EXPECT_DOUBLE_EQ(c.train.loss.layers[2], 0.5);
  EXPECT_DOUBLE_EQ(c.train.scale, 2.5);
  EXPECT_EQ(c.train.schedule, training::ModeSchedule::kRef);
  EXPECT_TRUE(c.train.symmetric_d);
  EXPECT_EQ(c.data_path, "/tmp/x");
  EXPECT_EQ(c.mode, model::Mode::kRef);
}

TEST(RunConfigTest, UnknownKeyNamedWithLine) {
  try {
    parse_run_config("train.epochs = 2\nmodel.widht = 3\n", "cfg.txt");
    FAIL() << "expected UsageError";
  } catch (const UsageError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("model.widht"), std::string::npos);
    EXPECT_NE(msg.find("cfg.txt:2"), std::string::npos);
  }
}

TEST(RunConfigTest, BadValuesRejected) {
  EXPECT_THROW(parse_run_config("train.epochs = two\n"), UsageError);
  EXPECT_THROW(parse_run_config("train.epochs = 2x\n"), UsageError);
  EXPECT_THROW(parse_run_config("train.seed = -1\n"), UsageError);
  EXPECT_THROW(parse_run_config("train.symmetric_d = maybe\n"), UsageError);
  EXPECT_THROW(parse_run_config("mode = sideways\n"), UsageError);
  EXPECT_THROW(parse_run_config("just words\n"), UsageError);
}

TEST(RunConfigTest, SeedEnvironmentOverride) {
  RunConfig c = parse_run_config("train.seed = 5\n");
  ::setenv("SCS_SEED", "42", 1);
  apply_env_overrides(c);
  EXPECT_EQ(c.train.seed, 42u);
  ::setenv("SCS_SEED", "abc", 1);
  EXPECT_THROW(apply_env_overrides(c), UsageError);
  ::unsetenv("SCS_SEED");
  c.train.seed = 5;
  apply_env_overrides(c);
  EXPECT_EQ(c.train.seed, 5u);
}

TEST(CliTest, DatagenWritesManifestAndIsDeterministic) {
  TempDir t;
  const auto a = t.path() / "a", b = t.path() / "b";
  ASSERT_EQ(cli({"datagen", "--out", a.string(), "--n", "5", "--size", "32", "--seed", "7"}).code, kExitOk);
  ASSERT_EQ(cli({"datagen", "--out", b.string(), "--n", "5", "--size", "32", "--seed", "7"}).code, kExitOk);
  const auto entries = imaging::read_manifest(a / "manifest.txt");
  ASSERT_EQ(entries.size(), 5u);
  for (const auto& e : entries) {
    EXPECT_TRUE(fs::exists(e));
    EXPECT_EQ(slurp(e), slurp(b / e.filename()));
    const auto img = imaging::read_image(e);
    EXPECT_EQ(img.height, 32);
    EXPECT_EQ(img.width, 32);
  }
}

TEST(CliTest, DatagenHundredImages) {
  TempDir t;
  ASSERT_EQ(cli({"datagen", "--out", t.path().string(), "--n", "100", "--size", "64", "--seed", "1"}).code, kExitOk);
  EXPECT_EQ(imaging::read_manifest(t.path() / "manifest.txt").size(), 100u);
}

TEST(CliTest, DatagenZeroIsUsageErrorAndTouchesNothing) {
  TempDir t;
  const auto out = t.path() / "never";
  const auto r = cli({"datagen", "--out", out.string(), "--n", "0"});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("--n"), std::string::npos);
  EXPECT_FALSE(fs::exists(out));
}

TEST(CliTest, UsageErrors) {
  EXPECT_EQ(cli({}).code, kExitUsage);
  EXPECT_EQ(cli({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(cli({"datagen", "--n", "3"}).code, kExitUsage);
  EXPECT_EQ(cli({"colorize", "--ckpt", "x", "--input", "y", "--scale", "abc", "--out", "z"}).code, kExitUsage);
  EXPECT_EQ(cli({"--help"}).code, kExitOk);
}

TEST(CliTest, MalformedConfigKeyNamed) {
  TempDir t;
  write_text(t.path() / "c.txt", std::string(kTinyConfig) + "train.batchsize = 3\n");
  const auto r = cli({"train", "--config", (t.path() / "c.txt").string(), "--out", (t.path() / "run").string()});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("train.batchsize"), std::string::npos);
  EXPECT_FALSE(fs::exists(t.path() / "run"));
}

TEST(CliTest, MissingConfigIsDataError) {
  TempDir t;
  EXPECT_EQ(cli({"train", "--config", (t.path() / "nope.txt").string(), "--out", t.path().string()}).code, kExitData);
}

TEST(CliTest, TrainResumeKeepsStepCounterContiguous) {
  TempDir t;
  write_text(t.path() / "c.txt", kTinyConfig);
  const auto run = t.path() / "run";
  ASSERT_EQ(cli({"train", "--config", (t.path() / "c.txt").string(), "--out", run.string()}).code, kExitOk);
  EXPECT_TRUE(fs::exists(run / "step_0002.ckpt"));
  EXPECT_TRUE(fs::exists(run / "step_0004.ckpt"));
  const auto uninterrupted = log_lines(run / "train.log");
  ASSERT_EQ(uninterrupted.size(), 4u);

  // Same run split in two: 2 steps, then resume to 4.
  const auto split = t.path() / "split";
  write_text(t.path() / "c2.txt", std::string(kTinyConfig) + "train.max_steps = 2\n");
  ASSERT_EQ(cli({"train", "--config", (t.path() / "c2.txt").string(), "--out", split.string()}).code, kExitOk);
  ASSERT_EQ(cli({"train", "--config", (t.path() / "c.txt").string(), "--out", split.string(), "--resume"}).code,
            kExitOk);
  const auto resumed = log_lines(split / "train.log");
  ASSERT_EQ(resumed.size(), 4u);
  for (std::size_t i = 0; i < resumed.size(); ++i) {
    EXPECT_EQ(training::parse_log_line(resumed[i]).step, static_cast<std::int64_t>(i + 1));
    EXPECT_EQ(resumed[i], uninterrupted[i]);
  }
}

TEST(CliTest, ResumeWithoutCheckpointIsDataError) {
  TempDir t;
  write_text(t.path() / "c.txt", kTinyConfig);
  EXPECT_EQ(cli({"train", "--config", (t.path() / "c.txt").string(), "--out", (t.path() / "r").string(), "--resume"})
                .code,
            kExitData);
}

TEST(CliTest, SeedEnvironmentChangesTraining) {
  TempDir t;
  write_text(t.path() / "c.txt", std::string(kTinyConfig) + "train.max_steps = 1\n");
  ASSERT_EQ(cli({"train", "--config", (t.path() / "c.txt").string(), "--out", (t.path() / "a").string()}).code, kExitOk);
  ::setenv("SCS_SEED", "77", 1);
  const int code = cli({"train", "--config", (t.path() / "c.txt").string(), "--out", (t.path() / "b").string()}).code;
  ::unsetenv("SCS_SEED");
  ASSERT_EQ(code, kExitOk);
  EXPECT_NE(slurp(t.path() / "a" / "train.log"), slurp(t.path() / "b" / "train.log"));
  EXPECT_NE(slurp(t.path() / "b" / "config.txt").find("train.seed = 77"), std::string::npos);
}

TEST(CliTest, NonFiniteLossExitsWithNumericalCode) {
  TempDir t;
  write_text(t.path() / "c.txt", std::string(kTinyConfig) + "optim.lr = 1e30\n");
  const auto r = cli({"train", "--config", (t.path() / "c.txt").string(), "--out", (t.path() / "run").string()});
  EXPECT_EQ(r.code, kExitNumerical);
  EXPECT_NE(r.err.find("not finite"), std::string::npos);
}

TEST_F(TrainedModel, ColorizeScaleFourGivesSixtyFour) {
  const auto out = dir_->path() / "o4.png";
  ASSERT_EQ(cli({"colorize", "--ckpt", ckpt().string(), "--input", gray(16).string(), "--scale", "4", "--out",
                 out.string()})
                .code,
            kExitOk);
  const auto img = imaging::read_image(out);
  EXPECT_EQ(img.height, 64);
  EXPECT_EQ(img.width, 64);
}

TEST_F(TrainedModel, ColorizeFractionalScale) {
  const auto out = dir_->path() / "o25.png";
  ASSERT_EQ(cli({"colorize", "--ckpt", ckpt().string(), "--input", gray(32).string(), "--scale", "2.5", "--out",
                 out.string()})
                .code,
            kExitOk);
  const auto img = imaging::read_image(out);
  EXPECT_EQ(img.height, 80);
  EXPECT_EQ(img.width, 80);
}

TEST_F(TrainedModel, RefModeWithoutReferenceIsUsageError) {
  const auto out = dir_->path() / "never.png";
  const auto r = cli({"colorize", "--ckpt", ckpt().string(), "--input", gray(32).string(), "--scale", "2", "--mode",
                      "ref", "--out", out.string()});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("--ref"), std::string::npos);
  EXPECT_FALSE(fs::exists(out));
}

TEST_F(TrainedModel, RefModeRunsAndDiffersFromAuto) {
  const auto auto_out = dir_->path() / "ra.png", ref_out = dir_->path() / "rr.png";
  const auto ref = imaging::read_manifest(data() / "manifest.txt")[0];
  ASSERT_EQ(cli({"colorize", "--ckpt", ckpt().string(), "--input", gray(32).string(), "--scale", "2", "--out",
                 auto_out.string()})
                .code,
            kExitOk);
  ASSERT_EQ(cli({"colorize", "--ckpt", ckpt().string(), "--input", gray(32).string(), "--scale", "2", "--mode", "ref",
                 "--ref", ref.string(), "--out", ref_out.string()})
                .code,
            kExitOk);
  EXPECT_NE(slurp(auto_out), slurp(ref_out));
}

TEST_F(TrainedModel, AutoModeIgnoresReference) {
  const auto a = dir_->path() / "a.png", b = dir_->path() / "b.png";
  const auto ref = imaging::read_manifest(data() / "manifest.txt")[1];
  ASSERT_EQ(cli({"colorize", "--ckpt", ckpt().string(), "--input", gray(32).string(), "--scale", "2", "--out",
                 a.string()})
                .code,
            kExitOk);
  const auto r = cli({"colorize", "--ckpt", ckpt().string(), "--input", gray(32).string(), "--scale", "2", "--ref",
                      ref.string(), "--out", b.string()});
  ASSERT_EQ(r.code, kExitOk);
  EXPECT_NE(r.out.find("warning"), std::string::npos);
  EXPECT_EQ(slurp(a), slurp(b));
}

TEST_F(TrainedModel, CorruptCheckpointIsDataError) {
  const auto bad = dir_->path() / "bad.ckpt";
  auto bytes = slurp(ckpt());
  bytes[4] = 9;  // version field
  std::ofstream(bad, std::ios::binary) << bytes;
  EXPECT_EQ(cli({"colorize", "--ckpt", bad.string(), "--input", gray(16).string(), "--scale", "2", "--out",
                 (dir_->path() / "x.png").string()})
                .code,
            kExitData);
}

TEST_F(TrainedModel, EvalReportHasOneRowPerImage) {
  for (const char* mode : {"auto", "ref"}) {
    const auto r = cli({"eval", "--ckpt", ckpt().string(), "--dataset", data().string(), "--scale", "2.5", "--mode",
                        mode, "--report", (dir_->path() / "report.txt").string()});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    const auto csv = r.out.substr(r.out.find("image,psnr"));
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 3 + 1);
    EXPECT_EQ(slurp(dir_->path() / "report.txt"), r.out);
  }
}

TEST_F(TrainedModel, EvalIsDeterministic) {
  const auto a = cli({"eval", "--ckpt", ckpt().string(), "--dataset", data().string(), "--scale", "2", "--mode", "ref"});
  const auto b = cli({"eval", "--ckpt", ckpt().string(), "--dataset", data().string(), "--scale", "2", "--mode", "ref"});
  EXPECT_EQ(a.out, b.out);
}

TEST(EvalTest, IdentityPredictorGivesPerfectScores) {
  const auto images = imaging::synth_dataset(3, 4, 40);
  const Predictor identity = [](const imaging::SamplePair& pair, std::size_t, model::Mode) { return pair.target_rgb; };
  const auto result = evaluate_dataset(images, {}, 2.5, model::Mode::kAuto, identity);
  ASSERT_EQ(result.rows.size(), 4u);
  for (const auto& row : result.rows) {
    EXPECT_TRUE(std::isinf(row.report.psnr));
    EXPECT_DOUBLE_EQ(row.report.ssim, 1.0);
  }
  EXPECT_TRUE(std::isinf(result.mean.psnr));
  std::ostringstream report;
  write_eval_report(result, report);
  EXPECT_NE(report.str().find("mean,inf,1.000000"), std::string::npos);
}

TEST(EvalTest, EmptyDatasetIsError) {
  const Predictor identity = [](const imaging::SamplePair& pair, std::size_t, model::Mode) { return pair.target_rgb; };
  EXPECT_THROW(evaluate_dataset({}, {}, 2.0, model::Mode::kAuto, identity), DataError);
  TempDir t;
  imaging::write_manifest(t.path() / "manifest.txt", {});
  const auto r = cli({"eval", "--ckpt", "missing.ckpt", "--dataset", t.path().string(), "--scale", "2"});
  EXPECT_EQ(r.code, kExitData);
}

TEST(EvalTest, EmptyManifestReported) {
  TempDir t;
  imaging::write_manifest(t.path() / "manifest.txt", {});
  write_text(t.path() / "c.txt", std::string(kTinyConfig) + "train.max_steps = 1\n");
  ASSERT_EQ(cli({"train", "--config", (t.path() / "c.txt").string(), "--out", (t.path() / "run").string()}).code,
            kExitOk);
  const auto r = cli({"eval", "--ckpt", (t.path() / "run" / "latest.ckpt").string(), "--dataset", t.path().string(),
                      "--scale", "2"});
  EXPECT_EQ(r.code, kExitData);
  EXPECT_NE(r.err.find("empty"), std::string::npos);
}

TEST(GradcheckCliTest, FreshBuildPasses) {
  const auto r = cli({"gradcheck", "--seed", "3", "--seeds", "2"});
  EXPECT_EQ(r.code, kExitOk) << r.out;
  EXPECT_NE(r.out.find("all 34 checks passed"), std::string::npos);
}

TEST(GradcheckCliTest, CorruptedAdjointFails) {
  const auto r = cli({"gradcheck", "--seeds", "2", "--corrupted"});
  EXPECT_NE(r.code, kExitOk);
  EXPECT_NE(r.out.find("FAILED: corrupted_cube"), std::string::npos);
}

TEST(GradcheckCliTest, TableListsEveryCheck) {
  const auto r = cli({"gradcheck", "--seeds", "1"});
  std::istringstream in(r.out);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header.rfind("check", 0), 0u);
  EXPECT_NE(header.find("worst_rel_err"), std::string::npos);
  std::size_t rows = 0;
  for (std::string line; std::getline(in, line);) {
    if (line.find("PASS") != std::string::npos || line.find("FAIL") != std::string::npos) ++rows;
  }
  EXPECT_EQ(rows, gradcheck::primitive_cases().size() + 2);
}
