#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "commands.hpp"
#include "manifest.hpp"
#include "test_support.hpp"

namespace dtstyle::cli {
namespace {

namespace fs = std::filesystem;
using dtstyle::testing::scratch_dir;

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ErrorCategory classify_run(const RunManifest& m, std::ostream& log) {
  try {
    run_generate(m, log);
  } catch (const std::exception& e) {
    return classify(e).category();
  }
  ADD_FAILURE() << "run succeeded";
  return ErrorCategory::runtime;
}

class CliTest : public ::testing::Test {
 protected:
  fs::path dir_ = scratch_dir("cli");

  void SetUp() override {
    save_png(dir_ / "content.png", dtstyle::testing::disc_image(16, 16, 7.5, 7.5, 4));
    save_png(dir_ / "style.png", dtstyle::testing::checker_image(16, 16, 2, {220, 40, 40}, {30, 30, 190}));
  }
  void TearDown() override { fs::remove_all(dir_); }

  RunManifest tiny_manifest(const std::string& out = "run") const {
    RunManifest m;
    m.content = dir_ / "content.png";
    m.style = dir_ / "style.png";
    m.weights = dtstyle::testing::fixture_path();
    m.out = dir_ / out;
    m.width = m.height = 16;
    m.content_layer = "conv1_2";
    m.style_layers = {"conv1_1", "conv1_2"};
    m.optim.iterations = 6;
    m.optim.snapshot_every = 3;
    return m;
  }

  int run_binary(const std::string& args, std::string* err = nullptr) const {
    const fs::path err_file = dir_ / "stderr.txt";
    const std::string cmd = std::string(DTSTYLE_CLI_PATH) + " " + args + " >" + (dir_ / "stdout.txt").string() +
                            " 2>" + err_file.string();
    const int status = std::system(cmd.c_str());
    if (err) *err = slurp(err_file);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }
};

TEST(Manifest, DefaultsRoundTrip) {
  const RunManifest m;
  EXPECT_EQ(parse_manifest(to_text(m)), m);
}

TEST(Manifest, EveryFieldRoundTrips) {
  RunManifest m;
  m.content = "a b/c.png";
  m.style = "s.jpg";
  m.out = "/tmp/o";
  m.weights = "w.cnstw";
  m.weights_hash = 0x00abcdefu;
  m.width = 320;
  m.height = 200;
  m.threshold = 0.3;
  m.invert = true;
  m.normalize_distance = false;
  m.alpha = 0.1 + 0.2;
  m.beta = 1e-7;
  m.gamma = 0.01;
  m.power = 5;
  m.content_layer = "conv3_1";
  m.style_layers = {"conv1_1", "conv3_1"};
  m.style_weights = {0.25, 0.75};
  m.pool = PoolMode::average;
  m.preprocess = {{1.5, 2, 250}, ChannelOrder::rgb};
  m.optim.iterations = 17;
  m.optim.learning_rate = 0.3;
  m.optim.adam_beta1 = 0.8;
  m.optim.adam_beta2 = 0.99;
  m.optim.adam_epsilon = 1e-6;
  m.optim.snapshot_every = 0;
  m.optim.seed = 123456789012345ull;
  EXPECT_EQ(parse_manifest(to_text(m)), m);
}

TEST(Manifest, CommentsAndWhitespace) {
  const RunManifest m = parse_manifest("# header\n\n  gamma =  0.5  \nresolution = 64\n# gamma = 3\n");
  EXPECT_EQ(m.gamma, 0.5);
  EXPECT_EQ(m.width, 64u);
  EXPECT_EQ(m.height, 64u);
}

TEST(Manifest, Rejections) {
  EXPECT_THROW(parse_manifest("colour = red\n"), ManifestError);
  EXPECT_THROW(parse_manifest("gamma = 1\ngamma = 2\n"), ManifestError);
  EXPECT_THROW(parse_manifest("gamma 1\n"), ManifestError);
  EXPECT_THROW(parse_manifest("gamma = one\n"), ManifestError);
  EXPECT_THROW(parse_manifest("invert = yes\n"), ManifestError);
  EXPECT_THROW(parse_manifest("resolution = 0\n"), ManifestError);
  EXPECT_THROW(parse_manifest("weights_hash = 12\n"), ManifestError);
  EXPECT_THROW(parse_manifest("channel_mean = 1,2\n"), ManifestError);
  EXPECT_THROW(parse_manifest("pool = min\n"), ManifestError);
}

TEST(Sweep, Variants) {
  RunManifest base;
  base.out = "sw";
  base.beta = 2.0;
  EXPECT_EQ(sweep_variant(base, SweepAxis::gamma, 0.01).gamma, 0.01);
  EXPECT_EQ(sweep_variant(base, SweepAxis::alpha_beta, 0.5).alpha, 1.0);
  EXPECT_EQ(sweep_variant(base, SweepAxis::power, 3).power, 3);
  EXPECT_EQ(sweep_variant(base, SweepAxis::gamma, 0.01).out, fs::path("sw") / "gamma_0.01");
  EXPECT_THROW(sweep_variant(base, SweepAxis::power, 2.5), CliError);
  EXPECT_THROW(sweep_variant(base, SweepAxis::power, 0), CliError);
  EXPECT_THROW(parse_axis("beta"), CliError);
}

TEST(Errors, CategoriesAndExitCodes) {
  EXPECT_EQ(exit_code(ErrorCategory::bad_arguments), 2);
  EXPECT_EQ(exit_code(ErrorCategory::input_missing), 3);
  EXPECT_EQ(exit_code(ErrorCategory::input_invalid), 3);
  EXPECT_EQ(exit_code(ErrorCategory::weight_file), 4);
  EXPECT_EQ(exit_code(ErrorCategory::runtime), 5);
  std::ostringstream err;
  EXPECT_EQ(report_error(CliError(ErrorCategory::input_missing, "no\nfile"), err), 3);
  EXPECT_EQ(err.str(), "error: input-missing: no file\n");
  EXPECT_EQ(classify(ManifestError("x")).category(), ErrorCategory::bad_arguments);
  EXPECT_EQ(classify(std::runtime_error("x")).category(), ErrorCategory::runtime);
}

TEST(Grid, LabelsAndLayout) {
  const Image panel(20, 10, std::array<std::uint8_t, 3>{128, 128, 128});
  const Image grid = compose_grid({panel, panel, panel}, {"g=1", "g=2", "g=3"});
  EXPECT_EQ(grid.width(), 3 * 20 + 4 * 8u);
  EXPECT_GT(grid.height(), 10u + 16u);
  EXPECT_EQ(grid.at(8, 8, 0), 128);
  std::size_t dark = 0;
  for (std::size_t y = 18; y < grid.height(); ++y) {
    for (std::size_t x = 0; x < grid.width(); ++x) dark += grid.at(x, y, 0) == 0;
  }
  EXPECT_GT(dark, 0u);
  EXPECT_THROW(compose_grid({panel}, {}), std::invalid_argument);
}

TEST_F(CliTest, GenerateWritesOutputs) {
  std::ostringstream log;
  const RunManifest m = tiny_manifest();
  run_generate(m, log);
  const Image result = load_image(m.out / kResultPng);
  EXPECT_EQ(result.width(), 16u);
  EXPECT_EQ(result.height(), 16u);
  EXPECT_TRUE(fs::exists(m.out / snapshot_name(3)));
  EXPECT_TRUE(fs::exists(m.out / snapshot_name(6)));
  EXPECT_EQ(snapshot_name(6), "snap_000006.png");

  std::istringstream csv(slurp(m.out / kLossCsv));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "iteration,content,style,distance,total");
  std::size_t rows = 0;
  while (std::getline(csv, line)) ++rows;
  EXPECT_EQ(rows, 7u);

  const RunManifest echo = load_manifest(m.out / kManifestEcho);
  ASSERT_TRUE(echo.weights_hash.has_value());
  EXPECT_EQ(*echo.weights_hash, 0x2144df1cu);
  RunManifest expected = m;
  expected.weights_hash = echo.weights_hash;
  EXPECT_EQ(echo, expected);
}

TEST_F(CliTest, GammaIsolatedToOneManifestLine) {
  RunManifest a = tiny_manifest("a"), b = tiny_manifest("b");
  a.gamma = 0.0;
  b.out = a.out;
  std::istringstream ta(to_text(a)), tb(to_text(b));
  std::string la, lb;
  std::vector<std::string> differing;
  while (std::getline(ta, la) && std::getline(tb, lb)) {
    if (la != lb) differing.push_back(la);
  }
  EXPECT_EQ(differing, std::vector<std::string>{"gamma = 0"});
}

TEST_F(CliTest, HashMismatchIsWeightFileError) {
  RunManifest m = tiny_manifest();
  m.weights_hash = 0x12345678u;
  std::ostringstream log;
  try {
    run_generate(m, log);
    FAIL();
  } catch (const CliError& e) {
    EXPECT_EQ(e.category(), ErrorCategory::weight_file);
  }
}

TEST_F(CliTest, ArgumentProblemsAreBadArguments) {
  std::ostringstream log;
  RunManifest m = tiny_manifest();
  m.content_layer = "conv4_2";
  EXPECT_EQ(classify_run(m, log), ErrorCategory::bad_arguments);
  m = tiny_manifest();
  m.style_weights = {1.0};
  EXPECT_EQ(classify_run(m, log), ErrorCategory::bad_arguments);
}

TEST_F(CliTest, BlankContentIsInvalidInput) {
  save_png(dir_ / "white.png", Image(16, 16, std::array<std::uint8_t, 3>{255, 255, 255}));
  RunManifest m = tiny_manifest();
  m.content = dir_ / "white.png";
  std::ostringstream log;
  EXPECT_EQ(classify_run(m, log), ErrorCategory::input_invalid);
}

TEST_F(CliTest, SweepProducesRunsAndGrid) {
  RunManifest base = tiny_manifest("sweep");
  base.optim.snapshot_every = 0;
  std::ostringstream log;
  run_sweep(base, SweepAxis::gamma, {0.0001, 0.01, 1.0}, 2, log);
  for (double v : {0.0001, 0.01, 1.0}) {
    EXPECT_TRUE(fs::exists(base.out / sweep_dir_name(SweepAxis::gamma, v) / kResultPng)) << v;
  }
  const Image grid = load_image(base.out / kGridPng);
  EXPECT_EQ(grid.width(), 3 * 16 + 4 * 8u);
  EXPECT_THROW(run_sweep(base, SweepAxis::gamma, {1.0}, 1, log), CliError);
}

TEST_F(CliTest, DistanceDebug) {
  DistanceDebugOptions opt;
  opt.content = dir_ / "content.png";
  opt.out = dir_ / "dbg";
  std::ostringstream log;
  run_distance_debug(opt, log);
  const Image mask = load_image(opt.out / kMaskPng);
  EXPECT_EQ(mask.at(7, 7, 0), 0);
  EXPECT_EQ(mask.at(0, 0, 0), 255);
  const Image field = load_image(opt.out / kDistancePng);
  EXPECT_EQ(field.at(7, 7, 0), 255);
  EXPECT_LT(field.at(0, 0, 0), field.at(12, 7, 0));

  opt.invert = true;
  opt.out = dir_ / "dbg_inv";
  run_distance_debug(opt, log);
  const Image inv = load_image(opt.out / kMaskPng);
  for (std::size_t y = 0; y < 16; ++y) {
    for (std::size_t x = 0; x < 16; ++x) EXPECT_NE(inv.at(x, y, 0), mask.at(x, y, 0));
  }
}

TEST_F(CliTest, BinaryGenerateSucceeds) {
  const RunManifest m = tiny_manifest("bin");
  std::ofstream(dir_ / "m.txt") << to_text(m);
  EXPECT_EQ(run_binary("generate --manifest " + (dir_ / "m.txt").string() + " --iterations 2"), 0);
  EXPECT_EQ(load_image(m.out / kResultPng).width(), 16u);
  EXPECT_EQ(load_manifest(m.out / kManifestEcho).optim.iterations, 2u);
}

TEST_F(CliTest, BinaryMissingStyle) {
  RunManifest m = tiny_manifest();
  m.style = dir_ / "absent.png";
  std::ofstream(dir_ / "m.txt") << to_text(m);
  std::string err;
  EXPECT_EQ(run_binary("generate --manifest " + (dir_ / "m.txt").string(), &err), 3);
  EXPECT_EQ(err.rfind("error: input-missing: ", 0), 0u) << err;
}

TEST_F(CliTest, BinaryExitCodes) {
  EXPECT_EQ(run_binary("generate --no-such-flag"), 2);
  EXPECT_EQ(run_binary("check-weights " + dtstyle::testing::fixture_path().string()), 0);
  EXPECT_NE(slurp(dir_ / "stdout.txt").find("crc32 2144df1c"), std::string::npos);

  auto bytes = dtstyle::testing::read_bytes(dtstyle::testing::fixture_path());
  bytes[40] ^= 0x10;
  dtstyle::testing::write_bytes(dir_ / "bad.cnstw", bytes);
  std::string err;
  EXPECT_EQ(run_binary("check-weights " + (dir_ / "bad.cnstw").string(), &err), 4);
  EXPECT_EQ(err.rfind("error: weight-file: checksum-mismatch", 0), 0u) << err;

  std::ofstream(dir_ / "unknown.txt") << "colour = red\n";
  EXPECT_EQ(run_binary("generate --manifest " + (dir_ / "unknown.txt").string(), &err), 2);
  EXPECT_EQ(run_binary("distance-debug --content " + (dir_ / "nope.png").string()), 3);
}

}  // namespace
}  // namespace dtstyle::cli
