// Acceptance suite: one line per criterion, nonzero exit if any fails.

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <tuple>
#include <vector>

#include "commands.hpp"
#include "dtstyle/distance_field.hpp"
#include "dtstyle/extractor.hpp"
#include "dtstyle/losses.hpp"
#include "dtstyle/optimizer.hpp"
#include "manifest.hpp"
#include "test_support.hpp"

namespace {

using namespace dtstyle;
using dtstyle::testing::numeric_gradient;
using dtstyle::testing::random_tensor;
using dtstyle::testing::rel_error;
using dtstyle::testing::Rng;
using Clock = std::chrono::steady_clock;
namespace fs = std::filesystem;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

const std::vector<std::string> kStyleLayers{"conv1_1", "conv1_2"};
const char* kContentLayer = "conv1_2";

// ---------------------------------------------------------------------------
// 1. EDT against the all-pairs oracle.

Outcome edt_oracle() {
  const auto t0 = Clock::now();
  Rng rng(20240601);
  std::uniform_int_distribution<std::size_t> dim(1, 32);
  std::uniform_real_distribution<double> density(0.002, 0.7);
  std::vector<BinaryMask> masks;
  for (int i = 0; i < 500; ++i) {
    BinaryMask m = testing::random_mask(dim(rng), dim(rng), density(rng), rng);
    if (m.count() == 0) m.bits[rng() % m.bits.size()] = true;
    masks.push_back(std::move(m));
  }
  masks.push_back(BinaryMask{32, 32, std::vector<bool>(1024, true)});
  for (std::size_t i : {0u, 527u, 1023u}) {
    BinaryMask single{32, 32, std::vector<bool>(1024)};
    single.bits[i] = true;
    masks.push_back(single);
  }
  BinaryMask border{32, 32, std::vector<bool>(1024)};
  for (std::size_t y = 0; y < 32; ++y) {
    for (std::size_t x = 0; x < 32; ++x) border.bits[y * 32 + x] = x == 0 || y == 0 || x == 31 || y == 31;
  }
  masks.push_back(border);
  masks.push_back(BinaryMask{1, 1, {true}});

  std::size_t mismatches = 0;
  for (const BinaryMask& m : masks) mismatches += edt_squared(m) != testing::brute_force_edt_squared(m);
  const double secs = seconds_since(t0);
  return {mismatches == 0 && secs < 10.0,
          fmt("%zu masks, %zu mismatches, %.2f s (limit 10 s)", masks.size(), mismatches, secs)};
}

// ---------------------------------------------------------------------------
// 2. Gradients against central finite differences on the committed network.

Outcome gradient_suite() {
  const auto t0 = Clock::now();
  const FeatureExtractor ex(testing::fixture_weights());
  Rng rng(7);
  constexpr int kTrials = 20;
  constexpr double kStep = 1e-3;
  const Shape3 shape{3, 8, 8};
  const std::set<std::string, std::less<>> both{"conv1_1", "conv1_2"};
  double worst_content = 0, worst_style = 0, worst_distance = 0, worst_backward = 0;

  for (int trial = 0; trial < kTrials; ++trial) {
    const Tensor3 x = random_tensor(shape, rng, -60, 60);
    const Tensor3 other = random_tensor(shape, rng, -60, 60);

    // Content loss through the network.
    const Tensor3 target = ex.forward(other, {kContentLayer}).feature(kContentLayer);
    auto content_value = [&](const Tensor3& t) {
      return content_loss(ex.forward(t, {kContentLayer}).feature(kContentLayer), target).value;
    };
    const ForwardTrace tc = ex.forward(x, {kContentLayer});
    const Tensor3 gc = ex.backward_to_input(tc, {{kContentLayer, content_loss(tc.feature(kContentLayer), target).grad}});
    worst_content = std::max(worst_content, rel_error(gc, numeric_gradient(content_value, x, kStep)));

    // Style loss through the Gram matrices.
    const GramSet style_target = gram_set(detach(ex.forward(other, both)), kStyleLayers);
    const auto w = LossWeights::uniform(kStyleLayers);
    auto style_value = [&](const Tensor3& t) {
      return style_loss(gram_set(detach(ex.forward(t, both)), kStyleLayers), style_target, w).value;
    };
    const ForwardTrace ts = ex.forward(x, both);
    const StyleLoss sl = style_loss(gram_set(detach(ts), kStyleLayers), style_target, w);
    FeatureBundle sg;
    for (const auto& name : kStyleLayers) sg[name] = style_grad_to_features(sl.grad.at(name), ts.feature(name));
    worst_style = std::max(worst_style, rel_error(ex.backward_to_input(ts, sg), numeric_gradient(style_value, x, kStep)));

    // Distance loss in pixel space.
    BinaryMask mask = testing::random_mask(8, 8, 0.2, rng);
    if (mask.count() == 0) mask.bits[0] = true;
    const DistanceField field = emphasize(edt(mask), 1 + trial % 3, trial % 2 == 0);
    auto distance_value = [&](const Tensor3& t) { return distance_loss(other, t, field).value; };
    worst_distance = std::max(worst_distance, rel_error(distance_loss(other, x, field).grad,
                                                        numeric_gradient(distance_value, x, kStep)));

    // Raw backward_to_input with gradients injected at both layers.
    const FeatureBundle g{{"conv1_1", random_tensor({4, 8, 8}, rng)}, {"conv1_2", random_tensor({4, 8, 8}, rng)}};
    auto probe_value = [&](const Tensor3& t) {
      const ForwardTrace tr = ex.forward(t, both);
      return dot(g.at("conv1_1"), tr.feature("conv1_1")) + dot(g.at("conv1_2"), tr.feature("conv1_2"));
    };
    worst_backward = std::max(worst_backward, rel_error(ex.backward_to_input(ts, g), numeric_gradient(probe_value, x, kStep)));
  }
  const double secs = seconds_since(t0);
  const double worst = std::max({worst_content, worst_style, worst_distance, worst_backward});
  return {worst < 1e-4 && secs < 60.0,
          fmt("%d trials each; max rel err content %.2e, style %.2e, distance %.2e, backward %.2e (limit 1e-4); "
              "%.2f s (limit 60 s)",
              kTrials, worst_content, worst_style, worst_distance, worst_backward, secs)};
}

// ---------------------------------------------------------------------------
// Shared desk-scale scene: 64x64 black disc on white, 4-pixel checker style.

constexpr std::size_t kScene = 64;

struct Scene {
  Image content = testing::disc_image(kScene, kScene, 31.5, 31.5, 14);
  Image style = testing::checker_image(kScene, kScene, 4, {0, 0, 0}, {255, 255, 255});
  Preprocess prep;
  DistanceField raw = edt(binarize(content));
};

TransferProblem scene_problem(const Scene& s, double gamma, int power, bool normalize) {
  TransferProblem p;
  p.content = to_tensor(s.content, s.prep);
  p.style = to_tensor(s.style, s.prep);
  p.field = emphasize(s.raw, power, normalize);
  p.content_layer = kContentLayer;
  p.weights.gamma = gamma;
  p.weights.emphasis_power = power;
  p.weights.style_layer_weights = LossWeights::uniform(kStyleLayers);
  return p;
}

OptimConfig budget(std::size_t iterations) {
  OptimConfig cfg;
  cfg.iterations = iterations;
  cfg.snapshot_every = 0;
  return cfg;
}

struct Deviation {
  double background = 0;  // pixels farther than 10% of the diagonal
  double silhouette = 0;
};

Deviation deviation(const Scene& s, const Tensor3& x, const Tensor3& p) {
  const double far = 0.1 * std::hypot(double(kScene), double(kScene));
  double bg = 0, sil = 0;
  std::size_t nb = 0, ns = 0;
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t y = 0; y < kScene; ++y) {
      for (std::size_t xx = 0; xx < kScene; ++xx) {
        const double d = std::abs(x(c, y, xx) - p(c, y, xx));
        const double dist = s.raw.at(xx, y);
        if (dist == 0.0) {
          sil += d;
          ++ns;
        } else if (dist > far) {
          bg += d;
          ++nb;
        }
      }
    }
  }
  return {bg / nb, sil / ns};
}

Deviation run_scene(const FeatureExtractor& ex, const Scene& s, double gamma, int power, bool normalize,
                    std::size_t iterations) {
  const TransferProblem p = scene_problem(s, gamma, power, normalize);
  return deviation(s, run(ex, p, budget(iterations)).image, p.content);
}

// ---------------------------------------------------------------------------
// 3. x = p at iteration 0.

Outcome initialization() {
  const FeatureExtractor ex(testing::fixture_weights());
  const Scene s;
  bool ok = true;
  std::string detail;
  for (auto [gamma, power, normalize] : {std::tuple{1e4, 2, true}, {1.0, 5, false}, {0.0, 1, false}}) {
    const TransferProblem p = scene_problem(s, gamma, power, normalize);
    const Tensor3 x = init_generated(p.content);
    const LossReport r0 = TransferObjective(ex, p).evaluate(x).report;
    const LossReport t0 = run(ex, p, budget(1)).trace.front();
    ok = ok && x == p.content && r0.content == 0.0 && r0.distance == 0.0 && t0.content == 0.0 && t0.distance == 0.0;
    detail += fmt("n=%d: content %g, distance %g; ", power, r0.content, r0.distance);
  }
  return {ok, detail + "required exactly 0"};
}

// ---------------------------------------------------------------------------
// 4. gamma = 0 versus an all-zero field.

Outcome gamma_zero_degeneracy() {
  const FeatureExtractor ex(testing::fixture_weights());
  const Scene s;
  TransferProblem unconstrained = scene_problem(s, 0.0, 2, true);
  TransferProblem zero_field = scene_problem(s, 1e4, 2, true);
  for (double& v : zero_field.field.values) v = 0.0;

  auto trajectory = [&](const TransferProblem& p) {
    std::vector<Tensor3> xs;
    OptimConfig cfg = budget(20);
    cfg.snapshot_every = 1;
    RunHooks hooks;
    hooks.keep_snapshots = false;
    hooks.on_snapshot = [&](std::size_t, const Tensor3& x) { xs.push_back(x); };
    run(ex, p, cfg, hooks);
    return xs;
  };
  const auto a = trajectory(unconstrained), b = trajectory(zero_field);
  std::size_t identical = 0;
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) identical += a[i] == b[i];
  const bool moved = !a.empty() && a.back() != unconstrained.content;
  return {a.size() == 20 && b.size() == 20 && identical == 20 && moved,
          fmt("%zu of 20 iterates bitwise identical", identical)};
}

// ---------------------------------------------------------------------------
// 5-7. Background constraint and its monotone trends.

Outcome constraint_behavior() {
  const auto t0 = Clock::now();
  const FeatureExtractor ex(testing::fixture_weights());
  const Scene s;
  const Deviation d = run_scene(ex, s, 1.0, 5, false, 200);
  const double limit = 0.02 * 255.0;
  const double secs = seconds_since(t0);
  return {d.background < limit && d.silhouette > 5.0 * d.background && secs < 120.0,
          fmt("background %.3g (limit %.3g), silhouette %.4g (needs > %.3g), %.1f s (limit 120 s)", d.background,
              limit, d.silhouette, 5.0 * d.background, secs)};
}

Outcome gamma_monotone() {
  const FeatureExtractor ex(testing::fixture_weights());
  const Scene s;
  std::vector<double> bg;
  for (double gamma : {1e-4, 1e-2, 1.0}) bg.push_back(run_scene(ex, s, gamma, 1, false, 200).background);
  return {bg[1] <= bg[0] && bg[2] <= bg[1],
          fmt("background deviation at gamma 1e-4, 1e-2, 1: %.4g, %.4g, %.4g", bg[0], bg[1], bg[2])};
}

Outcome emphasis_monotone() {
  const FeatureExtractor ex(testing::fixture_weights());
  const Scene s;
  std::vector<double> bg;
  for (int n : {1, 3, 5}) bg.push_back(run_scene(ex, s, 1e-4, n, false, 200).background);
  return {bg[1] <= bg[0] && bg[2] <= bg[1],
          fmt("background deviation at n 1, 3, 5 (raw field, gamma 1e-4): %.4g, %.4g, %.4g", bg[0], bg[1], bg[2])};
}

// ---------------------------------------------------------------------------
// 8. Gram symmetry and semidefiniteness.

Outcome gram_properties() {
  Rng rng(99);
  std::uniform_int_distribution<std::size_t> dim(1, 16);
  std::size_t asymmetric = 0;
  double min_eig = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 100; ++i) {
    const SquareMatrix g = gram(random_tensor({dim(rng), dim(rng), dim(rng)}, rng, -3, 3));
    Eigen::MatrixXd m(g.n, g.n);
    for (std::size_t r = 0; r < g.n; ++r) {
      for (std::size_t c = 0; c < g.n; ++c) {
        asymmetric += g(r, c) != g(c, r);
        m(r, c) = g(r, c);
      }
    }
    min_eig = std::min(min_eig, Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m, Eigen::EigenvaluesOnly)
                                    .eigenvalues()
                                    .minCoeff());
  }
  return {asymmetric == 0 && min_eig >= -1e-9,
          fmt("100 maps, %zu asymmetric entries, min eigenvalue %.3g (limit -1e-9)", asymmetric, min_eig)};
}

// ---------------------------------------------------------------------------
// 9-10. End-to-end runs through the command layer.

struct CorpusEntry {
  const char* name;
  Image content;
  Image style;
};

std::vector<CorpusEntry> corpus() {
  std::vector<CorpusEntry> c;
  c.push_back({"disc/checker", testing::disc_image(64, 64, 31.5, 31.5, 14),
               testing::checker_image(64, 64, 4, {0, 0, 0}, {255, 255, 255})});
  c.push_back({"disc/stripes", testing::disc_image(64, 64, 20, 40, 10),
               testing::stripes_image(64, 64, 3, {240, 200, 30}, {30, 60, 160})});
  Image bars(64, 64, std::array<std::uint8_t, 3>{255, 255, 255});
  for (std::size_t y = 12; y < 52; ++y) {
    for (std::size_t x = 0; x < 64; ++x) {
      if ((x >= 10 && x < 18) || (x >= 28 && x < 36) || (x >= 46 && x < 54 && y > 30)) {
        for (std::size_t ch = 0; ch < 3; ++ch) bars.at(x, y, ch) = 20;
      }
    }
  }
  Rng rng(5);
  c.push_back({"bars/noise", bars, testing::random_image(64, 64, rng)});
  c.push_back({"ring/checker", testing::disc_image(64, 64, 31.5, 31.5, 24),
               testing::checker_image(64, 64, 6, {200, 30, 30}, {240, 240, 240})});
  // Carve the ring interior back to white.
  Image& ring = c.back().content;
  for (std::size_t y = 0; y < 64; ++y) {
    for (std::size_t x = 0; x < 64; ++x) {
      const double dx = x - 31.5, dy = y - 31.5;
      if (dx * dx + dy * dy < 14 * 14) {
        for (std::size_t ch = 0; ch < 3; ++ch) ring.at(x, y, ch) = 255;
      }
    }
  }
  return c;
}

cli::RunManifest corpus_manifest(const fs::path& dir, const std::string& tag) {
  cli::RunManifest m;  // default configuration
  m.content = dir / (tag + "_content.png");
  m.style = dir / (tag + "_style.png");
  m.weights = testing::fixture_path();
  m.out = dir / (tag + "_run");
  m.width = m.height = 64;
  m.content_layer = kContentLayer;
  m.style_layers = kStyleLayers;
  return m;
}

std::pair<double, double> first_and_last_total(const fs::path& csv_path) {
  std::ifstream in(csv_path);
  std::string line, first, last;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (first.empty()) first = line;
    last = line;
  }
  auto total = [](const std::string& row) { return std::stod(row.substr(row.rfind(',') + 1)); };
  return {total(first), total(last)};
}

Outcome descent(const fs::path& dir) {
  std::size_t descended = 0, runs = 0;
  std::string detail;
  for (const CorpusEntry& e : corpus()) {
    std::string tag = e.name;
    std::replace(tag.begin(), tag.end(), '/', '_');
    const cli::RunManifest m = corpus_manifest(dir, tag);
    save_png(m.content, e.content);
    save_png(m.style, e.style);
    std::ostringstream log;
    cli::run_generate(m, log);
    const auto [initial, final_total] = first_and_last_total(m.out / cli::kLossCsv);
    ++runs;
    descended += final_total < initial;
    detail += fmt("%s %.4g -> %.4g; ", e.name, initial, final_total);
  }
  return {descended == runs, fmt("%zu of %zu runs descend (", descended, runs) + detail + "default config)"};
}

int run_cli(const std::string& args) {
  const int status = std::system((std::string(DTSTYLE_CLI_PATH) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome reproducibility(const fs::path& dir) {
  cli::RunManifest m = corpus_manifest(dir, "repro");
  save_png(m.content, testing::disc_image(64, 64, 30, 33, 13));
  save_png(m.style, testing::stripes_image(64, 64, 4, {250, 120, 0}, {0, 90, 40}));
  m.optim.iterations = 60;
  m.optim.seed = 42;
  m.weights_hash = file_crc32(m.weights);
  std::ofstream(dir / "repro.txt") << cli::to_text(m);
  const int a = run_cli("generate --manifest " + (dir / "repro.txt").string() + " --out " + (dir / "repro_a").string());
  const int b = run_cli("generate --manifest " + (dir / "repro.txt").string() + " --out " + (dir / "repro_b").string());
  if (a != 0 || b != 0) return {false, fmt("exit codes %d, %d", a, b)};
  const auto pa = testing::read_bytes(dir / "repro_a" / cli::kResultPng);
  const auto pb = testing::read_bytes(dir / "repro_b" / cli::kResultPng);
  return {pa == pb && !pa.empty(), fmt("two processes, %zu-byte PNGs, %s", pa.size(), pa == pb ? "identical" : "differ")};
}

}  // namespace

int main() {
  const fs::path dir = testing::scratch_dir("acceptance");
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> check;
  };
  const std::vector<Criterion> criteria{
      {1, "EDT oracle equivalence", edt_oracle},
      {2, "gradient suite", gradient_suite},
      {3, "initialization identities", initialization},
      {4, "gamma = 0 degeneracy", gamma_zero_degeneracy},
      {5, "background constraint", constraint_behavior},
      {6, "gamma monotonicity", gamma_monotone},
      {7, "emphasis monotonicity", emphasis_monotone},
      {8, "Gram properties", gram_properties},
      {9, "descent on corpus", [&] { return descent(dir); }},
      {10, "reproducibility", [&] { return reproducibility(dir); }},
  };
  int failures = 0;
  for (const Criterion& c : criteria) {
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s  [%2d] %s: %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  fs::remove_all(dir);
  return failures == 0 ? 0 : 1;
}
