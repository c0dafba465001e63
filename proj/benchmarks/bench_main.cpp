#include <benchmark/benchmark.h>

#include <random>

#include "dtstyle/distance_field.hpp"
#include "dtstyle/layers.hpp"
#include "dtstyle/losses.hpp"
#include "dtstyle/optimizer.hpp"

namespace {

using namespace dtstyle;

Tensor3 noise(Shape3 shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Tensor3 t(shape);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = dist(rng);
  return t;
}

ConvLayer conv(std::string name, std::size_t in, std::size_t out, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-0.3, 0.3);
  ConvLayer l{std::move(name), in, out, std::vector<double>(out * in * kKernelArea), std::vector<double>(out)};
  for (double& v : l.kernel) v = dist(rng);
  for (double& v : l.bias) v = dist(rng);
  return l;
}

void BM_ConvForward(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  const ConvLayer layer = conv("conv", 64, 64, rng);
  const Tensor3 in = noise({64, side, side}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(conv2d_forward(in, layer));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(side * side));
}
BENCHMARK(BM_ConvForward)->Arg(32)->Arg(64);

void BM_ConvBackward(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(2);
  const ConvLayer layer = conv("conv", 64, 64, rng);
  const Tensor3 g = noise({64, side, side}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(conv2d_backward_input(g, layer));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(side * side));
}
BENCHMARK(BM_ConvBackward)->Arg(32)->Arg(64);

void BM_Edt(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(3);
  std::bernoulli_distribution on(0.02);
  BinaryMask mask{side, side, std::vector<bool>(side * side)};
  for (std::size_t i = 0; i < mask.bits.size(); ++i) mask.bits[i] = on(rng);
  mask.bits[0] = true;
  for (auto _ : state) benchmark::DoNotOptimize(edt_squared(mask));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(side * side));
}
BENCHMARK(BM_Edt)->Arg(256)->Arg(512);

void BM_Gram(benchmark::State& state) {
  const auto channels = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(4);
  const Tensor3 f = noise({channels, 32, 32}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(gram(f));
}
BENCHMARK(BM_Gram)->Arg(64)->Arg(256);

// One full loss-and-gradient evaluation on a small two-layer network.
void BM_ObjectiveEvaluate(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(5);
  const FeatureExtractor ex(NetworkWeights{{conv("conv1_1", 3, 16, rng), conv("conv1_2", 16, 16, rng)}});
  TransferProblem p;
  p.content = noise({3, side, side}, rng, -100, 100);
  p.style = noise({3, side, side}, rng, -100, 100);
  BinaryMask mask{side, side, std::vector<bool>(side * side)};
  mask.bits[side * side / 2 + side / 2] = true;
  p.field = emphasize(edt(mask), 2, true);
  p.content_layer = "conv1_2";
  p.weights.gamma = 1e4;
  p.weights.emphasis_power = 2;
  p.weights.style_layer_weights = LossWeights::uniform({"conv1_1", "conv1_2"});
  const TransferObjective obj(ex, p);
  const Tensor3 x = noise(p.content.shape(), rng, -100, 100);
  for (auto _ : state) benchmark::DoNotOptimize(obj.evaluate(x));
}
BENCHMARK(BM_ObjectiveEvaluate)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
