#include <benchmark/benchmark.h>

#include "cdpauth/channel.hpp"
#include "cdpauth/nn/ops.hpp"
#include "cdpauth/ocsvm.hpp"
#include "cdpauth/rng.hpp"

using namespace cdpauth;

namespace {

nn::Tensor random_tensor(nn::Shape shape, Rng& rng) {
  nn::Tensor t(std::move(shape));
  for (auto& v : t.values()) v = rng.uniform(-1.0, 1.0);
  return t;
}

void BM_Conv2dForwardBackward(benchmark::State& state) {
  const auto size = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  nn::Parameter k("kernel", random_tensor({8, 4, 3, 3}, rng));
  nn::Parameter b("bias", random_tensor({8}, rng));
  const nn::Tensor x = random_tensor({18, 4, size, size}, rng);
  for (auto _ : state) {
    nn::Graph g;
    const nn::Var y = nn::conv2d(g, g.constant(x), g.parameter(k), g.parameter(b), {1, 1});
    const nn::Var loss = nn::mse_loss(g, y, g.constant(nn::Tensor(g.value(y).shape(), 0.0)));
    g.backward(loss);
    benchmark::DoNotOptimize(k.grad().data());
  }
}
BENCHMARK(BM_Conv2dForwardBackward)->Arg(15)->Arg(30)->Unit(benchmark::kMillisecond);

void BM_OcSvmFit(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  std::vector<FeatureRow> rows(n, FeatureRow(2));
  for (auto& r : rows)
    for (auto& v : r) v = rng.normal();
  for (auto _ : state) benchmark::DoNotOptimize(fit_ocsvm(rows, 0.1));
}
BENCHMARK(BM_OcSvmFit)->Arg(360)->Arg(1440)->Unit(benchmark::kMillisecond);

void BM_PrintSim(benchmark::State& state) {
  const auto t = generate_template(3, static_cast<std::size_t>(state.range(0)), 4, 0.5);
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(print_sim(t, PrintModel{}, ++seed));
}
BENCHMARK(BM_PrintSim)->Arg(60)->Arg(240)->Unit(benchmark::kMicrosecond);

void BM_CopyAttack(benchmark::State& state) {
  const auto t = generate_template(3, 60, 4, 0.5);
  const CodeImage x = print_sim(t, PrintModel{}, 1);
  const AttackModel atk = default_attack(AttackPreset::f2_gray);
  AcquisitionModel acq;
  acq.scale_factor = 0.25;
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(copy_attack(x, atk, acq, ++seed, 4));
}
BENCHMARK(BM_CopyAttack)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
