#include "flashmax/activation.hpp"
#include "flashmax/ground_truth.hpp"
#include "flashmax/sampling.hpp"
#include "flashmax/train.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace flashmax;

ObservationSet hopf_batch(int n) {
  SamplingConfig sc;
  sc.n_train = n;
  sc.ground_truth = GroundTruthId::hopf_fibration();
  return sample_train(sc);
}

ModelParams model(int width_half) {
  TrainConfig tc;
  tc.width_half = width_half;
  return init_params(tc);
}

void BM_Tanh(benchmark::State& state) {
  Eigen::ArrayXXd pre = Eigen::ArrayXXd::Random(256, state.range(0));
  Eigen::ArrayXXd buf, deriv;
  for (auto _ : state) {
    buf = pre;
    activate_inplace(Activation::kTanh, buf, &deriv);
    benchmark::DoNotOptimize(deriv.data());
  }
  state.SetItemsProcessed(state.iterations() * pre.size());
}
BENCHMARK(BM_Tanh)->Arg(2000);

void BM_Forward(benchmark::State& state) {
  const auto params = model(static_cast<int>(state.range(0)));
  const auto obs = hopf_batch(static_cast<int>(state.range(1)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(forward(params, obs.points).data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(1));
}
BENCHMARK(BM_Forward)->Args({1000, 1000})->Args({1000, 10000})->Unit(benchmark::kMillisecond);

void BM_LossGradient(benchmark::State& state) {
  const auto params = model(static_cast<int>(state.range(0)));
  const auto obs = hopf_batch(static_cast<int>(state.range(1)));
  for (auto _ : state) {
    auto lg = loss_gradient(params, obs);
    benchmark::DoNotOptimize(lg.loss);
  }
  state.SetItemsProcessed(state.iterations() * state.range(1));
}
BENCHMARK(BM_LossGradient)
    ->Args({100, 1000})
    ->Args({1000, 1000})
    ->Args({5000, 1000})
    ->Unit(benchmark::kMillisecond);

void BM_AdamW(benchmark::State& state) {
  auto params = model(static_cast<int>(state.range(0)));
  auto adam = AdamState::zeros_like(params);
  const auto grads = loss_gradient(params, hopf_batch(100)).gradient;
  TrainConfig tc;
  for (auto _ : state) {
    adamw_step(params, adam, grads, 1e-6, tc);
  }
}
BENCHMARK(BM_AdamW)->Arg(1000)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
