#include "decom/cpd.hpp"
#include "decom/pipeline.hpp"
#include "decom/temporal.hpp"
#include "decom/tensor.hpp"

#include <benchmark/benchmark.h>

#include <random>

namespace {

using namespace decom;

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix m(rows, cols);
  for (auto& v : m.reshaped()) v = u(rng);
  return m;
}

void BM_KhatriRao(benchmark::State& state) {
  const auto n = state.range(0);
  const Matrix a = random_matrix(n, 5, 1), b = random_matrix(n, 5, 2);
  for (auto _ : state) benchmark::DoNotOptimize(khatri_rao(a, b));
  state.SetItemsProcessed(state.iterations() * n * n * 5);
}
BENCHMARK(BM_KhatriRao)->Arg(10)->Arg(60)->Arg(227);

void BM_Reconstruct(benchmark::State& state) {
  const FactorSet f{random_matrix(10, 5, 1), random_matrix(4, 5, 2), random_matrix(state.range(0), 5, 3)};
  for (auto _ : state) benchmark::DoNotOptimize(reconstruct(f));
}
BENCHMARK(BM_Reconstruct)->Arg(60)->Arg(340);

void BM_CpdFit(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(1));
  const FactorSet f{random_matrix(10, static_cast<Eigen::Index>(k), 4), random_matrix(4, static_cast<Eigen::Index>(k), 5),
                    random_matrix(state.range(0), static_cast<Eigen::Index>(k), 6)};
  const Tensor3 x = reconstruct(f);
  CpdConfig cfg;
  cfg.rank = k;
  cfg.max_iters = 200;
  for (auto _ : state) benchmark::DoNotOptimize(cpd_fit(x, cfg));
}
BENCHMARK(BM_CpdFit)->Args({60, 3})->Args({227, 5})->Unit(benchmark::kMillisecond);

void BM_LstmBackward(benchmark::State& state) {
  const auto hidden = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(7);
  const LstmParams p = LstmParams::uniform(5, hidden, 0.08, rng);
  const Matrix window = random_matrix(52, 5, 8);
  const RowVector target = random_matrix(1, 5, 9);
  for (auto _ : state) benchmark::DoNotOptimize(lstm_backward(p, window, target));
  state.SetItemsProcessed(state.iterations() * 52);
}
BENCHMARK(BM_LstmBackward)->Arg(16)->Arg(32);

void BM_ArTrain(benchmark::State& state) {
  const Matrix c = random_matrix(227, 5, 10);
  ForecasterConfig cfg;
  cfg.kind = ForecasterKind::kAr;
  cfg.window = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(train_forecaster(c, cfg));
}
BENCHMARK(BM_ArTrain)->Arg(2)->Arg(52);

}  // namespace
