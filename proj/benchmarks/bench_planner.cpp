#include <benchmark/benchmark.h>

#include "ls3/dynamics.hpp"
#include "ls3/encoder.hpp"
#include "ls3/mlp.hpp"
#include "ls3/orchestrator.hpp"
#include "ls3/planner.hpp"

using namespace ls3;

static Tensor filled(std::vector<std::size_t> shape, Rng& rng) {
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = rng.uniform(-1, 1);
  return t;
}

static void BM_MlpForward(benchmark::State& state) {
  Rng rng(0);
  const auto batch = static_cast<std::size_t>(state.range(0));
  Mlp mlp = make_mlp({10, {64, 64}, 8, Activation::relu, Head::gaussian}, rng);
  Tensor x = filled({batch, 10}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(mlp_forward(mlp, x));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(batch));
}
BENCHMARK(BM_MlpForward)->Arg(1)->Arg(256)->Arg(2000);

static void BM_MlpBackward(benchmark::State& state) {
  Rng rng(1);
  Mlp mlp = make_mlp({8, {64, 64, 64}, 1, Activation::relu, Head::linear}, rng);
  Tensor x = filled({256, 8}, rng);
  MlpTape tape;
  mlp_forward(mlp, x, &tape);
  Tensor up({256, 1}, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(mlp_backward(mlp, tape, up));
}
BENCHMARK(BM_MlpBackward);

static void BM_EncodeRaster(benchmark::State& state) {
  Rng rng(2);
  EncoderSettings s;
  EncoderModel e = EncoderModel::learned(s, rng);
  Observation o(std::vector<std::size_t>{16, 16}, 0.3);
  for (auto _ : state) benchmark::DoNotOptimize(e.encode(o, rng, true));
}
BENCHMARK(BM_EncodeRaster);

static void BM_Ts1Rollout(benchmark::State& state) {
  Rng rng(3);
  DynamicsEnsemble ens = DynamicsEnsemble::make(DynamicsSettings{}, rng);
  Tensor z0 = filled({20, 8}, rng);
  Tensor acts = filled({5, 2}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(ts1_rollout(ens, z0, acts, rng));
}
BENCHMARK(BM_Ts1Rollout);

// one full planning step on untrained models at the given candidate budget
static void BM_CemSolve(benchmark::State& state) {
  RunConfig c;
  Rng rng(4);
  ModelBundle m = make_bundle(c, rng);
  PlanConfig p = c.planner;
  p.n_candidate = static_cast<std::size_t>(state.range(0));
  p.n_elite = p.n_candidate / 10;
  p.n_cem_iters = static_cast<std::size_t>(state.range(1));
  Tensor z0 = filled({8}, rng);
  LatentPlanObjective obj(m, z0, p);
  for (auto _ : state) benchmark::DoNotOptimize(cem_solve(obj, p, std::nullopt, rng));
}
BENCHMARK(BM_CemSolve)->Args({100, 3})->Args({1000, 5})->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
