#include <benchmark/benchmark.h>

#include "uniclip/config.hpp"
#include "uniclip/training.hpp"

namespace {

using namespace uniclip;

struct Fixture {
  RunConfig cfg = default_config();
  Dataset data;
  std::vector<const SyntheticPair*> samples;

  explicit Fixture(std::size_t n) {
    cfg.world.n_pairs = 4 * n;
    cfg.train.batch_size = n;
    cfg.validate();
    data = generate_dataset(cfg.world, 1);
    for (std::size_t k = 0; k < n; ++k) samples.push_back(&data.train[k]);
  }
};

void BM_AssembleBatch(benchmark::State& state) {
  Fixture f(static_cast<std::size_t>(state.range(0)));
  Rng rng(2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(assemble_batch_inputs(f.samples, f.cfg.view_policies(), 1, 0.0, rng));
  }
}
BENCHMARK(BM_AssembleBatch)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_ForwardBackward(benchmark::State& state) {
  Fixture f(static_cast<std::size_t>(state.range(0)));
  Rng rng(2), init(3);
  UniclipModel model(f.cfg.encoder, f.cfg.similarity, f.cfg.initial_tau, init);
  const BatchInputs inputs = assemble_batch_inputs(f.samples, f.cfg.view_policies(), 1, 0.0, rng);
  for (auto _ : state) benchmark::DoNotOptimize(forward_backward(model, inputs, f.cfg.loss, f.cfg.supervision));
}
BENCHMARK(BM_ForwardBackward)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_AdamWStep(benchmark::State& state) {
  Fixture f(16);
  Rng init(3);
  UniclipModel model(f.cfg.encoder, f.cfg.similarity, f.cfg.initial_tau, init);
  const Gradients g = Gradients::zeros_like(model.params());
  for (auto _ : state) adamw_step(model.params(), g, {});
  state.counters["params"] = static_cast<double>(model.params().scalar_count());
}
BENCHMARK(BM_AdamWStep)->Unit(benchmark::kMicrosecond);

}  // namespace
