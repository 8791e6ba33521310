#include <benchmark/benchmark.h>

#include <random>

#include "uniclip/losses.hpp"
#include "uniclip/rng.hpp"
#include "uniclip/similarity.hpp"

namespace {

using namespace uniclip;

DenseMatrix random_embeddings(std::size_t rows, std::size_t width) {
  Rng rng(1);
  std::normal_distribution<double> normal(0.0, 1.0);
  DenseMatrix z(rows, width);
  for (auto& v : z.values()) v = normal(rng);
  return z;
}

SimilarityParams params() {
  SimilarityParams p = SimilarityParams::initial(SimilarityMode::domain_dependent, 0.1);
  p.offset = {0.2, 0.0, 0.1};
  return p;
}

void BM_ScoreMatrix(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const BatchLayout layout{n, 3, 1};
  const DenseMatrix z = random_embeddings(layout.size(), 32);
  const SimilarityParams p = params();
  for (auto _ : state) benchmark::DoNotOptimize(score_matrix(z, layout, p));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(layout.size() * layout.size()));
}
BENCHMARK(BM_ScoreMatrix)->Arg(16)->Arg(64);

void BM_ScoreBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const PairIndexSets sets = build_pair_sets(n, 3, 1);
  const SimilarityParams p = params();
  const ScoreMatrix sm = score_matrix(random_embeddings(sets.size(), 32), sets.layout, p);
  const LossReport r = compute_loss({LossKind::mpnce, {}}, sm, sets);
  for (auto _ : state) benchmark::DoNotOptimize(score_backward_log(sm, r.grad_log_scores, p));
}
BENCHMARK(BM_ScoreBackward)->Arg(16)->Arg(64);

void BM_Loss(benchmark::State& state) {
  const auto kind = static_cast<LossKind>(state.range(0));
  const std::size_t n = 64;
  const PairIndexSets sets = build_pair_sets(n, 3, 1);
  const ScoreMatrix sm = score_matrix(random_embeddings(sets.size(), 32), sets.layout, params());
  const LossSpec spec{kind, {}};
  for (auto _ : state) benchmark::DoNotOptimize(compute_loss(spec, sm, sets));
  state.SetLabel(to_string(kind));
}
BENCHMARK(BM_Loss)
    ->Arg(static_cast<int>(LossKind::milnce))
    ->Arg(static_cast<int>(LossKind::supcon))
    ->Arg(static_cast<int>(LossKind::mpnce));

void BM_SeparatedLoss(benchmark::State& state) {
  const PairIndexSets sets = build_pair_sets(64, 3, 1);
  const ScoreMatrix sm = score_matrix(random_embeddings(sets.size(), 32), sets.layout, params());
  for (auto _ : state) benchmark::DoNotOptimize(separated_loss({LossKind::mpnce, {}}, sm, sets));
}
BENCHMARK(BM_SeparatedLoss);

}  // namespace
