// Microbenchmarks for the evaluation hot paths: candidate scoring across the
// whole vocabulary, rank computation under ties, gradient accumulation, and
// RPS candidate scoring.

#include <benchmark/benchmark.h>

#include <random>
#include <set>
#include <tuple>
#include <vector>

#include "kglp/analysis.hpp"
#include "kglp/dataset.hpp"
#include "kglp/evaluation.hpp"
#include "kglp/models.hpp"
#include "kglp/training.hpp"

namespace {

using namespace kglp;

Dataset random_kg(std::uint64_t seed, int n_entities, int n_relations, int n_facts) {
  std::mt19937_64 rng(seed);
  std::set<std::tuple<int, int, int>> triples;
  while (static_cast<int>(triples.size()) < n_facts) {
    triples.insert({static_cast<int>(rng() % static_cast<std::uint64_t>(n_entities)),
                    static_cast<int>(rng() % static_cast<std::uint64_t>(n_relations)),
                    static_cast<int>(rng() % static_cast<std::uint64_t>(n_entities))});
  }
  std::vector<LabeledTriple> train, test;
  int idx = 0;
  for (const auto& [h, r, t] : triples) {
    LabeledTriple triple{"n" + std::to_string(h), "r" + std::to_string(r),
                         "n" + std::to_string(t)};
    (idx++ % 10 == 0 ? test : train).push_back(triple);
  }
  return Dataset::build(train, {}, test);
}

void BM_ScoreAll(benchmark::State& state, ModelKind kind) {
  const std::int64_t n_entities = state.range(0);
  const int dim = static_cast<int>(state.range(1));
  const ModelParams params = init_params(kind, n_entities, 16, dim, 1);
  std::vector<double> out(static_cast<std::size_t>(n_entities));
  EntityId source = 0;
  for (auto _ : state) {
    score_all(params, source, static_cast<RelationId>(source % 16), Direction::tail, out);
    benchmark::DoNotOptimize(out.data());
    source = static_cast<EntityId>((source + 1) % n_entities);
  }
  state.SetItemsProcessed(state.iterations() * n_entities);
}

void BM_ComputeRank(benchmark::State& state, TiePolicy policy) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(3);
  std::vector<double> scores(n);
  std::uniform_int_distribution<int> level(0, 63);  // coarse levels force ties
  for (double& s : scores) s = 0.25 * level(rng);
  std::vector<EntityId> filtered;
  for (EntityId e = 1; std::cmp_less(e, n); e += 17) filtered.push_back(e);
  std::mt19937_64 tie_rng(9);
  for (auto _ : state) {
    const double rank =
        compute_rank(scores, 0, filtered, Scenario::filtered, policy, &tie_rng);
    benchmark::DoNotOptimize(rank);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}

void BM_LossGradients(benchmark::State& state, ModelKind kind) {
  const ModelParams params = init_params(kind, 1000, 16, static_cast<int>(state.range(0)), 1);
  TrainConfig cfg;
  cfg.loss = LossKind::self_adversarial;
  const Triple pos{1, 2, 3};
  const std::vector<Triple> negs = {{4, 2, 3}, {1, 2, 5}, {6, 2, 3}, {1, 2, 7}};
  GradientBuffer grads;
  for (auto _ : state) {
    grads.clear();
    const double loss = loss_gradients(params, pos, negs, cfg, grads);
    benchmark::DoNotOptimize(loss);
  }
}

void BM_RpsScoreAll(benchmark::State& state) {
  const Dataset ds = random_kg(11, static_cast<int>(state.range(0)), 8,
                               static_cast<int>(state.range(0)) * 12);
  const RpsIndex index = RpsIndex::build(ds, 3);
  EntityId source = 0;
  for (auto _ : state) {
    const auto scores = rps_score_all(index, ds, source, 0, Direction::tail);
    benchmark::DoNotOptimize(scores.data());
    source = static_cast<EntityId>((source + 1) % ds.num_entities());
  }
  state.SetItemsProcessed(state.iterations() * ds.num_entities());
}

}  // namespace

BENCHMARK_CAPTURE(BM_ScoreAll, transe, kglp::ModelKind::transe)->Args({10000, 100});
BENCHMARK_CAPTURE(BM_ScoreAll, distmult, kglp::ModelKind::distmult)->Args({10000, 100});
BENCHMARK_CAPTURE(BM_ScoreAll, complex, kglp::ModelKind::complex)->Args({10000, 100});
BENCHMARK_CAPTURE(BM_ScoreAll, simple, kglp::ModelKind::simple)->Args({10000, 100});
BENCHMARK_CAPTURE(BM_ScoreAll, hole, kglp::ModelKind::hole)->Args({2000, 64});
BENCHMARK_CAPTURE(BM_ScoreAll, rotate, kglp::ModelKind::rotate)->Args({10000, 100});

BENCHMARK_CAPTURE(BM_ComputeRank, min, kglp::TiePolicy::min)->Arg(100000);
BENCHMARK_CAPTURE(BM_ComputeRank, average, kglp::TiePolicy::average)->Arg(100000);
BENCHMARK_CAPTURE(BM_ComputeRank, random, kglp::TiePolicy::random)->Arg(100000);

BENCHMARK_CAPTURE(BM_LossGradients, complex, kglp::ModelKind::complex)->Arg(100);
BENCHMARK_CAPTURE(BM_LossGradients, rotate, kglp::ModelKind::rotate)->Arg(100);

BENCHMARK(BM_RpsScoreAll)->Arg(200);

BENCHMARK_MAIN();
