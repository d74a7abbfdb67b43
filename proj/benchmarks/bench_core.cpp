#include <benchmark/benchmark.h>

#include "p2lr/clusterer.hpp"
#include "p2lr/embedder.hpp"
#include "p2lr/evalkit.hpp"
#include "p2lr/rng.hpp"
#include "p2lr/selector.hpp"
#include "p2lr/synthgen.hpp"
#include "p2lr/uncertainty.hpp"

namespace {

using namespace p2lr;

synthgen::TargetDomain domain(Index ids, Index dim) {
    const auto protos = synthgen::generate_prototypes(ids, dim, 0.5, 1);
    return synthgen::sample_target(protos, 30, 0.1, 0.2, 2);
}

void BM_KMeans(benchmark::State& state) {
    const auto ids = static_cast<Index>(state.range(0));
    const auto target = domain(ids, 16);
    for (auto _ : state) {
        auto model = clusterer::kmeans(target.raw_features, {.k = ids, .seed = 3});
        benchmark::DoNotOptimize(model.inertia);
    }
    state.SetItemsProcessed(state.iterations() * target.raw_features.rows());
}
BENCHMARK(BM_KMeans)->Arg(20)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_ScoreAll(benchmark::State& state) {
    const auto ids = static_cast<Index>(state.range(0));
    const auto target = domain(ids, 16);
    const auto cluster = clusterer::kmeans(target.raw_features, {.k = ids, .seed = 3});
    for (auto _ : state) {
        auto records = uncertainty::score_all(target.raw_features, cluster, 20.0, 0.99);
        benchmark::DoNotOptimize(records.data());
    }
    state.SetItemsProcessed(state.iterations() * target.raw_features.rows());
}
BENCHMARK(BM_ScoreAll)->Arg(20)->Arg(100)->Unit(benchmark::kMicrosecond);

void BM_WStepGrad(benchmark::State& state) {
    const auto ids = static_cast<Index>(state.range(0));
    const auto target = domain(ids, 16);
    const auto cluster = clusterer::kmeans(target.raw_features, {.k = ids, .seed = 3});
    const std::vector<double> weights(static_cast<std::size_t>(target.raw_features.rows()), 1.0);
    const auto model = embedder::EmbeddingModel::identity(16);
    const embedder::WStepProblem problem{target.raw_features, cluster.centroids,
                                         cluster.assignments, weights, 20.0, 0.99};
    for (auto _ : state) {
        auto g = embedder::wstep_grad(model, problem);
        benchmark::DoNotOptimize(g.dW.data());
    }
    state.SetItemsProcessed(state.iterations() * target.raw_features.rows());
}
BENCHMARK(BM_WStepGrad)->Arg(20)->Arg(100)->Unit(benchmark::kMicrosecond);

void BM_Selection(benchmark::State& state) {
    Rng rng(5);
    std::vector<double> u(static_cast<std::size_t>(state.range(0)));
    for (auto& x : u) {
        x = rng.uniform();
    }
    for (auto _ : state) {
        const auto th = selector::compute_beta(u, 0.6);
        auto v = selector::vstep(u, th.beta, th.count);
        benchmark::DoNotOptimize(v.data());
    }
}
BENCHMARK(BM_Selection)->Arg(600)->Arg(60000)->Unit(benchmark::kMicrosecond);

void BM_Retrieval(benchmark::State& state) {
    const auto target = domain(static_cast<Index>(state.range(0)), 16);
    for (auto _ : state) {
        auto r = evalkit::retrieval_eval(target.raw_features, target.hidden_labels, 0.3, 3);
        benchmark::DoNotOptimize(r.map);
    }
}
BENCHMARK(BM_Retrieval)->Arg(20)->Arg(100)->Unit(benchmark::kMillisecond);

} // namespace
BENCHMARK_MAIN();
