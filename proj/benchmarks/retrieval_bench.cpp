#include <benchmark/benchmark.h>

#include "coxql/datagen.hpp"
#include "coxql/dataset.hpp"
#include "coxql/retrieval.hpp"

namespace {

const coxql::Dataset& bench_corpus() {
    static const coxql::Dataset ds = [] {
        coxql::DatagenOptions options;
        options.train_size = 1179;
        options.test_size = 112;
        coxql::GeneratedCorpus corpus = coxql::generate_corpus(options);
        return coxql::parse_dataset(coxql::records_to_jsonl(corpus.train), coxql::Split::Train,
                                    "<bench>");
    }();
    return ds;
}

void BM_LexicalEmbed(benchmark::State& state) {
    const auto& embedder = coxql::default_embedder();
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            embedder.embed("Can you show me how much data the model predicts incorrectly?"));
    }
}
BENCHMARK(BM_LexicalEmbed);

void BM_BuildIndex(benchmark::State& state) {
    const auto& corpus = bench_corpus();
    for (auto _ : state) {
        coxql::NearestNeighborIndex index(corpus, coxql::default_embedder());
        benchmark::DoNotOptimize(index);
    }
}
BENCHMARK(BM_BuildIndex)->Unit(benchmark::kMillisecond);

void BM_NearestTop20(benchmark::State& state) {
    const auto& corpus = bench_corpus();
    coxql::NearestNeighborIndex index(corpus, coxql::default_embedder());
    for (auto _ : state) {
        benchmark::DoNotOptimize(index.rank("Top 3 important features for id 3!", 20));
    }
}
BENCHMARK(BM_NearestTop20)->Unit(benchmark::kMillisecond);

}  // namespace
