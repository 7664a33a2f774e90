#include <benchmark/benchmark.h>

#include "coxql/backend.hpp"
#include "coxql/pipelines.hpp"

namespace {

void BM_TemplateCheck(benchmark::State& state) {
    for (auto _ : state) {
        benchmark::DoNotOptimize(coxql::template_check(
            "filter id 3 and nlpattribute attention all", "Top 3 important features for id 3!"));
    }
}
BENCHMARK(BM_TemplateCheck);

void BM_ApplyCorruptions(benchmark::State& state) {
    coxql::CorruptionProfile profile = coxql::CorruptionProfile::all(0.5, 11);
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            coxql::apply_corruptions("filter id 3 and nlpattribute topk 3 default", profile));
    }
}
BENCHMARK(BM_ApplyCorruptions);

}  // namespace
