// Microbenchmarks for the hot paths: the in-place transform, field
// arithmetic, seed-tape expansion, plan construction, whole-vector
// application (cached and uncached), single-entry access, and the dense
// i.i.d. baseline used by the audits.

#include <benchmark/benchmark.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "jlgen/access.hpp"
#include "jlgen/audit.hpp"
#include "jlgen/bits.hpp"
#include "jlgen/gf2.hpp"
#include "jlgen/hadamard.hpp"
#include "jlgen/pipeline.hpp"
#include "jlgen/plan.hpp"
#include "jlgen/sampler.hpp"
#include "jlgen/tape.hpp"

namespace {

using namespace jlgen;

std::vector<double> cosine_vector(std::uint64_t n) {
    std::vector<double> w(n);
    for (std::uint64_t i = 0; i < n; ++i)
        w[i] = std::cos(static_cast<double>(i) * 0.37) /
               std::sqrt(static_cast<double>(n));
    return w;
}

void BM_FwhtInplace(benchmark::State& state) {
    const std::uint64_t n = std::uint64_t{1} << state.range(0);
    std::vector<double> v = cosine_vector(n);
    for (auto _ : state) {
        fwht_inplace(v);  // orthonormal, so values stay bounded across runs
        benchmark::DoNotOptimize(v.data());
    }
    state.SetComplexityN(static_cast<std::int64_t>(n));
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                            static_cast<std::int64_t>(n));
}
BENCHMARK(BM_FwhtInplace)->DenseRange(10, 20, 2)->Complexity(benchmark::oNLogN);

void BM_FieldMultiply(benchmark::State& state) {
    const unsigned w = static_cast<unsigned>(state.range(0));
    const GfField& field = GfField::of(w);
    std::uint64_t a = 3, b = 5;
    for (auto _ : state) {
        a = field.mul(a, b) | 1;  // keep operands nonzero
        b = (b + 2) & (field.size() - 1);
        benchmark::DoNotOptimize(a);
    }
}
BENCHMARK(BM_FieldMultiply)->Arg(8)->Arg(14)->Arg(20)->Arg(25)->Arg(40);

void BM_SignAt(benchmark::State& state) {
    const unsigned w = 20;
    const SignTape tape =
        make_sign_tape(w, std::uint64_t{1} << w,
                       derive_bits(0xB1, 0, 0, 4 * w), 0, 4);
    std::uint64_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(sign_at(tape, i));
        i = (i + 7919) & ((std::uint64_t{1} << w) - 1);
    }
}
BENCHMARK(BM_SignAt);

void BM_SignVector(benchmark::State& state) {
    const unsigned w = static_cast<unsigned>(state.range(0));
    const SignTape tape =
        make_sign_tape(w, std::uint64_t{1} << w,
                       derive_bits(0xB2, 0, 0, 4 * w), 0, 4);
    for (auto _ : state) {
        benchmark::DoNotOptimize(sign_vector(tape).data());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                            static_cast<std::int64_t>(std::uint64_t{1} << w));
}
BENCHMARK(BM_SignVector)->Arg(12)->Arg(16)->Arg(20);

void BM_SubsetAt(benchmark::State& state) {
    const SubsetFamily family = make_family(std::uint64_t{1} << 20, 64, 4);
    const BitString index = derive_bits(0xB3, 0, 0, family.index_bits());
    for (auto _ : state) {
        benchmark::DoNotOptimize(subset_at(family, index).data());
    }
}
BENCHMARK(BM_SubsetAt);

void BM_PlanBuild(benchmark::State& state) {
    const std::uint64_t n = std::uint64_t{1} << state.range(0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(plan_build(n, 0.5, 0.01));
    }
}
BENCHMARK(BM_PlanBuild)->Arg(12)->Arg(16)->Arg(20);

void BM_HandleApply(benchmark::State& state) {
    const std::uint64_t n = std::uint64_t{1} << state.range(0);
    const JlPlan plan = plan_build(n, 0.99, 0.5);
    const SeedTape tape =
        tape_partition(plan, derive_bits(0xB4, 0, 0, plan.seed_length_bits));
    const MatrixHandle handle(plan, tape);
    const std::vector<double> w = cosine_vector(n);
    for (auto _ : state) {
        benchmark::DoNotOptimize(handle.apply(w).data());
    }
    state.SetComplexityN(static_cast<std::int64_t>(n));
}
BENCHMARK(BM_HandleApply)->DenseRange(12, 20, 2)->Complexity(benchmark::oNLogN);

void BM_GenerateApply(benchmark::State& state) {
    const std::uint64_t n = std::uint64_t{1} << state.range(0);
    const JlPlan plan = plan_build(n, 0.99, 0.5);
    const SeedTape tape =
        tape_partition(plan, derive_bits(0xB5, 0, 0, plan.seed_length_bits));
    const std::vector<double> w = cosine_vector(n);
    for (auto _ : state) {
        benchmark::DoNotOptimize(generate_apply(plan, tape, w).data());
    }
}
BENCHMARK(BM_GenerateApply)->Arg(12)->Arg(14);

void BM_EntryTailOnly(benchmark::State& state) {
    const JlPlan plan = plan_build(256, 0.5, 0.1);
    const SeedTape tape =
        tape_partition(plan, derive_bits(0xB6, 0, 0, plan.seed_length_bits));
    std::uint64_t q = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            entry(plan, tape, EntryQuery{q % plan.output_dim, q % plan.n_input}));
        ++q;
    }
}
BENCHMARK(BM_EntryTailOnly);

void BM_EntryTwoStage(benchmark::State& state) {
    const JlPlan plan = plan_manual(4096, 0.5, 0.1,
                                    {{4096, 64, 4, 3}, {64, 16, 4, 2}},
                                    ManualTail{12, 2});
    const SeedTape tape =
        tape_partition(plan, derive_bits(0xB7, 0, 0, plan.seed_length_bits));
    std::uint64_t q = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            entry(plan, tape, EntryQuery{q % plan.output_dim, q % plan.n_input}));
        ++q;
    }
}
BENCHMARK(BM_EntryTwoStage);

void BM_BaselineApply(benchmark::State& state) {
    const std::uint64_t s = 64;
    const std::uint64_t n = std::uint64_t{1} << 14;
    const BitString seed = derive_bits(0xB8, 1, 0, s * n);
    const std::vector<double> w = cosine_vector(n);
    for (auto _ : state) {
        benchmark::DoNotOptimize(baseline_apply(s, seed, w).data());
    }
}
BENCHMARK(BM_BaselineApply);

}  // namespace

BENCHMARK_MAIN();
