#pragma once

#include <cstdint>

#include "jlgen/plan.hpp"
#include "jlgen/tape.hpp"

namespace jlgen {

// ============================================================================
// Single-entry access: G[row, col] computed by expanding the stage/tail
// product over all intermediary indices, holding one loop counter and one
// partial sum per level — no vector of any stage length is materialized.
// ============================================================================

struct EntryQuery {
    std::uint64_t row = 0;  // in [0, output_dim)
    std::uint64_t col = 0;  // in [0, n_input)
};

struct EntryCost {
    // Leaf terms accumulated (product of the intermediate dimensions).
    std::uint64_t terms = 0;
    // Peak count of live auxiliary cells (loop counters, partial sums,
    // compensation terms, hoisted per-level values).  Parsed polynomial
    // coefficients count as tape material, not working cells.
    std::uint64_t peak_aux_cells = 0;
};

// One stage's matrix element: sqrt(n_stage/s_stage) * H[S[r], j] * x_j with
// H[a][b] = (-1)^popcount(a & b) / sqrt(n_stage); S and x are evaluated
// directly from the tape slices in constant working memory.
double stage_entry(const StageSpec& spec, const SeedTape& tape,
                   std::uint64_t r, std::uint64_t j);

// The full matrix entry; agrees with generate_apply on basis vectors.
// Summation over intermediary tuples is lexicographic with compensated
// accumulation at every level.
double entry(const JlPlan& plan, const SeedTape& tape, EntryQuery q);

// Same, reporting work and peak live-cell counts.
double entry_counted(const JlPlan& plan, const SeedTape& tape, EntryQuery q,
                     EntryCost& cost);

}  // namespace jlgen
