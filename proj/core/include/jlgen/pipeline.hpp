#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "jlgen/access.hpp"
#include "jlgen/hadamard.hpp"
#include "jlgen/plan.hpp"
#include "jlgen/sampler.hpp"
#include "jlgen/tape.hpp"

namespace jlgen {

// ============================================================================
// The generator pipeline: pad, run each dimension-reduction stage, then the
// dense sign tail.  Every function is a pure map of (plan, tape, vector).
// ============================================================================

// Copies w into the plan's ambient dimension, zero-filling the rest; the
// norm is preserved bit-exactly.
std::vector<double> pad_input(std::span<const double> w, const JlPlan& plan);

// One stage: u = H * D(signs) * v, then pick the subset slots scaled by
// sqrt(n_stage / s_stage).  v must have length n_stage.
std::vector<double> stage_apply(const StageSpec& spec, const SeedTape& tape,
                                std::span<const double> v);

// The tail: (1/sqrt(s_out)) * B * v with B's +-1 entries drawn k-wise
// independently from the tail sign slice, indexed row-major.  v must have
// length m_in.
std::vector<double> cw_apply(const TailSpec& tail, const SeedTape& tape,
                             std::span<const double> v);

// The full map: pad_input, stages in order, then the tail if present.
// Linear in w; length of the result is plan.output_dim.
std::vector<double> generate_apply(const JlPlan& plan, const SeedTape& tape,
                                   std::span<const double> w);

// ----------------------------------------------------------------------------
// MatrixHandle — a (plan, seed) pair viewed as a concrete matrix, with the
// per-stage sign strings, subset members, and tail signs expanded once so
// repeated applications pay only the arithmetic.
// ----------------------------------------------------------------------------

class MatrixHandle {
public:
    MatrixHandle(JlPlan plan, SeedTape tape);

    const JlPlan& plan() const { return plan_; }
    const SeedTape& tape() const { return tape_; }
    std::uint64_t input_dim() const { return plan_.n_input; }
    std::uint64_t output_dim() const { return plan_.output_dim; }

    // Same value as generate_apply(plan, tape, w).
    std::vector<double> apply(std::span<const double> w) const;

    // Single entry via the low-space path (no cached material consulted).
    double entry(std::uint64_t row, std::uint64_t col) const;

private:
    struct StageCache {
        std::vector<std::int8_t> signs;     // length n_stage
        std::vector<std::uint64_t> subset;  // length s_stage
    };

    JlPlan plan_;
    SeedTape tape_;
    std::vector<StageCache> stages_;
    std::vector<std::int8_t> tail_signs_;  // row-major; empty past the cache cap
    SignTape tail_tape_;                   // fallback evaluator when not cached
    bool tail_cached_ = false;
};

}  // namespace jlgen
