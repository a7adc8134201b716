#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "jlgen/errors.hpp"

namespace jlgen {

// ============================================================================
// Parameter schedule for the generator.
//
// A plan fixes everything except the seed: the padded ambient dimension, the
// per-stage dimensions / independence levels / seed slices, and the dense
// sign-matrix tail.  Applying the map is then a pure function of
// (plan, seed bits, input vector).
// ============================================================================

// Tunable constants baked into a plan.  All are serialized with the plan so
// a plan file fully determines the map.
struct Constants {
    // Exponent of the small-failure regime delta >= 1/N^c; when delta is
    // smaller than that, the effective exponent becomes log(1/delta)/log N.
    double regime_c = 1.0;
    // Subset size multiplier: s = ceil(sampler_size_c * B^2 * ln(1/d) / e^2).
    double sampler_size_c = 2.0;
    // Subset independence multiplier: k_s = ceil(sampler_indep_c * ln(1/d)).
    double sampler_indep_c = 2.0;
    // Tail output-dimension multiplier: s_out = ceil(tail_size_c * ln(1/d) / e^2).
    double tail_size_c = 4.0;
    // Tail independence multiplier: k_cw = ceil(tail_indep_c * ln(1/d)).
    double tail_indep_c = 2.0;
    // Budget constant of the documented seed-length bound
    //   seed_length_bits <= seed_bound_c * log2(N/d) * log2(log2(N/d)/e).
    double seed_bound_c = 8.0;
    // Independence growth across stages: "doubling" uses k_i = 2^i * k0;
    // "delayed-doubling" repeats k0 once (k_1 = k0) and doubles afterwards.
    std::string k_schedule = "doubling";
};

// One dimension-reduction stage: sign-flip, Walsh-Hadamard rotation, then
// coordinate subsampling, scaled by sqrt(n_stage / s_stage).
struct StageSpec {
    std::uint64_t n_stage = 0;        // input dimension, a power of two
    std::uint64_t s_stage = 0;        // output slots
    std::uint32_t sign_k = 0;         // independence of the sign string
    unsigned field_log = 0;           // sign field size log2; 2^field_log == n_stage
    std::uint32_t sampler_k = 0;      // independence of the subset family
    unsigned sampler_field_log = 0;   // subset field size log2; 2^.. == n_stage
    double eps_stage = 0.0;
    double delta_stage = 0.0;
    std::uint64_t sign_offset = 0;    // seed slice [sign_offset, +sign_bits)
    std::uint64_t sign_bits = 0;
    std::uint64_t sampler_offset = 0; // seed slice [sampler_offset, +sampler_bits)
    std::uint64_t sampler_bits = 0;
};

// Final dense +-1/sqrt(s_out) matrix with jointly k-wise independent entries,
// indexed row-major over one sign domain of size s_out * m_in.
struct TailSpec {
    std::uint64_t m_in = 0;
    std::uint64_t s_out = 0;
    std::uint32_t k = 0;
    unsigned field_log = 0;           // 2^field_log >= s_out * m_in
    double eps_tail = 0.0;
    double delta_tail = 0.0;
    std::uint64_t sign_offset = 0;
    std::uint64_t sign_bits = 0;
};

struct JlPlan {
    std::uint64_t n_input = 0;
    double eps = 0.0;
    double delta = 0.0;
    Constants consts;

    // Power-of-two padding of max(n_input, ceil(1/delta)); the dimension the
    // first component sees.
    std::uint64_t ambient_dim = 0;

    std::vector<StageSpec> stages;
    std::optional<TailSpec> tail;     // absent for a stages-only schedule

    std::uint64_t output_dim = 0;
    std::uint64_t seed_length_bits = 0;

    // Per-component budget actually used: every stage and the tail run at
    // (split_eps, split_delta) so that the composed distortion stays within
    // (eps, delta).
    double split_eps = 0.0;
    double split_delta = 0.0;

    // Reference value of the asymptotic stage-count rule
    // log2(N) / (8 * log2(log2(N))); diagnostic only — the halving stopping
    // rule governs the realized stage count (see plan_build).
    double schedule_rule_value = 0.0;

    // Evaluated seed-length budget seed_bound_c * log2(N/d) * log2(log2(N/d)/e).
    double seed_bound_bits = 0.0;

    std::uint32_t stage_count() const { return static_cast<std::uint32_t>(stages.size()); }

    // 64-bit FNV-1a over the canonical serialization (hash field excluded).
    std::uint64_t hash() const;
};

// ----------------------------------------------------------------------------
// Construction
// ----------------------------------------------------------------------------

// Builds the full schedule for (n, eps, delta):
//   - pads to N = next power of two >= max(n, ceil(1/delta));
//   - picks the stage count t as the largest value such that, under the
//     even budget split eps' = (1+eps)^(1/(t+1)) - 1, delta' = delta/(t+1),
//     the first t stages each at least halve their dimension (a stage is
//     retained only while s(n_i) <= n_i / 2);
//   - sizes each stage by s(n) = ceil(sampler_size_c * sqrt(n) * ln(1/d') / e'^2)
//     with range bound B = n^(1/4), independence k_i from the k-schedule
//     (k0 = 16*(c_eff+1), capped at n_i^(1/8), floored at 4, kept even);
//   - appends the dense sign tail sized s_out = ceil(tail_size_c * ln(1/d')/e'^2);
//   - lays out the seed slices in canonical order (stage 0 signs, stage 0
//     sampler index, stage 1 signs, ..., tail signs) and totals their bits.
// Deterministic for fixed inputs and constants.
JlPlan plan_build(std::uint64_t n, double eps, double delta, const Constants& consts = {});

// ----------------------------------------------------------------------------
// Manual schedules (testing and experimentation)
// ----------------------------------------------------------------------------

struct ManualStage {
    std::uint64_t n_stage = 0;   // power of two
    std::uint64_t s_stage = 0;
    std::uint32_t sign_k = 4;
    std::uint32_t sampler_k = 2;
};

struct ManualTail {
    std::uint64_t s_out = 0;
    std::uint32_t k = 2;
};

// Assembles a plan from explicit per-component sizes: stage i+1's dimension
// is stage i's s_stage rounded up to a power of two; the tail (if any) takes
// the last stage's s_stage unpadded.  Validates power-of-two dimensions and
// computes offsets exactly as plan_build does.
JlPlan plan_manual(std::uint64_t n_input, double eps, double delta,
                   const std::vector<ManualStage>& stages,
                   const std::optional<ManualTail>& tail,
                   const Constants& consts = {});

// ----------------------------------------------------------------------------
// Serialization — stable key order; the emitted document embeds hash() and
// loading verifies it (PlanHashMismatch on disagreement).
// ----------------------------------------------------------------------------

std::string plan_to_json(const JlPlan& plan);
JlPlan plan_from_json(const std::string& text);

void plan_save(const JlPlan& plan, const std::string& path);
JlPlan plan_load(const std::string& path);

}  // namespace jlgen
