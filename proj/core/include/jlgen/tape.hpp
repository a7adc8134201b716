#pragma once

#include <cstdint>
#include <vector>

#include "jlgen/bits.hpp"
#include "jlgen/errors.hpp"

namespace jlgen {

struct JlPlan;

// ============================================================================
// Seed partitioning and k-wise independent sign generation.
// ============================================================================

enum class SliceKind { StageSigns, StageSampler, TailSigns };

struct SliceRef {
    SliceKind kind;
    std::uint32_t stage;      // stage index; 0 for TailSigns
    std::uint64_t offset;
    std::uint64_t length;
};

// A seed with its partition map: each pipeline component reads its own
// disjoint slice, in the canonical order stage 0 signs, stage 0 sampler
// index, stage 1 signs, ..., tail signs.
struct SeedTape {
    BitString bits;
    std::vector<SliceRef> partition;

    const SliceRef& slice(SliceKind kind, std::uint32_t stage = 0) const;
};

// Splits `bits` according to the plan's component schedule.  Requires at
// least plan.seed_length_bits bits (BitsTooShort otherwise); extra bits are
// ignored.
SeedTape tape_partition(const JlPlan& plan, BitString bits);

// ----------------------------------------------------------------------------
// SignTape — a k-wise independent +-1 string of length domain_size, defined
// by a degree-(k-1) polynomial over GF(2^field_log).  The sign at index i is
// the lowest-order bit of the polynomial evaluated at the field element whose
// polynomial-basis coordinates are the binary expansion of i, mapped
// 0 -> +1, 1 -> -1.  Coefficients are parsed constant-term-first, field_log
// bits each, so the seed cost is exactly k * field_log bits.
// ----------------------------------------------------------------------------

struct SignTape {
    unsigned field_log = 0;
    std::uint64_t domain_size = 0;              // m <= 2^field_log
    std::vector<std::uint64_t> coefficients;    // degree-ascending, k entries

    std::uint32_t indep() const { return static_cast<std::uint32_t>(coefficients.size()); }
    std::uint64_t seed_bits() const { return coefficients.size() * field_log; }
};

// Parses k coefficients from bits starting at `offset`.
SignTape make_sign_tape(unsigned field_log, std::uint64_t domain_size,
                        const BitString& bits, std::uint64_t offset, std::uint32_t k);

int sign_at(const SignTape& tape, std::uint64_t index);

// Element i equals sign_at(tape, i); length domain_size.
std::vector<std::int8_t> sign_vector(const SignTape& tape);

}  // namespace jlgen
