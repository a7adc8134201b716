#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "jlgen/errors.hpp"
#include "jlgen/tape.hpp"

namespace jlgen {

// ============================================================================
// Orthonormal fast Walsh-Hadamard transform (Sylvester order) and the
// sign-flip composition H * D(x).
//
// The normative matrix convention is H[a][b] = (-1)^popcount(a & b) / sqrt(n);
// with that scaling H is symmetric, orthonormal, and an involution.
// ============================================================================

// A vector padded with zeros to the least power of two >= its logical length.
struct PaddedVector {
    std::vector<double> data;
    std::uint64_t logical_len = 0;

    static PaddedVector from(std::span<const double> v);

    std::uint64_t padded_len() const { return data.size(); }
};

// In-place transform; length must be a power of two (NonPowerOfTwoLength).
// O(n log n) arithmetic operations.
void fwht_inplace(std::span<double> v);

struct FwhtStats {
    std::uint64_t adds = 0;
    std::uint64_t muls = 0;
    std::uint64_t total() const { return adds + muls; }
};

// Same transform, tallying arithmetic operations into `stats`.
void fwht_inplace_counted(std::span<double> v, FwhtStats& stats);

// Value-semantics wrapper: returns H * v, input untouched.
PaddedVector fwht(PaddedVector v);

// Returns H * D(x) * v: flips v's entries by the sign string, then rotates.
// Requires signs.domain_size >= padded length (SignDomainTooSmall).
PaddedVector regularize(PaddedVector v, const SignTape& signs);

}  // namespace jlgen
