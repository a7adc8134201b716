#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "jlgen/bits.hpp"
#include "jlgen/errors.hpp"

namespace jlgen {

// ============================================================================
// Explicit indexed family of size-s index sequences over a power-of-two
// domain, used as an averaging sampler: for any bounded f, the sample mean
// over a uniformly chosen member is within eps of the true mean except for
// a delta fraction of members.
//
// Instantiation: a member is the evaluation sequence of a degree-(indep-1)
// polynomial over GF(2^field_log) at the points 0..s-1; the member index is
// the coefficient vector (constant term first, field_log bits each).  Members
// are multisets — slots may repeat — and each slot, marginally over a uniform
// index, is exactly uniform on the domain.  When a non-power-of-two domain is
// requested it is padded up to the next power of two (matching the transform
// padding used elsewhere) so slot marginals stay exactly uniform.
// ============================================================================

struct SubsetFamily {
    std::uint64_t n = 0;            // domain size, a power of two (padded)
    std::uint64_t requested_n = 0;  // domain size before padding
    std::uint64_t s = 0;            // slots per member
    std::uint32_t indep = 0;        // k: joint uniformity of any k slots
    unsigned field_log = 0;         // 2^field_log == n
    double range_bound = 1.0;       // B
    double eps = 0.0;
    double delta = 0.0;

    // Bits to select one member: indep * field_log (the family has
    // 2^index_bits members).
    std::uint64_t index_bits() const { return std::uint64_t{indep} * field_log; }
};

// Sizes a family from the averaging contract:
//   s   = ceil(size_c  * B^2 * ln(1/delta) / eps^2)
//   k_s = ceil(indep_c * ln(1/delta)), at least 2
// Throws DegenerateRequest when s >= n (the domain cannot be meaningfully
// subsampled; callers stop recursing instead).
SubsetFamily family_build(std::uint64_t n, double range_bound, double eps, double delta,
                          double size_c = 2.0, double indep_c = 2.0);

// A family with explicitly chosen sizes (plan construction and tests).
SubsetFamily make_family(std::uint64_t n, std::uint64_t s, std::uint32_t indep,
                         double range_bound = 1.0, double eps = 0.0, double delta = 0.0);

// The index-th member: slot j holds the polynomial evaluated at field element
// j.  `index` must have exactly index_bits() bits.
std::vector<std::uint64_t> subset_at(const SubsetFamily& family, const BitString& index);

struct SamplerAuditOptions {
    std::uint64_t enumerate_cap_bits = 24;  // exhaustive audit allowed up to this
    bool allow_sampled = false;             // past the cap, sample instead of failing
    std::uint64_t sample_trials = 100000;
    std::uint64_t rng_key = 0;
};

struct SamplerAuditResult {
    double failure_fraction = 0.0;   // members with |sample mean - true mean| > eps
    bool exhaustive = false;
    std::uint64_t members_checked = 0;
};

// Measures the averaging guarantee for one function f (given as its value
// table over the domain; values must lie in [0, range_bound]).
SamplerAuditResult sampler_audit(const SubsetFamily& family, std::span<const double> f,
                                 const SamplerAuditOptions& opts = {});

}  // namespace jlgen
