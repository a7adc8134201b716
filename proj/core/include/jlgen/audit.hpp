#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "jlgen/bits.hpp"
#include "jlgen/plan.hpp"
#include "jlgen/tape.hpp"

namespace jlgen {

// ============================================================================
// Empirical verification harness: baseline oracle, Monte Carlo distortion
// measurements, sign-spreading checks, and exact exhaustive enumeration.
//
// All sampled audits draw their tapes through derive_bits (see bits.hpp)
// keyed by an rng_key, on fixed streams:
//   stream 0 — generator tapes,     stream 1 — baseline sign matrices,
//   stream 2 — sampled family members, stream 3 — sampled sign seeds.
// Reports are therefore bit-reproducible from (plan, rng_key).
// ============================================================================

struct WilsonInterval {
    double lower = 0.0;
    double upper = 1.0;
    double width() const { return upper - lower; }
};

// Wilson score interval at 99% confidence for `failures` out of `trials`.
WilsonInterval wilson99(std::uint64_t failures, std::uint64_t trials);

// ----------------------------------------------------------------------------
// Baseline oracle: a fully i.i.d. +-1 matrix scaled by 1/sqrt(s), signs read
// row-major from the seed bits (bit 0 -> +1, bit 1 -> -1).
// ----------------------------------------------------------------------------
std::vector<double> baseline_apply(std::uint64_t s, const BitString& seed,
                                   std::span<const double> w);

// ----------------------------------------------------------------------------
// Distortion measurement
// ----------------------------------------------------------------------------

// Number of histogram bins covering |squared norm - 1| in [0, 2*eps); one
// overflow bin follows, so a report holds kHistogramBins + 1 counts.
inline constexpr std::size_t kHistogramBins = 16;

struct AuditReport {
    std::string params;                    // one-line plan summary
    std::uint64_t trials = 0;
    std::uint64_t failures = 0;
    double failure_rate = 0.0;             // Pr[ |sq norm - 1| > eps ]
    WilsonInterval ci99;
    std::vector<std::uint64_t> histogram;  // kHistogramBins + overflow
    double histogram_bin_width = 0.0;
    // Fraction of trials whose first-stage rotated vector had an entry above
    // n^(-3/8); negative when the plan has no stages.
    double linf_exceed_rate = -1.0;
    std::uint64_t baseline_failures = 0;
    double baseline_failure_rate = 0.0;
    WilsonInterval baseline_ci99;
    // Measured, non-normative: excluded from report equality and hashing.
    double wall_time_seconds = 0.0;
};

// Draws `trials` tapes (stream 0), applies the map to w scaled to unit norm,
// and measures Pr[|squared norm - 1| > plan.eps]; runs the i.i.d. baseline
// (stream 1) at matched output dimension on the same vector for comparison.
// trials must be >= 1000 so the 99% interval is meaningful.
AuditReport distortion_audit(const JlPlan& plan, std::span<const double> w,
                             std::uint64_t trials, std::uint64_t rng_key);

// ----------------------------------------------------------------------------
// Sign-spreading (infinity-norm) measurement: probability over sign seeds
// that ||H * D(x) * w||_inf exceeds n^(-(1/2 - alpha)).
// ----------------------------------------------------------------------------

struct RegularityOptions {
    std::uint64_t enumerate_cap_bits = 24;  // exhaustive up to this seed width
    std::uint64_t sample_trials = 20000;
    std::uint64_t rng_key = 0;
};

struct RegularityReport {
    double exceed_rate = 0.0;
    double threshold = 0.0;        // n^(-(1/2 - alpha))
    double bound = 0.0;            // k^(k/2) / n^(alpha*k - 1)
    bool exhaustive = false;
    std::uint64_t seeds = 0;
};

// w is normalized internally; n must be a power of two >= w's length and
// alpha must lie in (0, 1/2).
RegularityReport regularity_audit(std::uint64_t n, std::uint32_t k,
                                  std::span<const double> w, double alpha,
                                  const RegularityOptions& opts = {});

// ----------------------------------------------------------------------------
// Exact exhaustive enumeration over every tape of a tiny plan.
//
// The input vector has integer coordinates (the failure event and the mean
// identity are invariant under scaling, so any rational vector can be
// cleared of denominators first).  All stage and tail arithmetic is done in
// integers: the squared output norm times the product of the per-component
// scale denominators is an exact integer, and the distortion comparison
// against eps (a dyadic rational, read exactly from its double bits) is an
// exact integer comparison — no rounding anywhere.
// ----------------------------------------------------------------------------

struct ExhaustiveReport {
    std::uint64_t tapes = 0;
    std::uint64_t failures = 0;
    double failure_probability = 0.0;  // failures / 2^seed_bits, exact in a double
    // Whether sum over all tapes of ||output||^2 equals ||w||^2 times the
    // tape count, exactly, in integer arithmetic.
    bool mean_exact = false;
};

ExhaustiveReport exhaustive_audit(const JlPlan& plan, std::span<const long long> w);

// ----------------------------------------------------------------------------
// Fixed measurement corpus (version 1): named unit vectors covering the
// standard stress shapes — a basis vector, a two-point mass, uniform spread,
// geometric decay, an alternating-sign spread, and a sign pattern that
// concentrates all mass on one coordinate after the Walsh-Hadamard rotation
// (the worst case for infinity-norm regularity).
// ----------------------------------------------------------------------------

inline constexpr const char* kCorpusVersion = "v1";

std::vector<std::string> corpus_names();

// Unit-norm double vectors of length n (n a power of two >= 8).
std::vector<std::vector<double>> measurement_corpus(std::uint64_t n);

// The same shapes with integer coordinates (for exact enumeration).
std::vector<std::vector<long long>> measurement_corpus_integer(std::uint64_t n);

}  // namespace jlgen
