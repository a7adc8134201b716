#include "jlgen/sampler.hpp"

#include <bit>
#include <cmath>

#include "jlgen/gf2.hpp"

namespace jlgen {

namespace {

SubsetFamily family_common(std::uint64_t n, std::uint64_t s, std::uint32_t indep,
                           double range_bound, double eps, double delta) {
    SubsetFamily fam;
    fam.requested_n = n;
    fam.n = std::bit_ceil(n);
    fam.s = s;
    fam.indep = indep;
    fam.field_log = static_cast<unsigned>(std::countr_zero(fam.n));
    fam.range_bound = range_bound;
    fam.eps = eps;
    fam.delta = delta;
    if (fam.field_log < 1 || fam.field_log > 63)
        throw InvalidParams("subset family: domain size " + std::to_string(n) +
                            " out of the supported range");
    return fam;
}

// Coefficient d of member index m: the index bit-string carries coefficients
// constant-term-first, field_log bits each, most significant bit first — so
// coefficient 0 occupies the top field_log bits of the integer.
inline std::uint64_t member_coeff(std::uint64_t m, std::uint32_t indep, unsigned w,
                                  std::uint32_t d) {
    const std::uint64_t mask = (w == 64) ? ~0ull : ((std::uint64_t{1} << w) - 1);
    return (m >> (std::uint64_t{indep - 1 - d} * w)) & mask;
}

}  // namespace

SubsetFamily family_build(std::uint64_t n, double range_bound, double eps, double delta,
                          double size_c, double indep_c) {
    if (n < 1) throw InvalidParams("family_build: domain size must be >= 1");
    if (range_bound < 1.0) throw InvalidParams("family_build: range bound must be >= 1");
    if (!(eps > 0.0) || !(eps < 1.0) || !(delta > 0.0) || !(delta < 1.0))
        throw InvalidParams("family_build: eps and delta must lie in (0, 1)");
    if (size_c <= 0.0 || indep_c <= 0.0)
        throw InvalidParams("family_build: constants must be positive");

    const double log_term = std::log(1.0 / delta);
    const double s_real = size_c * range_bound * range_bound * log_term / (eps * eps);
    const auto s = static_cast<std::uint64_t>(std::ceil(s_real));
    if (s >= n)
        throw DegenerateRequest("family_build: subset size " + std::to_string(s) +
                                " >= domain " + std::to_string(n) +
                                "; nothing to subsample");
    const auto indep =
        std::max<std::uint32_t>(2, static_cast<std::uint32_t>(std::ceil(indep_c * log_term)));
    return family_common(n, s, indep, range_bound, eps, delta);
}

SubsetFamily make_family(std::uint64_t n, std::uint64_t s, std::uint32_t indep,
                         double range_bound, double eps, double delta) {
    if (s < 1 || s > n)
        throw InvalidParams("make_family: subset size must be in [1, n]");
    if (indep < 1) throw InvalidParams("make_family: independence must be >= 1");
    return family_common(n, s, indep, range_bound, eps, delta);
}

std::vector<std::uint64_t> subset_at(const SubsetFamily& family, const BitString& index) {
    if (index.size() != family.index_bits())
        throw InvalidParams("subset_at: index must have exactly " +
                            std::to_string(family.index_bits()) + " bits, got " +
                            std::to_string(index.size()));
    const GfField& field = GfField::of(family.field_log);
    std::vector<std::uint64_t> coeffs(family.indep);
    for (std::uint32_t d = 0; d < family.indep; ++d)
        coeffs[d] = index.read_uint(std::uint64_t{d} * family.field_log, family.field_log);
    std::vector<std::uint64_t> out(family.s);
    for (std::uint64_t j = 0; j < family.s; ++j)
        out[j] = field.eval_poly(coeffs, j);
    return out;
}

SamplerAuditResult sampler_audit(const SubsetFamily& family, std::span<const double> f,
                                 const SamplerAuditOptions& opts) {
    if (f.size() != family.n)
        throw LengthMismatch("sampler_audit: f covers " + std::to_string(f.size()) +
                             " points but the family domain is " + std::to_string(family.n));
    for (double v : f)
        if (!(v >= 0.0) || !(v <= family.range_bound))
            throw InvalidParams("sampler_audit: f value " + std::to_string(v) +
                                " outside [0, " + std::to_string(family.range_bound) + "]");

    double true_mean = 0.0;
    for (double v : f) true_mean += v;
    true_mean /= static_cast<double>(family.n);

    const GfField& field = GfField::of(family.field_log);
    const unsigned w = family.field_log;
    const double inv_s = 1.0 / static_cast<double>(family.s);

    const auto member_mean = [&](std::uint64_t m) {
        // Horner evaluation at each slot point with coefficients unpacked
        // straight from the member integer; matches subset_at bit-for-bit.
        double acc = 0.0;
        for (std::uint64_t j = 0; j < family.s; ++j) {
            std::uint64_t v = 0;
            for (std::uint32_t d = family.indep; d-- > 0;)
                v = field.mul(v, j) ^ member_coeff(m, family.indep, w, d);
            acc += f[v];
        }
        return acc * inv_s;
    };

    SamplerAuditResult result;
    const std::uint64_t cap = std::min<std::uint64_t>(opts.enumerate_cap_bits, 48);
    if (family.index_bits() <= cap) {
        const std::uint64_t total = std::uint64_t{1} << family.index_bits();
        std::uint64_t failures = 0;
        for (std::uint64_t m = 0; m < total; ++m)
            if (std::abs(member_mean(m) - true_mean) > family.eps) ++failures;
        result.failure_fraction = static_cast<double>(failures) / static_cast<double>(total);
        result.exhaustive = true;
        result.members_checked = total;
        return result;
    }
    if (!opts.allow_sampled)
        throw FamilyTooLargeToEnumerate("sampler_audit: family has 2^" +
                                        std::to_string(family.index_bits()) +
                                        " members; exhaustive cap is 2^" +
                                        std::to_string(cap));
    // Counter-based member sampling (stream 2 of the audit RNG convention).
    std::uint64_t failures = 0;
    for (std::uint64_t trial = 0; trial < opts.sample_trials; ++trial) {
        const BitString idx = derive_bits(opts.rng_key, 2, trial, family.index_bits());
        const std::vector<std::uint64_t> member = subset_at(family, idx);
        double acc = 0.0;
        for (std::uint64_t v : member) acc += f[v];
        if (std::abs(acc * inv_s - true_mean) > family.eps) ++failures;
    }
    result.failure_fraction =
        static_cast<double>(failures) / static_cast<double>(opts.sample_trials);
    result.exhaustive = false;
    result.members_checked = opts.sample_trials;
    return result;
}

}  // namespace jlgen
