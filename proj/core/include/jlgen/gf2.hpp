#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "jlgen/errors.hpp"

namespace jlgen {

// ============================================================================
// GfField — arithmetic in the binary field GF(2^w), 1 <= w <= 63.
//
// Elements are the integers [0, 2^w); the binary expansion of an integer
// gives its coordinates in the polynomial basis.  The modulus for each w is
// a fixed primitive polynomial (table in gf2.cpp), so x (the element 2) is
// always a generator of the multiplicative group.  Fields are immutable and
// safe to share across threads.
// ============================================================================

class GfField {
public:
    explicit GfField(unsigned w);

    // Shared per-process instance; discrete-log tables (built for small w)
    // are paid for once.
    static const GfField& of(unsigned w);

    unsigned log_size() const { return w_; }
    std::uint64_t size() const { return std::uint64_t{1} << w_; }

    // Modulus including its leading x^w term, as a bit mask.
    std::uint64_t modulus() const { return modulus_; }
    static std::uint64_t modulus_for(unsigned w);

    std::uint64_t add(std::uint64_t a, std::uint64_t b) const { return a ^ b; }

    std::uint64_t mul(std::uint64_t a, std::uint64_t b) const {
        if (!log_.empty()) {
            if (a == 0 || b == 0) return 0;
            std::uint64_t e = static_cast<std::uint64_t>(log_[a]) + log_[b];
            const std::uint64_t order = size() - 1;
            if (e >= order) e -= order;
            return exp_[e];
        }
        return mul_slow(a, b);
    }

    // Carry-less product of a and b reduced by the modulus; no tables.
    std::uint64_t mul_slow(std::uint64_t a, std::uint64_t b) const;

    std::uint64_t pow(std::uint64_t a, std::uint64_t e) const;

    // Horner evaluation of sum_d coeffs[d] * x^d (degree-ascending order).
    std::uint64_t eval_poly(std::span<const std::uint64_t> coeffs, std::uint64_t x) const;

private:
    unsigned w_;
    std::uint64_t modulus_;
    std::uint64_t mask_;  // 2^w - 1
    // Discrete log / antilog tables w.r.t. the generator x, built when the
    // field is small enough that 2^w table entries are cheap to hold.
    std::vector<std::uint32_t> log_;
    std::vector<std::uint32_t> exp_;
};

}  // namespace jlgen
