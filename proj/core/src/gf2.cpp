#include "jlgen/gf2.hpp"

#include <array>
#include <memory>
#include <mutex>

namespace jlgen {

namespace {

// Primitive polynomial over GF(2) for each degree w = 1..63, encoded with
// the leading x^w bit set (so w=4 -> 0x13 is x^4 + x + 1).  Each entry is
// irreducible and has x as a generator of the multiplicative group; the
// unit-test suite re-verifies both properties.
constexpr std::array<std::uint64_t, 64> kPrimitivePoly = {
    0x0ULL,  // unused (w=0)
    0x3ULL,  // w=1  x + 1
    0x7ULL,  0xbULL,  0x13ULL,  0x25ULL,  0x43ULL,  0x83ULL,  0x11dULL,
    0x211ULL,  0x409ULL,  0x805ULL,  0x1053ULL,  0x201bULL,  0x402bULL,
    0x8003ULL,  0x1002dULL,  0x20009ULL,  0x40081ULL,  0x80027ULL,
    0x100009ULL,  0x200005ULL,  0x400003ULL,  0x800021ULL,  0x100001bULL,
    0x2000009ULL,  0x4000047ULL,  0x8000027ULL,  0x10000009ULL,
    0x20000005ULL,  0x40000053ULL,  0x80000009ULL,  0x1000000c5ULL,
    0x200002001ULL,  0x400000119ULL,  0x800000005ULL,  0x1000000801ULL,
    0x2000000053ULL,  0x4000000063ULL,  0x8000000011ULL,  0x10000000039ULL,
    0x20000000009ULL,  0x40000000099ULL,  0x80000000059ULL,  0x100000000065ULL,
    0x20000000001bULL,  0x4000000001c1ULL,  0x800000000021ULL,  0x1000000000291ULL,
    0x2000000000201ULL,  0x400000000001dULL,  0x800000000004bULL,  0x10000000000009ULL,
    0x20000000000047ULL,  0x40000000000149ULL,  0x80000001000001ULL,  0x100000000000095ULL,
    0x200000000000081ULL,  0x400000000080001ULL,  0x800000000000095ULL,  0x1000000000000003ULL,
    0x2000000000000027ULL,  0x4000000000000069ULL,  0x8000000000000003ULL,
};

// Largest w for which we precompute discrete-log tables (2 * 4 MiB at the
// threshold; the hot paths of sign evaluation live below it).
constexpr unsigned kTableMaxBits = 20;

}  // namespace

std::uint64_t GfField::modulus_for(unsigned w) {
    if (w < 1 || w > 63)
        throw InvalidParams("GfField: field log-size must be in [1, 63], got " +
                            std::to_string(w));
    return kPrimitivePoly[w];
}

GfField::GfField(unsigned w)
    : w_(w), modulus_(modulus_for(w)), mask_((std::uint64_t{1} << w) - 1) {
    if (w_ <= kTableMaxBits) {
        const std::uint64_t n = size();
        exp_.resize(n - 1);
        log_.resize(n);
        log_[0] = 0;  // never consulted; mul() short-circuits zero
        std::uint64_t v = 1;
        for (std::uint64_t e = 0; e + 1 < n; ++e) {
            exp_[e] = static_cast<std::uint32_t>(v);
            log_[v] = static_cast<std::uint32_t>(e);
            // Multiply by the generator x: shift and reduce.
            v <<= 1;
            if (v >> w_) v = (v ^ modulus_) & mask_;
        }
    }
}

const GfField& GfField::of(unsigned w) {
    static std::array<std::unique_ptr<GfField>, 64> cache;
    static std::array<std::once_flag, 64> flags;
    if (w < 1 || w > 63)
        throw InvalidParams("GfField::of: field log-size must be in [1, 63], got " +
                            std::to_string(w));
    std::call_once(flags[w], [w] { cache[w] = std::make_unique<GfField>(w); });
    return *cache[w];
}

std::uint64_t GfField::mul_slow(std::uint64_t a, std::uint64_t b) const {
    a &= mask_;
    b &= mask_;
    std::uint64_t acc = 0;
    while (b != 0) {
        if (b & 1u) acc ^= a;
        b >>= 1;
        const bool carry = (a >> (w_ - 1)) & 1u;
        a = (a << 1) & mask_;
        if (carry) a ^= modulus_ & mask_;
    }
    return acc;
}

std::uint64_t GfField::pow(std::uint64_t a, std::uint64_t e) const {
    std::uint64_t acc = 1, base = a & mask_;
    while (e != 0) {
        if (e & 1u) acc = mul(acc, base);
        base = mul(base, base);
        e >>= 1;
    }
    return acc;
}

std::uint64_t GfField::eval_poly(std::span<const std::uint64_t> coeffs,
                                 std::uint64_t x) const {
    std::uint64_t acc = 0;
    for (std::size_t d = coeffs.size(); d-- > 0;)
        acc = mul(acc, x) ^ (coeffs[d] & mask_);
    return acc;
}

}  // namespace jlgen
