#include "jlgen/hadamard.hpp"

#include <bit>
#include <cmath>

namespace jlgen {

namespace {

void require_pow2(std::size_t n, const char* who) {
    if (n == 0 || !std::has_single_bit(n))
        throw NonPowerOfTwoLength(std::string(who) + ": length " + std::to_string(n) +
                                  " is not a power of two");
}

}  // namespace

PaddedVector PaddedVector::from(std::span<const double> v) {
    PaddedVector out;
    out.logical_len = v.size();
    const std::size_t n_pad = v.empty() ? 1 : std::bit_ceil(v.size());
    out.data.assign(v.begin(), v.end());
    out.data.resize(n_pad, 0.0);
    return out;
}

void fwht_inplace(std::span<double> v) {
    require_pow2(v.size(), "fwht");
    const std::size_t n = v.size();
    for (std::size_t half = 1; half < n; half <<= 1) {
        for (std::size_t block = 0; block < n; block += half << 1) {
            for (std::size_t i = block; i < block + half; ++i) {
                const double a = v[i];
                const double b = v[i + half];
                v[i] = a + b;
                v[i + half] = a - b;
            }
        }
    }
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (double& x : v) x *= scale;
}

void fwht_inplace_counted(std::span<double> v, FwhtStats& stats) {
    require_pow2(v.size(), "fwht");
    const std::size_t n = v.size();
    for (std::size_t half = 1; half < n; half <<= 1) {
        for (std::size_t block = 0; block < n; block += half << 1) {
            for (std::size_t i = block; i < block + half; ++i) {
                const double a = v[i];
                const double b = v[i + half];
                v[i] = a + b;
                v[i + half] = a - b;
                stats.adds += 2;
            }
        }
    }
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (double& x : v) x *= scale;
    stats.muls += n;
}

PaddedVector fwht(PaddedVector v) {
    fwht_inplace(v.data);
    return v;
}

PaddedVector regularize(PaddedVector v, const SignTape& signs) {
    require_pow2(v.data.size(), "regularize");
    if (signs.domain_size < v.data.size())
        throw SignDomainTooSmall("regularize: sign domain " +
                                 std::to_string(signs.domain_size) +
                                 " smaller than vector length " +
                                 std::to_string(v.data.size()));
    const std::vector<std::int8_t> x = sign_vector(signs);
    for (std::size_t i = 0; i < v.data.size(); ++i)
        if (x[i] < 0) v.data[i] = -v.data[i];
    fwht_inplace(v.data);
    return v;
}

}  // namespace jlgen
