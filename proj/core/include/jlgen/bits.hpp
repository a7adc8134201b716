#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "jlgen/errors.hpp"

namespace jlgen {

// ============================================================================
// BitString — an immutable sequence of bits backed by bytes.
//
// Bit order is most-significant-bit-first within each byte: bit i of the
// string lives in bit (7 - i%8) of byte i/8.  This convention is normative
// for seed material: the hex string "a1" denotes the bits 1010 0001.
// ============================================================================

class BitString {
public:
    BitString() = default;
    BitString(std::vector<std::uint8_t> bytes, std::uint64_t bit_len);

    // Parses hex (case-insensitive, optional "0x" prefix).  The bit length
    // is four times the number of hex digits.
    static BitString from_hex(const std::string& hex);

    static BitString zeros(std::uint64_t bit_len);

    // Packs the low `bit_len` bits of `value` (bit_len <= 64), most
    // significant first.
    static BitString from_uint(std::uint64_t value, unsigned bit_len);

    // Fresh bits from the operating system entropy source.
    static BitString random(std::uint64_t bit_len);

    std::uint64_t size() const { return bit_len_; }
    bool empty() const { return bit_len_ == 0; }

    // Single bit; throws IndexOutOfRange past the end.
    bool bit(std::uint64_t i) const;

    // Reads `nbits` (<= 64) starting at `offset` as an unsigned integer,
    // first bit most significant.  Throws BitsTooShort if the string ends
    // before offset + nbits.
    std::uint64_t read_uint(std::uint64_t offset, unsigned nbits) const;

    // Copies bits [offset, offset + len) into a fresh string.
    BitString slice(std::uint64_t offset, std::uint64_t len) const;

    std::string to_hex() const;

    const std::vector<std::uint8_t>& bytes() const { return bytes_; }

private:
    std::vector<std::uint8_t> bytes_;
    std::uint64_t bit_len_ = 0;
};

// ----------------------------------------------------------------------------
// Counter-based bit derivation for reproducible audits.
//
// derive_bits(key, stream, counter, nbits) expands (key, stream, counter)
// into nbits deterministic bits with no sequential state: word j of the
// output is mix(mix(mix(key + G*(stream+1)) + P*(counter+1)) + G*(j+1)),
// where mix is the splitmix64 finalizer, G = 0x9E3779B97F4A7C15 and
// P = 0xD1B54A32D192ED03.  Words are laid out most-significant-byte-first.
// Distinct streams keep independent uses of one key (audit tapes, baseline
// matrices, sampled member indices, sampled sign seeds) from colliding.
// ----------------------------------------------------------------------------

BitString derive_bits(std::uint64_t key, std::uint64_t stream, std::uint64_t counter,
                      std::uint64_t nbits);

}  // namespace jlgen
