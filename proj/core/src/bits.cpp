#include "jlgen/bits.hpp"

#include <cctype>
#include <random>

namespace jlgen {

BitString::BitString(std::vector<std::uint8_t> bytes, std::uint64_t bit_len)
    : bytes_(std::move(bytes)), bit_len_(bit_len) {
    if (bytes_.size() * 8 < bit_len_)
        throw BitsTooShort("BitString: " + std::to_string(bytes_.size()) +
                           " bytes cannot hold " + std::to_string(bit_len_) + " bits");
    // Zero any slack bits in the final byte so equal strings compare equal.
    if (bit_len_ % 8 != 0 && !bytes_.empty()) {
        const unsigned keep = static_cast<unsigned>(bit_len_ % 8);
        bytes_[bit_len_ / 8] &= static_cast<std::uint8_t>(0xFFu << (8 - keep));
    }
    bytes_.resize((bit_len_ + 7) / 8);
}

BitString BitString::from_hex(const std::string& hex) {
    std::size_t start = 0;
    if (hex.size() >= 2 && hex[0] == '0' && (hex[1] == 'x' || hex[1] == 'X')) start = 2;
    std::vector<std::uint8_t> bytes;
    bytes.reserve((hex.size() - start + 1) / 2);
    unsigned digits = 0;
    std::uint8_t cur = 0;
    for (std::size_t i = start; i < hex.size(); ++i) {
        const char c = hex[i];
        unsigned v;
        if (c >= '0' && c <= '9') v = static_cast<unsigned>(c - '0');
        else if (c >= 'a' && c <= 'f') v = static_cast<unsigned>(c - 'a') + 10;
        else if (c >= 'A' && c <= 'F') v = static_cast<unsigned>(c - 'A') + 10;
        else throw InvalidParams(std::string("BitString::from_hex: bad digit '") + c + "'");
        cur = static_cast<std::uint8_t>((cur << 4) | v);
        if (++digits % 2 == 0) { bytes.push_back(cur); cur = 0; }
    }
    if (digits % 2 != 0) bytes.push_back(static_cast<std::uint8_t>(cur << 4));
    return BitString(std::move(bytes), 4ull * digits);
}

BitString BitString::zeros(std::uint64_t bit_len) {
    return BitString(std::vector<std::uint8_t>((bit_len + 7) / 8, 0), bit_len);
}

BitString BitString::from_uint(std::uint64_t value, unsigned bit_len) {
    if (bit_len > 64) throw InvalidParams("BitString::from_uint: bit_len > 64");
    std::vector<std::uint8_t> bytes((bit_len + 7) / 8, 0);
    for (unsigned i = 0; i < bit_len; ++i) {
        const bool b = (value >> (bit_len - 1 - i)) & 1u;
        if (b) bytes[i / 8] |= static_cast<std::uint8_t>(0x80u >> (i % 8));
    }
    return BitString(std::move(bytes), bit_len);
}

BitString BitString::random(std::uint64_t bit_len) {
    std::random_device rd;
    std::vector<std::uint8_t> bytes((bit_len + 7) / 8);
    for (std::size_t i = 0; i < bytes.size(); i += 4) {
        const std::uint32_t word = rd();
        for (std::size_t j = 0; j < 4 && i + j < bytes.size(); ++j)
            bytes[i + j] = static_cast<std::uint8_t>(word >> (8 * (3 - j)));
    }
    return BitString(std::move(bytes), bit_len);
}

bool BitString::bit(std::uint64_t i) const {
    if (i >= bit_len_)
        throw IndexOutOfRange("BitString::bit: index " + std::to_string(i) +
                              " >= length " + std::to_string(bit_len_));
    return (bytes_[i / 8] >> (7 - (i % 8))) & 1u;
}

std::uint64_t BitString::read_uint(std::uint64_t offset, unsigned nbits) const {
    if (nbits > 64) throw InvalidParams("BitString::read_uint: nbits > 64");
    if (offset + nbits > bit_len_)
        throw BitsTooShort("BitString::read_uint: need bits [" + std::to_string(offset) +
                           ", " + std::to_string(offset + nbits) + ") but length is " +
                           std::to_string(bit_len_));
    std::uint64_t out = 0;
    std::uint64_t i = offset;
    unsigned remaining = nbits;
    // Leading partial byte.
    while (remaining > 0 && i % 8 != 0) {
        out = (out << 1) | ((bytes_[i / 8] >> (7 - (i % 8))) & 1u);
        ++i;
        --remaining;
    }
    // Whole bytes.
    while (remaining >= 8) {
        out = (out << 8) | bytes_[i / 8];
        i += 8;
        remaining -= 8;
    }
    // Trailing partial byte.
    while (remaining > 0) {
        out = (out << 1) | ((bytes_[i / 8] >> (7 - (i % 8))) & 1u);
        ++i;
        --remaining;
    }
    return out;
}

BitString BitString::slice(std::uint64_t offset, std::uint64_t len) const {
    if (offset + len > bit_len_)
        throw BitsTooShort("BitString::slice: need bits [" + std::to_string(offset) +
                           ", " + std::to_string(offset + len) + ") but length is " +
                           std::to_string(bit_len_));
    std::vector<std::uint8_t> bytes((len + 7) / 8, 0);
    std::uint64_t done = 0;
    while (done < len) {
        const unsigned chunk = static_cast<unsigned>(std::min<std::uint64_t>(64, len - done));
        const std::uint64_t word = read_uint(offset + done, chunk);
        for (unsigned b = 0; b < chunk; ++b) {
            if ((word >> (chunk - 1 - b)) & 1u) {
                const std::uint64_t pos = done + b;
                bytes[pos / 8] |= static_cast<std::uint8_t>(0x80u >> (pos % 8));
            }
        }
        done += chunk;
    }
    return BitString(std::move(bytes), len);
}

std::string BitString::to_hex() const {
    static const char* digits = "0123456789abcdef";
    const std::uint64_t ndigits = (bit_len_ + 3) / 4;
    std::string out;
    out.reserve(ndigits);
    for (std::uint64_t d = 0; d < ndigits; ++d) {
        const std::uint8_t byte = bytes_[d / 2];
        out.push_back(digits[(d % 2 == 0) ? (byte >> 4) : (byte & 0xF)]);
    }
    return out;
}

namespace {

std::uint64_t splitmix_finalize(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

}  // namespace

BitString derive_bits(std::uint64_t key, std::uint64_t stream, std::uint64_t counter,
                      std::uint64_t nbits) {
    constexpr std::uint64_t kG = 0x9E3779B97F4A7C15ull;
    constexpr std::uint64_t kP = 0xD1B54A32D192ED03ull;
    const std::uint64_t sub =
        splitmix_finalize(splitmix_finalize(key + kG * (stream + 1)) + kP * (counter + 1));
    std::vector<std::uint8_t> bytes((nbits + 7) / 8);
    for (std::uint64_t j = 0; j * 8 < bytes.size(); ++j) {
        const std::uint64_t word = splitmix_finalize(sub + kG * (j + 1));
        for (unsigned b = 0; b < 8 && j * 8 + b < bytes.size(); ++b)
            bytes[j * 8 + b] = static_cast<std::uint8_t>(word >> (8 * (7 - b)));
    }
    return BitString(std::move(bytes), nbits);
}

}  // namespace jlgen
