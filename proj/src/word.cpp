// evmtaint: static taint analysis for EVM bytecode
// Copyright 2026 The evmtaint Authors.
// Licensed under the Apache License, Version 2.0.
#include "evmtaint/word.hpp"

#include <algorithm>
#include <bit>

#include "evmtaint/hex.hpp"

namespace evmtaint {

Word Word::from_bytes(std::span<const uint8_t> be) {
    Word w;
    if (be.size() > 32) be = be.last(32);
    // Right-align: the last input byte is the least significant.
    size_t bit = 0;
    for (size_t i = 0; i < be.size(); ++i, bit += 8) {
        const uint8_t b = be[be.size() - 1 - i];
        w.limb[bit / 64] |= static_cast<uint64_t>(b) << (bit % 64);
    }
    return w;
}

std::optional<Word> Word::from_hex(std::string_view hex) {
    try {
        const auto bytes = hex_decode(hex);
        if (bytes.size() > 32) return std::nullopt;
        return from_bytes(bytes);
    } catch (const Error&) {
        return std::nullopt;
    }
}

std::array<uint8_t, 32> Word::bytes() const {
    std::array<uint8_t, 32> out{};
    for (size_t i = 0; i < 32; ++i) {
        const size_t bit = 8 * (31 - i);
        out[i] = static_cast<uint8_t>(limb[bit / 64] >> (bit % 64));
    }
    return out;
}

std::string Word::hex() const {
    const auto b = bytes();
    return hex_encode(b);
}

unsigned Word::bit_length() const {
    for (int i = 3; i >= 0; --i)
        if (limb[i] != 0) return static_cast<unsigned>(i) * 64 + (64 - std::countl_zero(limb[i]));
    return 0;
}

std::strong_ordering Word::operator<=>(const Word& o) const {
    for (int i = 3; i >= 0; --i)
        if (limb[i] != o.limb[i]) return limb[i] <=> o.limb[i];
    return std::strong_ordering::equal;
}

Word add(const Word& a, const Word& b) {
    Word r;
    unsigned __int128 carry = 0;
    for (int i = 0; i < 4; ++i) {
        carry += static_cast<unsigned __int128>(a.limb[i]) + b.limb[i];
        r.limb[i] = static_cast<uint64_t>(carry);
        carry >>= 64;
    }
    return r;
}

Word sub(const Word& a, const Word& b) {
    Word r;
    unsigned __int128 borrow = 0;
    for (int i = 0; i < 4; ++i) {
        const unsigned __int128 d =
            static_cast<unsigned __int128>(a.limb[i]) - b.limb[i] - borrow;
        r.limb[i] = static_cast<uint64_t>(d);
        borrow = (d >> 64) ? 1 : 0;
    }
    return r;
}

Word mul(const Word& a, const Word& b) {
    Word r;
    for (int i = 0; i < 4; ++i) {
        unsigned __int128 carry = 0;
        for (int j = 0; i + j < 4; ++j) {
            carry += static_cast<unsigned __int128>(a.limb[i]) * b.limb[j] + r.limb[i + j];
            r.limb[i + j] = static_cast<uint64_t>(carry);
            carry >>= 64;
        }
    }
    return r;
}

namespace {

// Shift-subtract long division; fine for analysis-time constant folding.
void divmod(const Word& a, const Word& b, Word& q, Word& r) {
    q = Word{};
    r = Word{};
    if (b.is_zero()) return;  // EVM: x / 0 == 0, x % 0 == 0
    const unsigned n = a.bit_length();
    for (int bit = static_cast<int>(n) - 1; bit >= 0; --bit) {
        r = shl(Word{1}, r);
        if ((a.limb[bit / 64] >> (bit % 64)) & 1) r.limb[0] |= 1;
        if (r >= b) {
            r = sub(r, b);
            q.limb[static_cast<size_t>(bit) / 64] |= uint64_t{1} << (bit % 64);
        }
    }
}

}  // namespace

Word udiv(const Word& a, const Word& b) {
    Word q, r;
    divmod(a, b, q, r);
    return q;
}

Word umod(const Word& a, const Word& b) {
    Word q, r;
    divmod(a, b, q, r);
    return r;
}

Word exp(const Word& base, const Word& e) {
    Word result{1};
    Word acc = base;
    for (unsigned bit = 0; bit < e.bit_length(); ++bit) {
        if ((e.limb[bit / 64] >> (bit % 64)) & 1) result = mul(result, acc);
        acc = mul(acc, acc);
    }
    return result;
}

Word bit_and(const Word& a, const Word& b) {
    Word r;
    for (int i = 0; i < 4; ++i) r.limb[i] = a.limb[i] & b.limb[i];
    return r;
}

Word bit_or(const Word& a, const Word& b) {
    Word r;
    for (int i = 0; i < 4; ++i) r.limb[i] = a.limb[i] | b.limb[i];
    return r;
}

Word bit_xor(const Word& a, const Word& b) {
    Word r;
    for (int i = 0; i < 4; ++i) r.limb[i] = a.limb[i] ^ b.limb[i];
    return r;
}

Word bit_not(const Word& a) {
    Word r;
    for (int i = 0; i < 4; ++i) r.limb[i] = ~a.limb[i];
    return r;
}

Word shl(const Word& shift, const Word& v) {
    if (!shift.fits_u64() || shift.low_u64() >= 256) return Word{};
    const unsigned s = static_cast<unsigned>(shift.low_u64());
    const unsigned limbs = s / 64, bits = s % 64;
    Word r;
    for (int i = 3; i >= 0; --i) {
        uint64_t v0 = (static_cast<unsigned>(i) >= limbs) ? v.limb[i - limbs] : 0;
        uint64_t v1 = (static_cast<unsigned>(i) >= limbs + 1) ? v.limb[i - limbs - 1] : 0;
        r.limb[i] = bits == 0 ? v0 : (v0 << bits) | (v1 >> (64 - bits));
    }
    return r;
}

Word shr(const Word& shift, const Word& v) {
    if (!shift.fits_u64() || shift.low_u64() >= 256) return Word{};
    const unsigned s = static_cast<unsigned>(shift.low_u64());
    const unsigned limbs = s / 64, bits = s % 64;
    Word r;
    for (unsigned i = 0; i < 4; ++i) {
        uint64_t v0 = (i + limbs < 4) ? v.limb[i + limbs] : 0;
        uint64_t v1 = (i + limbs + 1 < 4) ? v.limb[i + limbs + 1] : 0;
        r.limb[i] = bits == 0 ? v0 : (v0 >> bits) | (v1 << (64 - bits));
    }
    return r;
}

Word byte_at(const Word& index, const Word& v) {
    if (!index.fits_u64() || index.low_u64() >= 32) return Word{};
    return Word{v.bytes()[index.low_u64()]};
}

std::optional<Address> Address::from_hex(std::string_view hex) {
    try {
        const auto bytes = hex_decode(hex);
        if (bytes.size() != 20) return std::nullopt;
        Address a;
        std::copy(bytes.begin(), bytes.end(), a.bytes.begin());
        return a;
    } catch (const Error&) {
        return std::nullopt;
    }
}

Address Address::from_word(const Word& w) {
    const auto b = w.bytes();
    Address a;
    std::copy(b.begin() + 12, b.end(), a.bytes.begin());
    return a;
}

std::string Address::hex() const {
    return hex_encode(bytes);
}

Word Address::to_word() const {
    return Word::from_bytes(bytes);
}

bool Address::is_zero() const {
    for (const uint8_t b : bytes)
        if (b != 0) return false;
    return true;
}

}  // namespace evmtaint
