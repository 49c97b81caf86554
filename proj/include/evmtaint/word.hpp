// evmtaint: static taint analysis for EVM bytecode
// Copyright 2026 The evmtaint Authors.
// Licensed under the Apache License, Version 2.0.
#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace evmtaint {

/// 256-bit EVM word. Limbs are little-endian uint64s; all arithmetic is
/// modulo 2^256, matching EVM semantics.
struct Word {
    std::array<uint64_t, 4> limb{};

    constexpr Word() = default;
    constexpr explicit Word(uint64_t v) : limb{v, 0, 0, 0} {}

    static Word from_bytes(std::span<const uint8_t> be);  // big-endian, <= 32 bytes
    static std::optional<Word> from_hex(std::string_view hex);

    std::array<uint8_t, 32> bytes() const;  // big-endian
    std::string hex() const;                // 0x + 64 lowercase digits

    bool is_zero() const { return (limb[0] | limb[1] | limb[2] | limb[3]) == 0; }
    bool fits_u64() const { return (limb[1] | limb[2] | limb[3]) == 0; }
    uint64_t low_u64() const { return limb[0]; }
    unsigned bit_length() const;

    friend bool operator==(const Word&, const Word&) = default;
    std::strong_ordering operator<=>(const Word& o) const;
};

Word add(const Word& a, const Word& b);
Word sub(const Word& a, const Word& b);
Word mul(const Word& a, const Word& b);
Word udiv(const Word& a, const Word& b);  // division by zero yields zero, as in the EVM
Word umod(const Word& a, const Word& b);
Word exp(const Word& base, const Word& e);
Word bit_and(const Word& a, const Word& b);
Word bit_or(const Word& a, const Word& b);
Word bit_xor(const Word& a, const Word& b);
Word bit_not(const Word& a);
Word shl(const Word& shift, const Word& v);
Word shr(const Word& shift, const Word& v);
Word byte_at(const Word& index, const Word& v);  // EVM BYTE: index 0 is the most significant

/// 20-byte account address.
struct Address {
    std::array<uint8_t, 20> bytes{};

    static std::optional<Address> from_hex(std::string_view hex);
    static Address from_word(const Word& w);  // low 20 bytes

    std::string hex() const;  // 0x + 40 lowercase digits
    Word to_word() const;
    bool is_zero() const;

    friend bool operator==(const Address&, const Address&) = default;
    auto operator<=>(const Address&) const = default;
};

}  // namespace evmtaint
