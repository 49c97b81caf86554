// evmtaint: static taint analysis for EVM bytecode
// Copyright 2026 The evmtaint Authors.
// Licensed under the Apache License, Version 2.0.
#include "evmtaint/keccak.hpp"

#include <bit>
#include <cstring>

namespace evmtaint {

namespace {

constexpr uint64_t kRoundConstants[24] = {
    0x0000000000000001ULL, 0x0000000000008082ULL, 0x800000000000808aULL,
    0x8000000080008000ULL, 0x000000000000808bULL, 0x0000000080000001ULL,
    0x8000000080008081ULL, 0x8000000000008009ULL, 0x000000000000008aULL,
    0x0000000000000088ULL, 0x0000000080008009ULL, 0x000000008000000aULL,
    0x000000008000808bULL, 0x800000000000008bULL, 0x8000000000008089ULL,
    0x8000000000008003ULL, 0x8000000000008002ULL, 0x8000000000000080ULL,
    0x000000000000800aULL, 0x800000008000000aULL, 0x8000000080008081ULL,
    0x8000000000008080ULL, 0x0000000080000001ULL, 0x8000000080008008ULL};

// Rotation offsets for lane (x, y), indexed as x + 5*y.
constexpr unsigned kRotation[25] = {0,  1,  62, 28, 27,  //
                                    36, 44, 6,  55, 20,  //
                                    3,  10, 43, 25, 39,  //
                                    41, 45, 15, 21, 8,   //
                                    18, 2,  61, 56, 14};

void keccak_f1600(uint64_t a[25]) {
    for (int round = 0; round < 24; ++round) {
        // theta
        uint64_t c[5], d[5];
        for (int x = 0; x < 5; ++x)
            c[x] = a[x] ^ a[x + 5] ^ a[x + 10] ^ a[x + 15] ^ a[x + 20];
        for (int x = 0; x < 5; ++x) {
            d[x] = c[(x + 4) % 5] ^ std::rotl(c[(x + 1) % 5], 1);
            for (int y = 0; y < 5; ++y) a[x + 5 * y] ^= d[x];
        }
        // rho + pi
        uint64_t b[25];
        for (int x = 0; x < 5; ++x)
            for (int y = 0; y < 5; ++y)
                b[y + 5 * ((2 * x + 3 * y) % 5)] = std::rotl(a[x + 5 * y], kRotation[x + 5 * y]);
        // chi
        for (int x = 0; x < 5; ++x)
            for (int y = 0; y < 5; ++y)
                a[x + 5 * y] = b[x + 5 * y] ^ (~b[(x + 1) % 5 + 5 * y] & b[(x + 2) % 5 + 5 * y]);
        // iota
        a[0] ^= kRoundConstants[round];
    }
}

}  // namespace

std::array<uint8_t, 32> keccak256(std::span<const uint8_t> data) {
    constexpr size_t rate = 136;  // 1600/8 - 2*256/8
    uint64_t state[25] = {};

    // Absorb full blocks.
    while (data.size() >= rate) {
        for (size_t i = 0; i < rate / 8; ++i) {
            uint64_t lane;
            std::memcpy(&lane, data.data() + i * 8, 8);  // little-endian host assumed
            state[i] ^= lane;
        }
        keccak_f1600(state);
        data = data.subspan(rate);
    }

    // Final block with Keccak pad: 0x01 ... 0x80.
    uint8_t block[rate] = {};
    if (!data.empty()) std::memcpy(block, data.data(), data.size());
    block[data.size()] = 0x01;
    block[rate - 1] |= 0x80;
    for (size_t i = 0; i < rate / 8; ++i) {
        uint64_t lane;
        std::memcpy(&lane, block + i * 8, 8);
        state[i] ^= lane;
    }
    keccak_f1600(state);

    std::array<uint8_t, 32> digest;
    std::memcpy(digest.data(), state, 32);
    return digest;
}

std::array<uint8_t, 32> keccak256(std::string_view data) {
    return keccak256(std::span{reinterpret_cast<const uint8_t*>(data.data()), data.size()});
}

}  // namespace evmtaint
