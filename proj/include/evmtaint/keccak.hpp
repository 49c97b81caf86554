// evmtaint: static taint analysis for EVM bytecode
// Copyright 2026 The evmtaint Authors.
// Licensed under the Apache License, Version 2.0.
#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>

namespace evmtaint {

/// Keccak-256 (the original Keccak padding, 0x01, as used by the EVM —
/// not NIST SHA3-256).
std::array<uint8_t, 32> keccak256(std::span<const uint8_t> data);
std::array<uint8_t, 32> keccak256(std::string_view data);

}  // namespace evmtaint
