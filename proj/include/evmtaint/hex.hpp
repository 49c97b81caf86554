// evmtaint: static taint analysis for EVM bytecode
// Copyright 2026 The evmtaint Authors.
// Licensed under the Apache License, Version 2.0.
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "evmtaint/error.hpp"

namespace evmtaint {

/// Decodes a hex string into bytes. Accepts an optional "0x" prefix and
/// mixed case; rejects odd-length input and non-hex digits.
std::vector<uint8_t> hex_decode(std::string_view hex);

/// Encodes bytes as lowercase hex with a "0x" prefix.
std::string hex_encode(std::span<const uint8_t> bytes);

/// Single hex digit value, or -1 if not a hex digit.
int hex_digit(char c) noexcept;

}  // namespace evmtaint
