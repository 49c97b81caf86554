// evmtaint: static taint analysis for EVM bytecode
// Copyright 2026 The evmtaint Authors.
// Licensed under the Apache License, Version 2.0.
#pragma once

#include <optional>
#include <span>

#include "evmtaint/opcode.hpp"
#include "evmtaint/word.hpp"

namespace evmtaint {

/// Evaluates a pure arithmetic/bitwise opcode over constant inputs, in stack
/// order (in[0] is the top operand). Returns nullopt for opcodes that are not
/// compile-time evaluable here. PC is handled by callers (it needs the
/// instruction offset, not operands).
std::optional<Word> fold_constant(Opcode op, std::span<const Word> in);

}  // namespace evmtaint
