// evmtaint: static taint analysis for EVM bytecode
// Copyright 2026 The evmtaint Authors.
// Licensed under the Apache License, Version 2.0.
#pragma once

#include <stdexcept>
#include <string>

namespace evmtaint {

/// Single exception type for all analysis-level failures (malformed input,
/// misuse of a relation, provider errors). Callers that need to distinguish
/// cases do so at the boundary where the case arises, not by type.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace evmtaint
