// evmtaint: static taint analysis for EVM bytecode
// Copyright 2026 The evmtaint Authors.
// Licensed under the Apache License, Version 2.0.
#pragma once

#include "evmtaint/datalog.hpp"

namespace testsupport {

// Naive fixpoint: every round re-joins every rule against the full relation
// contents until nothing new appears. Quadratic and oblivious to deltas by
// design; used as the reference model for the semi-naive engine.
evmtaint::datalog::FactBase naive_fixpoint(evmtaint::datalog::FactBase base,
                                           const std::vector<evmtaint::datalog::Rule>& rules);

}  // namespace testsupport
