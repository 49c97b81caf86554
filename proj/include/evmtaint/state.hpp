// evmtaint: static taint analysis for EVM bytecode
// Copyright 2026 The evmtaint Authors.
// Licensed under the Apache License, Version 2.0.
#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include "evmtaint/bytecode.hpp"
#include "evmtaint/word.hpp"

namespace evmtaint {

/// Read-only view of chain state at explicit block heights. Implementations
/// are safe to share across threads, and repeated identical queries at a
/// pinned block return identical results.
class StateProvider {
public:
    virtual ~StateProvider() = default;

    /// Deployed code of `address` at height `block`. Accounts without code
    /// (externally owned or nonexistent) yield empty bytecode.
    virtual Bytecode get_code(const Address& address, uint64_t block) = 0;

    /// One storage word of `address` at height `block`. Unset slots read as
    /// the zero word.
    virtual Word get_storage(const Address& address, const Word& slot, uint64_t block) = 0;
};

/// File-backed provider over a snapshot directory:
///   <dir>/<address>/code.hex      hex bytecode, optional 0x prefix
///   <dir>/<address>/storage.json  {"<slot hex>": "<word hex>", ...}
/// where <address> is the 0x-prefixed lowercase form. Missing files follow
/// chain semantics: no code file means empty code, no storage entry reads as
/// zero. The snapshot stands in for every block height, so `block` is not
/// consulted. Throws Error if `directory` is not a readable directory.
std::shared_ptr<StateProvider> fixture_provider(const std::string& directory);

/// JSON-RPC 2.0 provider issuing eth_getCode / eth_getStorageAt against an
/// HTTP(S) endpoint such as "http://127.0.0.1:8545" or a hosted URL with a
/// key path. Transport failures (connect/read errors, HTTP 5xx) are retried
/// up to 3 attempts with exponential backoff from 250 ms; a malformed body
/// or a JSON-RPC error object fails immediately. `chain_id` is carried into
/// diagnostics only; no request depends on it.
std::shared_ptr<StateProvider> rpc_provider(const std::string& endpoint_url,
                                            std::optional<uint64_t> chain_id = std::nullopt);

/// Memoizes `inner` by (address, block) for code and (address, slot, block)
/// for storage. Errors are never cached: a failed fetch leaves no entry, so
/// the next call retries `inner`. Concurrent lookups of one key may fetch
/// more than once; every caller still observes the same pure-read value.
std::shared_ptr<StateProvider> caching(std::shared_ptr<StateProvider> inner);

/// Parses a hex word, tolerating the unpadded quantity form ("0x0", "0x1b")
/// alongside full 32-byte data. Throws Error on non-hex input or overflow.
Word word_from_hex_loose(std::string_view hex);

/// Minimal-length hex quantity per Ethereum JSON-RPC conventions: "0x0",
/// "0x10d4f", no leading zeros.
std::string hex_quantity(uint64_t v);

}  // namespace evmtaint
