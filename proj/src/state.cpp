// evmtaint: static taint analysis for EVM bytecode
// Copyright 2026 The evmtaint Authors.
// Licensed under the Apache License, Version 2.0.
#include "evmtaint/state.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>
#include <tuple>
#include <utility>

#include "evmtaint/error.hpp"
#include "evmtaint/hex.hpp"
#include "httplib.h"
#include "json.hpp"

namespace evmtaint {

namespace fs = std::filesystem;
using nlohmann::json;

Word word_from_hex_loose(std::string_view hex) {
    std::string_view digits = hex;
    if (digits.size() >= 2 && digits[0] == '0' && (digits[1] == 'x' || digits[1] == 'X')) {
        digits.remove_prefix(2);
    }
    std::string padded;
    if (digits.size() % 2 != 0) {
        padded.reserve(digits.size() + 1);
        padded.push_back('0');
        padded.append(digits);
        digits = padded;
    }
    const auto bytes = hex_decode(digits);
    if (bytes.size() > 32) {
        throw Error("hex word wider than 32 bytes: " + std::string(hex));
    }
    return Word::from_bytes(bytes);
}

std::string hex_quantity(uint64_t v) {
    char buf[2 + 16 + 1];
    std::snprintf(buf, sizeof(buf), "0x%llx", static_cast<unsigned long long>(v));
    return buf;
}

namespace {

// ---------------------------------------------------------------------------
// Fixture-backed provider
// ---------------------------------------------------------------------------

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string strip_whitespace(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        if (c != ' ' && c != '\t' && c != '\n' && c != '\r') out.push_back(c);
    }
    return out;
}

class FixtureProvider final : public StateProvider {
public:
    explicit FixtureProvider(std::string directory) : dir_(std::move(directory)) {
        std::error_code ec;
        if (!fs::is_directory(dir_, ec)) {
            throw Error("fixture directory not found: " + dir_.string());
        }
    }

    Bytecode get_code(const Address& address, uint64_t) override {
        const fs::path file = dir_ / address.hex() / "code.hex";
        std::error_code ec;
        if (!fs::exists(file, ec)) return Bytecode{{}, Bytecode::Source::Fixture};
        const std::string text = strip_whitespace(read_text_file(file));
        try {
            return Bytecode::from_hex(text, Bytecode::Source::Fixture);
        } catch (const Error& e) {
            throw Error("malformed fixture " + file.string() + ": " + e.what());
        }
    }

    Word get_storage(const Address& address, const Word& slot, uint64_t) override {
        const fs::path file = dir_ / address.hex() / "storage.json";
        std::error_code ec;
        if (!fs::exists(file, ec)) return Word{};
        const json doc = json::parse(read_text_file(file), nullptr, false);
        if (doc.is_discarded() || !doc.is_object()) {
            throw Error("malformed fixture " + file.string() + ": not a JSON object");
        }
        for (const auto& [key, value] : doc.items()) {
            if (!value.is_string()) {
                throw Error("malformed fixture " + file.string() + ": value for " + key +
                            " is not a hex string");
            }
            if (word_from_hex_loose(key) == slot) {
                return word_from_hex_loose(value.get<std::string>());
            }
        }
        return Word{};
    }

private:
    fs::path dir_;
};

// ---------------------------------------------------------------------------
// JSON-RPC provider
// ---------------------------------------------------------------------------

struct Endpoint {
    std::string scheme_host_port;  // httplib client target, e.g. "http://h:1234"
    std::string path;              // request path, "/" when the URL has none
};

Endpoint split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw Error("endpoint URL must start with http:// or https://: " + url);
    }
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

constexpr int kAttempts = 3;
constexpr std::chrono::milliseconds kInitialBackoff{250};

class RpcProvider final : public StateProvider {
public:
    RpcProvider(const std::string& url, std::optional<uint64_t> chain_id)
        : endpoint_(split_url(url)), chain_id_(chain_id) {}

    Bytecode get_code(const Address& address, uint64_t block) override {
        const json result = call("eth_getCode", json::array({address.hex(), hex_quantity(block)}));
        try {
            return Bytecode::from_hex(result.get<std::string>(), Bytecode::Source::Rpc);
        } catch (const Error& e) {
            throw Error(describe("eth_getCode") + ": result is not hex bytecode: " + e.what());
        }
    }

    Word get_storage(const Address& address, const Word& slot, uint64_t block) override {
        const json result = call(
            "eth_getStorageAt", json::array({address.hex(), slot.hex(), hex_quantity(block)}));
        try {
            return word_from_hex_loose(result.get<std::string>());
        } catch (const Error& e) {
            throw Error(describe("eth_getStorageAt") + ": result is not a hex word: " + e.what());
        }
    }

private:
    std::string describe(const std::string& method) const {
        std::string s = "rpc " + method + " against " + endpoint_.scheme_host_port;
        if (chain_id_) s += " (chain " + std::to_string(*chain_id_) + ")";
        return s;
    }

    json call(const std::string& method, json params) {
        const json request = {
            {"jsonrpc", "2.0"},
            {"id", next_id_.fetch_add(1)},
            {"method", method},
            {"params", std::move(params)},
        };
        const std::string body = request.dump();

        std::string transport_failure;
        auto backoff = kInitialBackoff;
        for (int attempt = 1; attempt <= kAttempts; ++attempt) {
            if (attempt > 1) {
                std::this_thread::sleep_for(backoff);
                backoff *= 2;
            }
            // One client per request: httplib clients are not safe for
            // concurrent use, and providers must be shareable across threads.
            httplib::Client client(endpoint_.scheme_host_port);
            client.set_connection_timeout(std::chrono::seconds(10));
            client.set_read_timeout(std::chrono::seconds(30));
            auto res = client.Post(endpoint_.path, body, "application/json");
            if (!res) {
                transport_failure = httplib::to_string(res.error());
                continue;
            }
            if (res->status >= 500) {
                transport_failure = "HTTP " + std::to_string(res->status);
                continue;
            }
            if (res->status != 200) {
                throw Error(describe(method) + ": HTTP " + std::to_string(res->status));
            }
            const json doc = json::parse(res->body, nullptr, false);
            if (doc.is_discarded() || !doc.is_object()) {
                throw Error(describe(method) + ": response is not a JSON object");
            }
            if (doc.contains("error")) {
                throw Error(describe(method) + ": node returned error " + doc["error"].dump());
            }
            if (!doc.contains("result") || !doc["result"].is_string()) {
                throw Error(describe(method) + ": response has no string result");
            }
            return doc["result"];
        }
        throw Error(describe(method) + ": transport failed after " + std::to_string(kAttempts) +
                    " attempts: " + transport_failure);
    }

    Endpoint endpoint_;
    std::optional<uint64_t> chain_id_;
    std::atomic<uint64_t> next_id_{1};
};

// ---------------------------------------------------------------------------
// Memoizing wrapper
// ---------------------------------------------------------------------------

class CachingProvider final : public StateProvider {
public:
    explicit CachingProvider(std::shared_ptr<StateProvider> inner) : inner_(std::move(inner)) {
        if (!inner_) throw Error("caching provider needs an inner provider");
    }

    Bytecode get_code(const Address& address, uint64_t block) override {
        const auto key = std::make_pair(address, block);
        {
            std::lock_guard<std::mutex> lock(mu_);
            auto it = code_.find(key);
            if (it != code_.end()) return it->second;
        }
        // Fetch outside the lock so a slow endpoint does not serialize every
        // caller; a duplicate fetch of the same pure read is harmless.
        Bytecode fetched = inner_->get_code(address, block);
        std::lock_guard<std::mutex> lock(mu_);
        return code_.emplace(key, std::move(fetched)).first->second;
    }

    Word get_storage(const Address& address, const Word& slot, uint64_t block) override {
        const auto key = std::make_tuple(address, slot, block);
        {
            std::lock_guard<std::mutex> lock(mu_);
            auto it = storage_.find(key);
            if (it != storage_.end()) return it->second;
        }
        Word fetched = inner_->get_storage(address, slot, block);
        std::lock_guard<std::mutex> lock(mu_);
        return storage_.emplace(key, fetched).first->second;
    }

private:
    std::shared_ptr<StateProvider> inner_;
    std::mutex mu_;
    std::map<std::pair<Address, uint64_t>, Bytecode> code_;
    std::map<std::tuple<Address, Word, uint64_t>, Word> storage_;
};

}  // namespace

std::shared_ptr<StateProvider> fixture_provider(const std::string& directory) {
    return std::make_shared<FixtureProvider>(directory);
}

std::shared_ptr<StateProvider> rpc_provider(const std::string& endpoint_url,
                                            std::optional<uint64_t> chain_id) {
    return std::make_shared<RpcProvider>(endpoint_url, chain_id);
}

std::shared_ptr<StateProvider> caching(std::shared_ptr<StateProvider> inner) {
    return std::make_shared<CachingProvider>(std::move(inner));
}

}  // namespace evmtaint
