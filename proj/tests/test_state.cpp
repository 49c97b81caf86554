// evmtaint: static taint analysis for EVM bytecode
// Copyright 2026 The evmtaint Authors.
// Licensed under the Apache License, Version 2.0.
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "doctest.h"
#include "evmtaint/error.hpp"
#include "evmtaint/state.hpp"
#include "httplib.h"
#include "json.hpp"

using namespace evmtaint;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

Address addr_of(std::string_view hex) {
    return Address::from_hex(hex).value();  // test constant; throws on a typo
}

/// Scratch directory removed on scope exit.
struct TempDir {
    fs::path path;

    TempDir() {
        static std::atomic<uint64_t> counter{0};
        path = fs::temp_directory_path() /
               ("evmtaint_state_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter.fetch_add(1)));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

void write_file(const fs::path& p, const std::string& text) {
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    REQUIRE(out.good());
    out << text;
}

/// Deterministic in-memory provider for cache tests; counts inner calls.
class CountingProvider final : public StateProvider {
public:
    Bytecode get_code(const Address& address, uint64_t block) override {
        ++code_calls;
        // Distinct, reproducible bytes per (address, block).
        Bytecode bc;
        bc.bytes = {address.bytes[19], static_cast<uint8_t>(block & 0xff),
                    static_cast<uint8_t>(block >> 8)};
        return bc;
    }
    Word get_storage(const Address& address, const Word& slot, uint64_t block) override {
        ++storage_calls;
        return add(add(address.to_word(), slot), Word(block));
    }

    int code_calls = 0;
    int storage_calls = 0;
};

/// Fails the first `failures` calls, then behaves like CountingProvider.
class FlakyProvider final : public StateProvider {
public:
    explicit FlakyProvider(int failures) : failures_left(failures) {}

    Bytecode get_code(const Address& address, uint64_t block) override {
        if (failures_left > 0) {
            --failures_left;
            throw Error("injected code failure");
        }
        return inner.get_code(address, block);
    }
    Word get_storage(const Address& address, const Word& slot, uint64_t block) override {
        if (failures_left > 0) {
            --failures_left;
            throw Error("injected storage failure");
        }
        return inner.get_storage(address, slot, block);
    }

    int failures_left;
    CountingProvider inner;
};

/// In-process JSON-RPC node: serves eth_getCode / eth_getStorageAt from maps,
/// records every request body, and can fail the next N requests with a given
/// HTTP status or raw body.
class MockNode {
public:
    MockNode() {
        server_.Post("/", [this](const httplib::Request& req, httplib::Response& res) {
            handle(req, res);
        });
        server_.Post("/v1/key", [this](const httplib::Request& req, httplib::Response& res) {
            handle(req, res);
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        REQUIRE(port_ > 0);
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~MockNode() {
        server_.stop();
        thread_.join();
    }

    std::string url(const std::string& path = "") const {
        return "http://127.0.0.1:" + std::to_string(port_) + path;
    }

    void set_code(const Address& a, const std::string& hex) {
        std::lock_guard<std::mutex> lock(mu_);
        code_[a.hex()] = hex;
    }
    void set_storage(const Address& a, const Word& slot, const Word& value) {
        std::lock_guard<std::mutex> lock(mu_);
        storage_[a.hex() + ":" + slot.hex()] = value.hex();
    }
    void fail_next(int times, int status) {
        std::lock_guard<std::mutex> lock(mu_);
        failures_left_ = times;
        failure_status_ = status;
        failure_body_.reset();
    }
    void reply_next_with_body(const std::string& body) {
        std::lock_guard<std::mutex> lock(mu_);
        failures_left_ = 1;
        failure_status_ = 200;
        failure_body_ = body;
    }

    std::vector<json> requests() const {
        std::lock_guard<std::mutex> lock(mu_);
        return requests_;
    }
    size_t request_count() const {
        std::lock_guard<std::mutex> lock(mu_);
        return requests_.size();
    }

private:
    void handle(const httplib::Request& req, httplib::Response& res) {
        std::lock_guard<std::mutex> lock(mu_);
        requests_.push_back(json::parse(req.body, nullptr, false));
        if (failures_left_ > 0) {
            --failures_left_;
            if (failure_body_) {
                res.set_content(*failure_body_, "application/json");
            } else {
                res.status = failure_status_;
                res.set_content("upstream unhappy", "text/plain");
            }
            return;
        }
        const json& rpc = requests_.back();
        json reply = {{"jsonrpc", "2.0"}, {"id", rpc.value("id", 0)}};
        const std::string method = rpc.value("method", "");
        if (method == "eth_getCode") {
            const std::string key = rpc["params"][0].get<std::string>();
            auto it = code_.find(key);
            reply["result"] = it == code_.end() ? "0x" : it->second;
        } else if (method == "eth_getStorageAt") {
            const std::string key = rpc["params"][0].get<std::string>() + ":" +
                                    rpc["params"][1].get<std::string>();
            auto it = storage_.find(key);
            reply["result"] = it == storage_.end() ? Word{}.hex() : it->second;
        } else {
            reply["error"] = {{"code", -32601}, {"message", "method not found"}};
        }
        res.set_content(reply.dump(), "application/json");
    }

    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    mutable std::mutex mu_;
    std::map<std::string, std::string> code_;
    std::map<std::string, std::string> storage_;
    std::vector<json> requests_;
    int failures_left_ = 0;
    int failure_status_ = 500;
    std::optional<std::string> failure_body_;
};

const Address kAlice = addr_of("0x00000000000000000000000000000000000000aa");
const Address kBob = addr_of("0x000000000000000000000000000000000000b0b0");

}  // namespace

TEST_CASE("hex quantity uses minimal digits") {
    CHECK(hex_quantity(0) == "0x0");
    CHECK(hex_quantity(1) == "0x1");
    CHECK(hex_quantity(0x10d4f) == "0x10d4f");
    CHECK(hex_quantity(UINT64_MAX) == "0xffffffffffffffff");
}

TEST_CASE("loose hex word accepts both quantity and data forms") {
    CHECK(word_from_hex_loose("0x0") == Word(0));
    CHECK(word_from_hex_loose("0x1b") == Word(27));
    CHECK(word_from_hex_loose("0xabc") == Word(0xabc));
    CHECK(word_from_hex_loose("abc") == Word(0xabc));
    CHECK(word_from_hex_loose(Word(0xdeadbeef).hex()) == Word(0xdeadbeef));
    CHECK_THROWS_AS(word_from_hex_loose("0xzz"), Error);
    CHECK_THROWS_AS(word_from_hex_loose("0x" + std::string(66, '1')), Error);
}

TEST_CASE("fixture provider serves code files verbatim") {
    TempDir dir;
    write_file(dir.path / kAlice.hex() / "code.hex", "0x6001600255\n");
    auto provider = fixture_provider(dir.path.string());

    const Bytecode code = provider->get_code(kAlice, 1);
    CHECK(code.bytes == std::vector<uint8_t>{0x60, 0x01, 0x60, 0x02, 0x55});
    CHECK(code.source == Bytecode::Source::Fixture);

    SUBCASE("prefix-free hex with surrounding whitespace also decodes") {
        write_file(dir.path / kBob.hex() / "code.hex", "  6001\n600255  ");
        CHECK(provider->get_code(kBob, 1).bytes ==
              std::vector<uint8_t>{0x60, 0x01, 0x60, 0x02, 0x55});
    }
    SUBCASE("block height does not change a snapshot read") {
        CHECK(provider->get_code(kAlice, 1).hex() == provider->get_code(kAlice, 999999).hex());
    }
}

TEST_CASE("fixture provider follows chain semantics for missing data") {
    TempDir dir;
    write_file(dir.path / kAlice.hex() / "storage.json",
               std::string("{\"") + Word(0).hex() + "\": \"" + kBob.to_word().hex() + "\"}");
    auto provider = fixture_provider(dir.path.string());

    SUBCASE("address without a code file reads as empty bytecode") {
        CHECK(provider->get_code(kAlice, 1).empty());
        CHECK(provider->get_code(kBob, 1).empty());
    }
    SUBCASE("declared slot yields the stored word") {
        const Word got = provider->get_storage(kAlice, Word(0), 1);
        CHECK(Address::from_word(got) == kBob);
        CHECK(got == kBob.to_word());
    }
    SUBCASE("undeclared slot reads as zero") {
        CHECK(provider->get_storage(kAlice, Word(7), 1).is_zero());
    }
    SUBCASE("address without a storage file reads any slot as zero") {
        CHECK(provider->get_storage(kBob, Word(0), 1).is_zero());
    }
}

TEST_CASE("fixture provider accepts unpadded storage keys and values") {
    TempDir dir;
    write_file(dir.path / kAlice.hex() / "storage.json", "{\"0x1\": \"0xff\"}");
    auto provider = fixture_provider(dir.path.string());
    CHECK(provider->get_storage(kAlice, Word(1), 1) == Word(0xff));
    CHECK(provider->get_storage(kAlice, Word(0x100), 1).is_zero());
}

TEST_CASE("fixture provider rejects a missing directory at startup") {
    CHECK_THROWS_AS(fixture_provider("/nonexistent/evmtaint/fixture/dir"), Error);
}

TEST_CASE("fixture provider reports malformed files instead of guessing") {
    TempDir dir;
    write_file(dir.path / kAlice.hex() / "storage.json", "[1, 2, 3]");
    write_file(dir.path / kBob.hex() / "code.hex", "0x60xx");
    auto provider = fixture_provider(dir.path.string());
    CHECK_THROWS_AS(provider->get_storage(kAlice, Word(0), 1), Error);
    CHECK_THROWS_AS(provider->get_code(kBob, 1), Error);
}

TEST_CASE("rpc provider mirrors fixture bytes through a local node") {
    // Author one contract, serve it both from disk and over HTTP; the two
    // providers must agree byte for byte.
    const std::string code_hex = "0x60806040526004361061001e5760003560e01c";
    TempDir dir;
    write_file(dir.path / kAlice.hex() / "code.hex", code_hex);

    MockNode node;
    node.set_code(kAlice, code_hex);
    auto from_disk = fixture_provider(dir.path.string());
    auto from_rpc = rpc_provider(node.url());

    CHECK(from_rpc->get_code(kAlice, 0x10d4f).hex() == from_disk->get_code(kAlice, 0x10d4f).hex());
    CHECK(from_rpc->get_code(kAlice, 0x10d4f).source == Bytecode::Source::Rpc);
}

TEST_CASE("rpc provider speaks json-rpc 2.0 with ethereum hex conventions") {
    MockNode node;
    node.set_storage(kAlice, Word(2), Word(0x1234));
    auto provider = rpc_provider(node.url(), 1);

    CHECK(provider->get_storage(kAlice, Word(2), 0x10d4f) == Word(0x1234));
    CHECK(provider->get_code(kBob, 7).empty());          // EOA: empty result
    CHECK(provider->get_storage(kBob, Word(0), 7).is_zero());  // unset slot

    const auto reqs = node.requests();
    REQUIRE(reqs.size() == 3);
    CHECK(reqs[0]["jsonrpc"] == "2.0");
    CHECK(reqs[0]["method"] == "eth_getStorageAt");
    CHECK(reqs[0]["params"][0] == kAlice.hex());
    CHECK(reqs[0]["params"][1] == Word(2).hex());  // 32-byte data form
    CHECK(reqs[0]["params"][2] == "0x10d4f");      // minimal quantity form
    CHECK(reqs[1]["method"] == "eth_getCode");
    CHECK(reqs[1]["params"][0] == kBob.hex());
    CHECK(reqs[1]["params"][1] == "0x7");
    CHECK(reqs[0]["id"] != reqs[1]["id"]);  // ids distinguish in-flight calls
}

TEST_CASE("rpc provider reaches endpoints that carry a key path") {
    MockNode node;
    node.set_code(kAlice, "0x6001");
    auto provider = rpc_provider(node.url("/v1/key"));
    CHECK(provider->get_code(kAlice, 1).bytes == std::vector<uint8_t>{0x60, 0x01});
}

TEST_CASE("rpc provider retries transport failures then succeeds") {
    MockNode node;
    node.set_code(kAlice, "0x6001");
    node.fail_next(2, 503);
    auto provider = rpc_provider(node.url());

    CHECK(provider->get_code(kAlice, 1).bytes == std::vector<uint8_t>{0x60, 0x01});
    CHECK(node.request_count() == 3);  // two failures consumed, one success
}

TEST_CASE("rpc provider gives up after three transport attempts") {
    MockNode node;
    node.fail_next(100, 500);
    auto provider = rpc_provider(node.url());

    CHECK_THROWS_WITH_AS(provider->get_code(kAlice, 1),
                         doctest::Contains("after 3 attempts"), Error);
    CHECK(node.request_count() == 3);
}

TEST_CASE("rpc provider fails fast on non-transport errors") {
    MockNode node;
    auto provider = rpc_provider(node.url());

    SUBCASE("json-rpc error object") {
        node.reply_next_with_body(
            R"({"jsonrpc":"2.0","id":1,"error":{"code":-32000,"message":"header not found"}})");
        CHECK_THROWS_WITH_AS(provider->get_code(kAlice, 1),
                             doctest::Contains("header not found"), Error);
    }
    SUBCASE("body that is not json") {
        node.reply_next_with_body("<html>rate limited</html>");
        CHECK_THROWS_AS(provider->get_code(kAlice, 1), Error);
    }
    SUBCASE("result that is not a hex word") {
        node.reply_next_with_body(R"({"jsonrpc":"2.0","id":1,"result":"0xnothex"})");
        CHECK_THROWS_AS(provider->get_storage(kAlice, Word(0), 1), Error);
    }
    SUBCASE("http client error status") {
        node.fail_next(1, 404);
        CHECK_THROWS_AS(provider->get_code(kAlice, 1), Error);
    }
    CHECK(node.request_count() == 1);  // no retry in any of these cases
}

TEST_CASE("rpc provider surfaces unreachable endpoints as typed errors") {
    // Grab a port that is then closed again, so nothing listens there.
    int dead_port;
    {
        httplib::Server probe;
        dead_port = probe.bind_to_any_port("127.0.0.1");
    }
    auto provider = rpc_provider("http://127.0.0.1:" + std::to_string(dead_port));
    CHECK_THROWS_WITH_AS(provider->get_storage(kAlice, Word(0), 1),
                         doctest::Contains("after 3 attempts"), Error);
}

TEST_CASE("rpc provider rejects urls without a scheme") {
    CHECK_THROWS_AS(rpc_provider("127.0.0.1:8545"), Error);
}

TEST_CASE("caching provider deduplicates identical reads") {
    auto counter = std::make_shared<CountingProvider>();
    auto cached = caching(counter);

    const Bytecode first = cached->get_code(kAlice, 5);
    const Bytecode second = cached->get_code(kAlice, 5);
    CHECK(first.hex() == second.hex());
    CHECK(counter->code_calls == 1);

    cached->get_storage(kAlice, Word(1), 5);
    cached->get_storage(kAlice, Word(1), 5);
    CHECK(counter->storage_calls == 1);
}

TEST_CASE("caching provider keys on every query dimension") {
    auto counter = std::make_shared<CountingProvider>();
    auto cached = caching(counter);

    cached->get_code(kAlice, 5);
    cached->get_code(kAlice, 6);      // distinct block
    cached->get_code(kBob, 5);        // distinct address
    CHECK(counter->code_calls == 3);

    cached->get_storage(kAlice, Word(1), 5);
    cached->get_storage(kAlice, Word(2), 5);  // distinct slot
    cached->get_storage(kAlice, Word(1), 6);  // distinct block
    cached->get_storage(kBob, Word(1), 5);    // distinct address
    CHECK(counter->storage_calls == 4);
}

TEST_CASE("caching provider never caches errors") {
    auto flaky = std::make_shared<FlakyProvider>(1);
    auto cached = caching(flaky);

    CHECK_THROWS_AS(cached->get_storage(kAlice, Word(0), 1), Error);
    const Word got = cached->get_storage(kAlice, Word(0), 1);  // retried inner
    CHECK(got == flaky->inner.get_storage(kAlice, Word(0), 1));
    CHECK(flaky->inner.storage_calls == 2);  // one cached fill + oracle call above
    cached->get_storage(kAlice, Word(0), 1);
    CHECK(flaky->inner.storage_calls == 2);  // success was cached
}

TEST_CASE("caching is transparent for any query sequence") {
    auto plain = std::make_shared<CountingProvider>();
    auto cached = caching(std::make_shared<CountingProvider>());

    std::mt19937 rng(0xe7a1u);
    std::uniform_int_distribution<int> pick(0, 3);
    for (int i = 0; i < 500; ++i) {
        Address a = pick(rng) < 2 ? kAlice : kBob;
        const uint64_t block = static_cast<uint64_t>(pick(rng));
        if (pick(rng) == 0) {
            CHECK(cached->get_code(a, block).hex() == plain->get_code(a, block).hex());
        } else {
            const Word slot(static_cast<uint64_t>(pick(rng)));
            CHECK(cached->get_storage(a, slot, block) == plain->get_storage(a, slot, block));
        }
    }
}

TEST_CASE("providers answer concurrent readers consistently") {
    auto counter = std::make_shared<CountingProvider>();
    auto cached = caching(counter);
    const Word expect = counter->get_storage(kAlice, Word(3), 9);
    counter->storage_calls = 0;

    std::vector<std::thread> readers;
    std::atomic<int> mismatches{0};
    for (int t = 0; t < 8; ++t) {
        readers.emplace_back([&] {
            for (int i = 0; i < 200; ++i) {
                if (cached->get_storage(kAlice, Word(3), 9) != expect) ++mismatches;
            }
        });
    }
    for (auto& r : readers) r.join();
    CHECK(mismatches.load() == 0);
    // Duplicate fills are tolerated, but far fewer than one per read.
    CHECK(counter->storage_calls <= 8);
}
