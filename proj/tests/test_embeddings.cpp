#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "svdd/embeddings.hpp"
#include "svdd/errors.hpp"
#include "test_util.hpp"

using namespace svdd;
using nlohmann::json;

namespace {

double norm(const Vec& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

std::size_t nonzero_count(const Vec& v) {
    std::size_t n = 0;
    for (double x : v) {
        if (x != 0.0) ++n;
    }
    return n;
}

std::vector<DatasetRecord> text_records(const std::vector<std::string>& texts) {
    std::vector<DatasetRecord> records;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        records.push_back({std::to_string(i), texts[i], 0});
    }
    return records;
}

}  // namespace

TEST_CASE("hashing embeds one token as a single unit coordinate") {
    Vec v = hash_embed_text("hello", 512, 0);
    CHECK(v.size() == 512);
    CHECK(nonzero_count(v) == 1);
    CHECK(norm(v) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("hashing is deterministic and seed-sensitive") {
    Vec a = hash_embed_text("the quick brown fox", 64, 5);
    Vec b = hash_embed_text("the quick brown fox", 64, 5);
    CHECK(a == b);
    Vec c = hash_embed_text("the quick brown fox", 64, 6);
    CHECK(a != c);
}

TEST_CASE("hashing tokenization lowercases and splits on non-alphanumerics") {
    const std::size_t dim = 128;
    CHECK(hash_embed_text("Cat DOG", dim, 1) == hash_embed_text("cat dog", dim, 1));
    CHECK(hash_embed_text("cat,dog", dim, 1) == hash_embed_text("cat dog", dim, 1));
    CHECK(hash_embed_text("dog cat", dim, 1) == hash_embed_text("cat dog", dim, 1));
    CHECK(hash_embed_text("abc123", dim, 1) != hash_embed_text("abc 123", dim, 1));
}

TEST_CASE("hashing maps token-free text to the zero vector") {
    Vec v = hash_embed_text("!!! ??? ---", 32, 0);
    CHECK(nonzero_count(v) == 0);
    CHECK(v.size() == 32);
}

TEST_CASE("hashing output is unit length for nonempty text") {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        Vec v = hash_embed_text("some words repeat some words", 16, seed);
        CHECK(norm(v) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("hashing rejects dimensions below two") {
    CHECK_THROWS_AS(hash_embed_text("x", 1, 0), ContractError);
    CHECK_THROWS_AS(hash_embed_text("x", 0, 0), ContractError);
}

TEST_CASE("hashing provider embeds records in order") {
    EmbeddingProviderConfig config;
    config.kind = EmbeddingProviderConfig::Kind::hashing;
    config.dim = 48;
    config.hash_seed = 9;
    auto records = text_records({"alpha beta", "gamma", "alpha beta"});
    auto vecs = embed(config, records);
    REQUIRE(vecs.size() == 3);
    CHECK(vecs[0] == hash_embed_text("alpha beta", 48, 9));
    CHECK(vecs[1] == hash_embed_text("gamma", 48, 9));
    CHECK(vecs[0] == vecs[2]);
}

TEST_CASE("precomputed vectors align with record order") {
    TempDir dir;
    const std::string path = dir.file("vectors.jsonl");
    write_file(path,
               "{\"id\": \"a\", \"vector\": [1.0, 2.0]}\n"
               "{\"id\": \"b\", \"vector\": [3.5, -1.25]}\n"
               "{\"id\": \"c\", \"vector\": [0.0, 4.0]}\n");
    EmbeddingProviderConfig config;
    config.kind = EmbeddingProviderConfig::Kind::precomputed;
    config.dim = 2;
    config.file_path = path;

    std::vector<DatasetRecord> records = {{"c", "t1", 0}, {"a", "t2", 1}};
    auto vecs = embed(config, records);
    REQUIRE(vecs.size() == 2);
    CHECK(vecs[0] == Vec{0.0, 4.0});
    CHECK(vecs[1] == Vec{1.0, 2.0});
}

TEST_CASE("precomputed lookup failures carry useful diagnostics") {
    TempDir dir;
    const std::string path = dir.file("vectors.jsonl");
    EmbeddingProviderConfig config;
    config.kind = EmbeddingProviderConfig::Kind::precomputed;
    config.dim = 2;
    config.file_path = path;

    write_file(path, "{\"id\": \"a\", \"vector\": [1.0, 2.0]}\n");
    std::vector<DatasetRecord> records = {{"a", "", 0}, {"ghost", "", 0}};
    expect_throw_containing<DataError>([&] { embed_precomputed(config, records); }, {"ghost"});

    write_file(path, "{\"id\": \"a\", \"vector\": [1.0, 2.0, 3.0]}\n");
    records = {{"a", "", 0}};
    expect_throw_containing<DataError>([&] { embed_precomputed(config, records); },
                                       {"a", "2", "3"});

    write_file(path, "{\"id\": \"a\", \"vector\": [1.0, 2.0]}\nnot json\n");
    expect_throw_containing<DataError>([&] { embed_precomputed(config, records); }, {"line 2"});

    // Empty record list never touches the file.
    config.file_path = dir.file("missing.jsonl");
    CHECK(embed_precomputed(config, {}).empty());
}

// --- remote provider, exercised against an in-process server ---

namespace {

struct LocalServer {
    httplib::Server server;
    std::thread thread;
    int port = 0;

    explicit LocalServer(httplib::Server::Handler handler) {
        server.Post("/embed", std::move(handler));
        port = server.bind_to_any_port("127.0.0.1");
        REQUIRE(port > 0);
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }
    ~LocalServer() {
        server.stop();
        thread.join();
    }
    std::string url() const { return "http://127.0.0.1:" + std::to_string(port); }
};

EmbeddingProviderConfig remote_config(const LocalServer& server, std::size_t dim,
                                      std::size_t batch_size) {
    EmbeddingProviderConfig config;
    config.kind = EmbeddingProviderConfig::Kind::remote;
    config.dim = dim;
    config.base_url = server.url();
    config.batch_size = batch_size;
    config.timeout_seconds = 5.0;
    config.retries = 3;
    config.backoff_ms = 1;
    return config;
}

}  // namespace

TEST_CASE("remote provider batches requests and preserves order") {
    std::mutex mu;
    std::vector<std::size_t> batch_sizes;
    LocalServer server([&](const httplib::Request& req, httplib::Response& res) {
        json body = json::parse(req.body);
        const auto& texts = body.at("texts");
        {
            std::lock_guard<std::mutex> lock(mu);
            batch_sizes.push_back(texts.size());
        }
        json out;
        out["embeddings"] = json::array();
        for (const auto& t : texts) {
            const std::string s = t.get<std::string>();
            out["embeddings"].push_back({static_cast<double>(s.size()), 7.0});
        }
        res.set_content(out.dump(), "application/json");
    });

    auto records = text_records({"a", "bb", "ccc", "dddd", "eeeee"});
    auto vecs = embed_remote(remote_config(server, 2, 2), records);
    REQUIRE(vecs.size() == 5);
    CHECK(vecs[0] == Vec{1.0, 7.0});
    CHECK(vecs[2] == Vec{3.0, 7.0});
    CHECK(vecs[4] == Vec{5.0, 7.0});
    CHECK(batch_sizes == std::vector<std::size_t>{2, 2, 1});
}

TEST_CASE("remote provider retries transient failures") {
    std::atomic<int> calls{0};
    LocalServer server([&](const httplib::Request& req, httplib::Response& res) {
        const int n = ++calls;
        if (n <= 2) {
            res.status = 503;
            return;
        }
        json body = json::parse(req.body);
        json out;
        out["embeddings"] = json::array();
        for (std::size_t i = 0; i < body.at("texts").size(); ++i) {
            out["embeddings"].push_back({1.0, 2.0, 3.0});
        }
        res.set_content(out.dump(), "application/json");
    });

    auto records = text_records({"x", "y"});
    auto vecs = embed_remote(remote_config(server, 3, 8), records);
    REQUIRE(vecs.size() == 2);
    CHECK(vecs[1] == Vec{1.0, 2.0, 3.0});
    CHECK(calls.load() == 3);
}

TEST_CASE("remote provider raises TransportError after retries are exhausted") {
    std::atomic<int> calls{0};
    LocalServer server([&](const httplib::Request&, httplib::Response& res) {
        ++calls;
        res.status = 500;
    });

    auto records = text_records({"x"});
    auto config = remote_config(server, 2, 8);
    config.retries = 2;  // one initial attempt plus two retries
    expect_throw_containing<TransportError>([&] { embed_remote(config, records); },
                                            {"3 attempt", "500"});
    CHECK(calls.load() == 3);
}

TEST_CASE("remote provider raises ProtocolError for malformed replies") {
    SUBCASE("wrong number of vectors") {
        LocalServer server([](const httplib::Request&, httplib::Response& res) {
            res.set_content("{\"embeddings\": [[1.0, 2.0]]}", "application/json");
        });
        auto records = text_records({"x", "y"});
        CHECK_THROWS_AS(embed_remote(remote_config(server, 2, 8), records), ProtocolError);
    }
    SUBCASE("wrong vector length") {
        LocalServer server([](const httplib::Request&, httplib::Response& res) {
            res.set_content("{\"embeddings\": [[1.0, 2.0, 3.0]]}", "application/json");
        });
        auto records = text_records({"x"});
        CHECK_THROWS_AS(embed_remote(remote_config(server, 2, 8), records), ProtocolError);
    }
    SUBCASE("reply is not json") {
        LocalServer server([](const httplib::Request&, httplib::Response& res) {
            res.set_content("oops", "text/plain");
        });
        auto records = text_records({"x"});
        CHECK_THROWS_AS(embed_remote(remote_config(server, 2, 8), records), ProtocolError);
    }
    SUBCASE("missing embeddings key") {
        LocalServer server([](const httplib::Request&, httplib::Response& res) {
            res.set_content("{\"vectors\": []}", "application/json");
        });
        auto records = text_records({"x"});
        CHECK_THROWS_AS(embed_remote(remote_config(server, 2, 8), records), ProtocolError);
    }
}

TEST_CASE("remote provider reports unreachable hosts as TransportError") {
    EmbeddingProviderConfig config;
    config.kind = EmbeddingProviderConfig::Kind::remote;
    config.dim = 2;
    config.base_url = "http://127.0.0.1:1";  // nothing listens here
    config.batch_size = 4;
    config.timeout_seconds = 1.0;
    config.retries = 2;
    config.backoff_ms = 1;
    auto records = text_records({"x"});
    CHECK_THROWS_AS(embed_remote(config, records), TransportError);
}
