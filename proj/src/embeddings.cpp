#include "svdd/embeddings.hpp"

#include <chrono>
#include <cmath>
#include <thread>
#include <unordered_map>

#include <httplib.h>
#include <json.hpp>

#include "svdd/errors.hpp"
#include "svdd/io.hpp"

namespace svdd {

namespace {

using Json = nlohmann::ordered_json;

std::uint64_t fnv1a64(const std::string& s, std::uint64_t seed) {
    std::uint64_t h = 14695981039346656037ULL ^ mix64(seed);
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

bool is_token_char(unsigned char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

}  // namespace

std::vector<Vec> embed_precomputed(const EmbeddingProviderConfig& config,
                                   const std::vector<DatasetRecord>& records) {
    if (records.empty()) return {};
    if (config.file_path.empty())
        throw ConfigError("precomputed embedder needs an embedding file path");

    std::unordered_map<std::string, Vec> table;
    const std::string text = read_text_file(config.file_path);
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        std::string line =
            text.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
        pos = (end == std::string::npos) ? text.size() : end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        Json row;
        try {
            row = Json::parse(line);
        } catch (const std::exception& e) {
            throw DataError(config.file_path + " line " + std::to_string(line_no) +
                            ": invalid JSON: " + e.what());
        }
        if (!row.is_object() || !row.contains("id") || !row["id"].is_string() ||
            !row.contains("vector") || !row["vector"].is_array())
            throw DataError(config.file_path + " line " + std::to_string(line_no) +
                            ": expected {\"id\": string, \"vector\": [numbers]}");
        Vec v;
        v.reserve(row["vector"].size());
        for (const auto& x : row["vector"]) {
            if (!x.is_number())
                throw DataError(config.file_path + " line " + std::to_string(line_no) +
                                ": vector entries must be numbers");
            v.push_back(x.get<double>());
        }
        if (v.size() != config.dim)
            throw DataError(config.file_path + " line " + std::to_string(line_no) +
                            ": embedding dim mismatch for id \"" + row["id"].get<std::string>() +
                            "\": expected " + std::to_string(config.dim) + ", got " +
                            std::to_string(v.size()));
        table[row["id"].get<std::string>()] = std::move(v);
    }

    std::vector<Vec> out;
    out.reserve(records.size());
    std::vector<std::string> missing;
    for (const DatasetRecord& r : records) {
        auto it = table.find(r.id);
        if (it == table.end()) {
            if (missing.size() < 10) missing.push_back(r.id);
            continue;
        }
        out.push_back(it->second);
    }
    if (out.size() != records.size()) {
        std::string msg = "embedding file " + config.file_path + " is missing " +
                          std::to_string(records.size() - out.size()) + " record id(s):";
        for (const std::string& id : missing) msg += " \"" + id + "\"";
        if (records.size() - out.size() > missing.size()) msg += " ...";
        throw DataError(msg);
    }
    return out;
}

Vec hash_embed_text(const std::string& text, std::size_t dim, std::uint64_t hash_seed) {
    if (dim < 2) throw ContractError("hashing embedder requires dim >= 2");
    Vec v(dim, 0.0);
    std::string token;
    bool any = false;
    auto flush = [&]() {
        if (token.empty()) return;
        std::uint64_t h = fnv1a64(token, hash_seed);
        std::size_t index = static_cast<std::size_t>(h % dim);
        double sign = (mix64(h ^ 0x517cc1b727220a95ULL) & 1ULL) ? 1.0 : -1.0;
        v[index] += sign;
        any = true;
        token.clear();
    };
    for (unsigned char c : text) {
        if (is_token_char(c)) {
            token.push_back(static_cast<char>(
                (c >= 'A' && c <= 'Z') ? c - 'A' + 'a' : c));
        } else {
            flush();
        }
    }
    flush();
    if (!any) return v;  // no tokens: zero vector, not normalized
    double norm2 = 0.0;
    for (double x : v) norm2 += x * x;
    if (norm2 > 0.0) {
        double inv = 1.0 / std::sqrt(norm2);
        for (double& x : v) x *= inv;
    }
    return v;
}

std::vector<Vec> embed_hashing(const EmbeddingProviderConfig& config,
                               const std::vector<DatasetRecord>& records) {
    if (config.token_pattern != "alnum")
        throw ConfigError("unsupported token_pattern \"" + config.token_pattern +
                          "\" (only \"alnum\" is available)");
    std::vector<Vec> out;
    out.reserve(records.size());
    for (const DatasetRecord& r : records)
        out.push_back(hash_embed_text(r.text, config.dim, config.hash_seed));
    return out;
}

std::vector<Vec> embed_remote(const EmbeddingProviderConfig& config,
                              const std::vector<DatasetRecord>& records) {
    if (records.empty()) return {};
    if (config.base_url.empty())
        throw ConfigError("remote embedder needs a base URL (flag, config, or "
                          "SVDD_CLEAN_EMBED_URL)");
    if (config.batch_size == 0) throw ConfigError("remote embedder batch size must be >= 1");

    httplib::Client client(config.base_url);
    const auto secs = static_cast<time_t>(config.timeout_seconds);
    const auto usecs =
        static_cast<time_t>((config.timeout_seconds - static_cast<double>(secs)) * 1e6);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);

    std::vector<Vec> out;
    out.reserve(records.size());
    for (std::size_t start = 0; start < records.size(); start += config.batch_size) {
        const std::size_t count = std::min(config.batch_size, records.size() - start);
        Json req;
        req["texts"] = Json::array();
        for (std::size_t i = 0; i < count; ++i)
            req["texts"].push_back(records[start + i].text);
        const std::string body = req.dump();

        httplib::Result res;
        std::string failure;
        for (std::size_t attempt = 0; attempt <= config.retries; ++attempt) {
            if (attempt > 0)
                std::this_thread::sleep_for(std::chrono::milliseconds(
                    config.backoff_ms << (attempt - 1)));
            res = client.Post("/embed", body, "application/json");
            if (res && res->status == 200) break;
            if (res)
                failure = "HTTP status " + std::to_string(res->status);
            else
                failure = httplib::to_string(res.error());
            if (attempt == config.retries)
                throw TransportError("embedding request failed after " +
                                     std::to_string(config.retries + 1) + " attempt(s): " +
                                     failure + " (" + config.base_url + "/embed)");
        }

        Json reply;
        try {
            reply = Json::parse(res->body);
        } catch (const std::exception& e) {
            throw ProtocolError("embedding service returned invalid JSON: " +
                                std::string(e.what()));
        }
        if (!reply.is_object() || !reply.contains("embeddings") ||
            !reply["embeddings"].is_array())
            throw ProtocolError("embedding service reply lacks \"embeddings\" array");
        const Json& arr = reply["embeddings"];
        if (arr.size() != count)
            throw ProtocolError("embedding service returned " + std::to_string(arr.size()) +
                                " vectors for a batch of " + std::to_string(count));
        for (const auto& jv : arr) {
            if (!jv.is_array())
                throw ProtocolError("embedding service vector is not an array");
            Vec v;
            v.reserve(jv.size());
            for (const auto& x : jv) {
                if (!x.is_number())
                    throw ProtocolError("embedding service vector entries must be numbers");
                v.push_back(x.get<double>());
            }
            if (v.size() != config.dim)
                throw ProtocolError("embedding dim mismatch: expected " +
                                    std::to_string(config.dim) + ", got " +
                                    std::to_string(v.size()));
            out.push_back(std::move(v));
        }
    }
    return out;
}

std::vector<Vec> embed(const EmbeddingProviderConfig& config,
                       const std::vector<DatasetRecord>& records) {
    switch (config.kind) {
        case EmbeddingProviderConfig::Kind::precomputed:
            return embed_precomputed(config, records);
        case EmbeddingProviderConfig::Kind::hashing:
            return embed_hashing(config, records);
        case EmbeddingProviderConfig::Kind::remote:
            return embed_remote(config, records);
    }
    throw ContractError("unknown embedding provider kind");
}

}  // namespace svdd
