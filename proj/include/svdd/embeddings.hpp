#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "svdd/dataset.hpp"
#include "svdd/dense_net.hpp"

namespace svdd {

struct EmbeddingProviderConfig {
    enum class Kind { precomputed, hashing, remote };

    Kind kind = Kind::hashing;
    std::size_t dim = 384;

    // precomputed
    std::string file_path;  // JSONL rows {"id": str, "vector": [doubles]}

    // hashing
    std::uint64_t hash_seed = 0;
    std::string token_pattern = "alnum";  // only supported value

    // remote
    std::string base_url;  // scheme://host:port
    std::size_t batch_size = 32;
    double timeout_seconds = 30.0;
    std::size_t retries = 3;
    std::size_t backoff_ms = 100;
};

// Loads the precomputed-vector file and returns vectors aligned with
// `records`.  Unknown ids raise DataError listing up to ten missing ids;
// vectors whose length differs from config.dim raise DataError naming the
// expected and actual lengths.
std::vector<Vec> embed_precomputed(const EmbeddingProviderConfig& config,
                                   const std::vector<DatasetRecord>& records);

// Deterministic feature-hashing embedder.  Tokens are maximal ASCII
// alphanumeric runs, lowercased; each token adds +-1 (sign from a second hash
// bit) at index stable_hash(token, seed) % dim; the result is L2-normalized.
// Text with no tokens embeds to the zero vector.  Requires dim >= 2.
Vec hash_embed_text(const std::string& text, std::size_t dim, std::uint64_t hash_seed);

std::vector<Vec> embed_hashing(const EmbeddingProviderConfig& config,
                               const std::vector<DatasetRecord>& records);

// POSTs {"texts": [...]} to <base_url>/embed in batches of config.batch_size
// and expects {"embeddings": [[...], ...]} back, in order.  Failed requests
// are retried config.retries times with exponential backoff; exhausting
// retries raises TransportError, and a well-transported but malformed reply
// (wrong arity, wrong vector length, bad JSON) raises ProtocolError.
std::vector<Vec> embed_remote(const EmbeddingProviderConfig& config,
                              const std::vector<DatasetRecord>& records);

// Dispatch on config.kind.  Output order always matches `records`; provider
// output is passed through unchanged (no renormalization).
std::vector<Vec> embed(const EmbeddingProviderConfig& config,
                       const std::vector<DatasetRecord>& records);

}  // namespace svdd
