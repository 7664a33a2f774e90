#include "coxql/retrieval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "http_util.hpp"

namespace coxql {

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.norm <= 0.0 || b.norm <= 0.0) return 0.0;
    std::size_t n = std::min(a.values.size(), b.values.size());
    double dot = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        dot += static_cast<double>(a.values[i]) * static_cast<double>(b.values[i]);
    }
    return dot / (a.norm * b.norm);
}

EmbeddingVector LexicalEmbedder::embed(std::string_view text) const {
    // Collapse whitespace, lower-case, pad with sentinels so short inputs
    // still produce trigrams.
    std::string norm;
    norm.reserve(text.size() + 2);
    norm += ' ';
    bool last_space = true;
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!last_space) norm += ' ';
            last_space = true;
        } else {
            norm += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            last_space = false;
        }
    }
    if (!last_space) norm += ' ';

    EmbeddingVector vec;
    vec.values.assign(kDimension, 0.0f);
    if (norm.size() < 3) {
        vec.empty_input = true;
        return vec;
    }
    for (std::size_t i = 0; i + 3 <= norm.size(); ++i) {
        std::uint64_t h = fnv1a64(std::string_view(norm).substr(i, 3));
        vec.values[h % kDimension] += 1.0f;
    }
    double sq = 0.0;
    for (float v : vec.values) sq += static_cast<double>(v) * v;
    vec.norm = std::sqrt(sq);
    vec.empty_input = vec.norm == 0.0;
    return vec;
}

const LexicalEmbedder& default_embedder() {
    static const LexicalEmbedder embedder;
    return embedder;
}

NearestNeighborIndex::NearestNeighborIndex(const Dataset& corpus, const EmbeddingBackend& backend)
    : corpus_(&corpus), backend_(&backend) {
    vectors_.reserve(corpus.examples.size());
    for (const Example& ex : corpus.examples) vectors_.push_back(backend.embed(ex.question));
}

std::vector<ScoredExample> NearestNeighborIndex::rank(std::string_view query,
                                                      std::size_t k) const {
    if (corpus_->examples.empty()) throw EmptyCorpusError("corpus has no examples");
    if (k == 0) return {};
    EmbeddingVector q = backend_->embed(query);
    std::vector<ScoredExample> scored;
    scored.reserve(corpus_->examples.size());
    for (std::size_t i = 0; i < corpus_->examples.size(); ++i) {
        scored.push_back({&corpus_->examples[i], i, cosine(q, vectors_[i])});
    }
    std::sort(scored.begin(), scored.end(), [](const ScoredExample& a, const ScoredExample& b) {
        if (a.similarity != b.similarity) return a.similarity > b.similarity;
        if (a.example->question != b.example->question)
            return a.example->question < b.example->question;
        if (a.example->gold_parse != b.example->gold_parse)
            return a.example->gold_parse < b.example->gold_parse;
        return a.corpus_index < b.corpus_index;
    });
    if (scored.size() > k) scored.resize(k);
    return scored;
}

std::vector<ScoredExample> nearest(std::string_view query, const Dataset& corpus, std::size_t k,
                                   const EmbeddingBackend& backend) {
    return NearestNeighborIndex(corpus, backend).rank(query, k);
}

std::string nn_parse(std::string_view query, const Dataset& train,
                     const EmbeddingBackend& backend) {
    auto top = nearest(query, train, 1, backend);
    return top.front().example->gold_parse;
}

std::vector<Example> select_demonstrations(std::string_view query, const Dataset& pool,
                                           std::size_t k, const EmbeddingBackend& backend) {
    std::vector<Example> out;
    for (const ScoredExample& s : nearest(query, pool, k, backend)) {
        out.push_back(*s.example);
    }
    return out;
}

HttpEmbeddingBackend::HttpEmbeddingBackend(std::string url, std::size_t dimension,
                                           double timeout_seconds)
    : url_(std::move(url)), dimension_(dimension), timeout_seconds_(timeout_seconds) {}

EmbeddingVector HttpEmbeddingBackend::embed(std::string_view text) const {
    nlohmann::json body;
    body["input"] = std::vector<std::string>{std::string(text)};
    nlohmann::json reply = http_post_json(url_, body, timeout_seconds_, "");
    if (!reply.contains("embeddings") || !reply["embeddings"].is_array() ||
        reply["embeddings"].empty()) {
        throw IoError("embedding endpoint returned no embeddings");
    }
    EmbeddingVector vec;
    for (const auto& v : reply["embeddings"][0]) vec.values.push_back(v.get<float>());
    if (vec.values.size() != dimension_) {
        throw IoError("embedding dimension mismatch: got " + std::to_string(vec.values.size()));
    }
    double sq = 0.0;
    for (float v : vec.values) sq += static_cast<double>(v) * v;
    vec.norm = std::sqrt(sq);
    vec.empty_input = vec.norm == 0.0;
    return vec;
}

}  // namespace coxql
