#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "coxql/dataset.hpp"

namespace coxql {

struct EmbeddingVector {
    std::vector<float> values;
    double norm = 0.0;
    bool empty_input = false;
};

double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

/// Text embedding contract. Implementations declare whether identical input
/// always yields identical output.
class EmbeddingBackend {
public:
    virtual ~EmbeddingBackend() = default;
    virtual EmbeddingVector embed(std::string_view text) const = 0;
    virtual std::size_t dimension() const = 0;
    virtual bool deterministic() const = 0;
};

/// Hashed character-trigram term frequencies over the lower-cased,
/// whitespace-collapsed text. Fully offline and deterministic.
class LexicalEmbedder final : public EmbeddingBackend {
public:
    static constexpr std::size_t kDimension = 4096;
    EmbeddingVector embed(std::string_view text) const override;
    std::size_t dimension() const override { return kDimension; }
    bool deterministic() const override { return true; }
};

const LexicalEmbedder& default_embedder();

class EmptyCorpusError : public std::runtime_error {
public:
    explicit EmptyCorpusError(const std::string& what) : std::runtime_error(what) {}
};

struct ScoredExample {
    const Example* example = nullptr;
    std::size_t corpus_index = 0;
    double similarity = 0.0;
};

/// Pre-embedded corpus for repeated queries. The similarity order is total:
/// ties fall back to (question, parse) and only then the corpus index, so a
/// permuted corpus ranks identically.
class NearestNeighborIndex {
public:
    NearestNeighborIndex(const Dataset& corpus, const EmbeddingBackend& backend);
    std::vector<ScoredExample> rank(std::string_view query, std::size_t k) const;
    const Dataset& corpus() const { return *corpus_; }

private:
    const Dataset* corpus_;
    const EmbeddingBackend* backend_;
    std::vector<EmbeddingVector> vectors_;
};

/// Top-k most similar corpus examples, descending cosine. k is clamped to the
/// corpus size. Throws EmptyCorpusError when the corpus has no examples.
std::vector<ScoredExample> nearest(std::string_view query, const Dataset& corpus, std::size_t k,
                                   const EmbeddingBackend& backend = default_embedder());

/// Nearest-neighbor parsing baseline: the gold parse of the single most
/// similar training question.
std::string nn_parse(std::string_view query, const Dataset& train,
                     const EmbeddingBackend& backend = default_embedder());

/// Demonstrations for few-shot prompts, most similar first.
std::vector<Example> select_demonstrations(std::string_view query, const Dataset& pool,
                                           std::size_t k = 20,
                                           const EmbeddingBackend& backend = default_embedder());

/// Remote embedding service: POST {"input": [texts]} to `url`, expects
/// {"embeddings": [[...]]} back.
class HttpEmbeddingBackend final : public EmbeddingBackend {
public:
    HttpEmbeddingBackend(std::string url, std::size_t dimension, double timeout_seconds = 30.0);
    EmbeddingVector embed(std::string_view text) const override;
    std::size_t dimension() const override { return dimension_; }
    bool deterministic() const override { return false; }

private:
    std::string url_;
    std::size_t dimension_;
    double timeout_seconds_;
};

}  // namespace coxql
