#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "coxql/ast.hpp"
#include "coxql/config.hpp"
#include "coxql/dataset.hpp"
#include "coxql/grammar.hpp"

namespace coxql {

class BackendError : public std::runtime_error {
public:
    enum class Kind : std::uint8_t {
        Timeout,
        HttpStatus,
        MalformedResponse,
        UnmappedQuestion,
        Transport,
    };
    BackendError(Kind k, const std::string& what, int http_status = 0)
        : std::runtime_error(what), kind(k), status(http_status) {}
    Kind kind;
    int status;
};

/// Text-generation contract behind the parsing pipelines. A backend that can
/// score grammar terminals exposes a TerminalScorer for constrained decoding;
/// the others are driven through complete().
class GenerationBackend {
public:
    virtual ~GenerationBackend() = default;
    virtual std::string complete(const std::string& prompt,
                                 const std::vector<std::string>& stop, int max_tokens) = 0;
    virtual const TerminalScorer* terminal_scorer() const { return nullptr; }
    virtual bool deterministic() const { return true; }
    virtual int max_concurrency() const { return 1; }
    virtual std::string label() const = 0;
};

struct BackendConfig {
    std::string endpoint;  // full URL of an OpenAI-compatible completions route
    std::string model = "local";
    std::string api_key_env = "COXQL_API_KEY";
    double timeout_seconds = 30.0;
    int max_concurrency = 1;
    int max_tokens = 64;
    bool chat_format = false;  // wrap the prompt as a single chat message

    static BackendConfig from_config(const ConfigMap& cfg);
};

/// Single completion request, temperature 0. The response text is trimmed
/// and truncated at the first stop sequence; it is never interpreted here.
std::string http_complete(const BackendConfig& cfg, const std::string& prompt,
                          const std::vector<std::string>& stop, int max_tokens);

class HttpBackend final : public GenerationBackend {
public:
    explicit HttpBackend(BackendConfig cfg) : cfg_(std::move(cfg)) {}
    std::string complete(const std::string& prompt, const std::vector<std::string>& stop,
                         int max_tokens) override {
        return http_complete(cfg_, prompt, stop, max_tokens);
    }
    int max_concurrency() const override { return cfg_.max_concurrency; }
    std::string label() const override { return cfg_.model; }
    const BackendConfig& config() const { return cfg_; }

private:
    BackendConfig cfg_;
};

/// Deterministic test backend: answers with the gold parse of whichever
/// mapped question appears in the prompt, and scores gold continuations 1.0
/// under constrained decoding.
class OracleBackend final : public GenerationBackend, public TerminalScorer {
public:
    explicit OracleBackend(const Dataset& mapped);
    explicit OracleBackend(std::vector<std::pair<std::string, std::string>> mapping);

    std::string complete(const std::string& prompt, const std::vector<std::string>& stop,
                         int max_tokens) override;
    const TerminalScorer* terminal_scorer() const override { return this; }
    std::vector<ScoredTerminal> score_terminals(
        const std::string& prompt, const std::string& partial,
        const std::vector<TerminalCandidate>& candidates) const override;
    std::string label() const override { return "oracle"; }

    /// The gold parse for the question embedded in `prompt`.
    const std::string& lookup(const std::string& prompt) const;

private:
    std::vector<std::pair<std::string, std::string>> mapping_;  // question -> canonical parse
};

enum class CorruptionClass : std::uint8_t {
    SlotOrderSwap,
    DefaultOmission,
    ExtraMetric,
    WrongMethodName,
    MissingTopK,
    MissingId,
};

inline constexpr std::size_t kCorruptionClassCount = 6;

std::string_view corruption_class_name(CorruptionClass c);
std::optional<CorruptionClass> corruption_class_from_name(std::string_view name);

/// Which error classes to inject and how often. Seeded profiles corrupt a
/// given gold parse identically on every call.
struct CorruptionProfile {
    std::map<CorruptionClass, double> rates;
    std::uint64_t seed = 0;

    static CorruptionProfile single(CorruptionClass c, std::uint64_t seed);
    static CorruptionProfile all(double rate, std::uint64_t seed);
    static CorruptionProfile from_json(std::string_view text);   // throws std::invalid_argument
    static CorruptionProfile load_file(const std::string& path); // throws IoError
    std::string to_json() const;
    void check() const;  // rates in [0,1]
};

/// True when the class can change this gold parse at all.
bool corruption_applicable(CorruptionClass c, const QueryAst& gold);

/// Applies every sampled error class to the canonical gold parse. Pure in
/// (gold, profile): the per-call randomness is derived from the profile seed
/// and the gold string, not from call order.
std::string apply_corruptions(const std::string& canonical_gold, const CorruptionProfile& profile);

class CorruptingBackend final : public GenerationBackend {
public:
    CorruptingBackend(const OracleBackend& inner, CorruptionProfile profile);
    std::string complete(const std::string& prompt, const std::vector<std::string>& stop,
                         int max_tokens) override;
    std::string label() const override { return "corrupting-oracle"; }
    const CorruptionProfile& profile() const { return profile_; }

private:
    const OracleBackend* inner_;
    CorruptionProfile profile_;
};

}  // namespace coxql
