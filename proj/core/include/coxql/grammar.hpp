#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "coxql/ops.hpp"

namespace coxql {

/// Terminal symbol of the query grammar: a literal keyword or one of the
/// literal classes whose concrete text is supplied at decode time.
struct TerminalSym {
    enum class Kind : std::uint8_t { Literal, Number, Id, Word };
    Kind kind = Kind::Literal;
    std::string text;  // literals only
    auto operator<=>(const TerminalSym&) const = default;
};

using Symbol = std::variant<TerminalSym, std::string>;  // string = non-terminal
using Production = std::vector<Symbol>;

bool terminal_matches(const TerminalSym& sym, std::string_view token);

class GrammarFormatError : public std::runtime_error {
public:
    explicit GrammarFormatError(const std::string& what) : std::runtime_error(what) {}
};

class Grammar;

/// Incremental recognizer state. One owner per decode; the grammar itself is
/// immutable and shared.
class GrammarState {
public:
    const std::vector<std::string>& consumed() const { return consumed_; }

private:
    friend class Grammar;
    const Grammar* grammar_ = nullptr;
    std::vector<std::vector<Symbol>> configs_;  // alternative stacks, back = top
    std::vector<std::string> consumed_;
};

class Grammar {
public:
    /// Grammar generating exactly the canonical strings the validator accepts.
    static Grammar build(const OperationRegistry& registry = OperationRegistry::instance());

    /// One rule per line, `<lhs> := alt | alt`; round-trips bit-exact.
    std::string dump() const;
    static Grammar from_dump(std::string_view text);

    const std::string& start() const { return start_; }
    const std::vector<Production>* productions(std::string_view name) const;

    GrammarState start_state() const;
    /// Terminal classes that can extend the prefix; empty only once no
    /// continuation exists (never on a live, incomplete prefix).
    std::vector<TerminalSym> allowed_next(const GrammarState& state) const;
    /// Consumes one token; false when the token extends no viable stack.
    bool step(GrammarState& state, std::string_view token) const;
    bool is_complete(const GrammarState& state) const;
    /// Fewest further terminals needed to reach a complete sentence.
    std::size_t min_steps_to_complete(const GrammarState& state) const;

    bool accepts(std::string_view text) const;

    /// Uniform random derivation; numbers and free words are drawn from rng.
    std::string sample(std::mt19937_64& rng) const;

private:
    Grammar() = default;
    void add_rule(std::string name, std::vector<Production> alternatives);
    void finalize();
    std::vector<std::vector<Symbol>> closure(const std::vector<std::vector<Symbol>>& configs) const;

    std::string start_;
    std::vector<std::pair<std::string, std::vector<Production>>> rules_;
    std::vector<std::size_t> rule_min_len_;  // aligned with rules_
};

/// Candidate terminal handed to a scorer. For Number/Id/Word the scorer
/// proposes the concrete literal; End is offered once the output is already a
/// complete sentence.
struct TerminalCandidate {
    enum class Kind : std::uint8_t { Literal, Number, Id, Word, End };
    Kind kind = Kind::Literal;
    std::string text;
};

struct ScoredTerminal {
    double score = 0.0;
    std::string literal;
};

/// Next-token scorer contract for grammar-constrained decoding.
class TerminalScorer {
public:
    virtual ~TerminalScorer() = default;
    virtual std::vector<ScoredTerminal> score_terminals(
        const std::string& prompt, const std::string& partial,
        const std::vector<TerminalCandidate>& candidates) const = 0;
};

class DecodeError : public std::runtime_error {
public:
    enum class Kind : std::uint8_t { StepLimitExceeded, NoViableTerminal, ScorerMismatch };
    DecodeError(Kind k, const std::string& what) : std::runtime_error(what), kind(k) {}
    Kind kind;
};

/// Greedy decode over grammar terminals: at each step the argmax of the
/// scorer is taken over the allowed continuations only, so the output is a
/// complete sentence of the grammar regardless of scorer behavior.
std::string constrained_decode(const TerminalScorer& scorer, const Grammar& grammar,
                               const std::string& prompt, std::size_t max_terminals = 64);

}  // namespace coxql
