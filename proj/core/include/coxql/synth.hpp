#pragma once

#include <random>
#include <string>
#include <vector>

#include "coxql/ast.hpp"
#include "coxql/grammar.hpp"

namespace coxql {

/// Word pool for synthesized label/token arguments.
const std::vector<std::string>& synth_word_pool();

/// Draws a random grammar-valid AST: random terminal, random legal slots, and
/// a filter chain whenever the terminal requires one (or by coin flip).
QueryAst sample_ast(std::mt19937_64& rng);

/// Scorer with uniform random scores and random (well-formed) literals for
/// the number/id/word classes.
class RandomScorer final : public TerminalScorer {
public:
    explicit RandomScorer(std::uint64_t seed) : rng_(seed) {}
    std::vector<ScoredTerminal> score_terminals(
        const std::string& prompt, const std::string& partial,
        const std::vector<TerminalCandidate>& candidates) const override;

private:
    mutable std::mt19937_64 rng_;
};

/// Scorer that always prefers tokens outside the allowed set (and scores the
/// allowed ones adversarially low); decoding must still yield a sentence.
class AdversarialScorer final : public TerminalScorer {
public:
    explicit AdversarialScorer(std::uint64_t seed) : rng_(seed) {}
    std::vector<ScoredTerminal> score_terminals(
        const std::string& prompt, const std::string& partial,
        const std::vector<TerminalCandidate>& candidates) const override;

private:
    mutable std::mt19937_64 rng_;
};

}  // namespace coxql
