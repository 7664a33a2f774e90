#include "coxql/synth.hpp"

#include "coxql/parse.hpp"

namespace coxql {

namespace {

std::int64_t draw(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

SlotValue sample_slot(std::mt19937_64& rng, const SlotPosition& position) {
    SlotClass cls = position.allowed[rng() % position.allowed.size()];
    switch (cls) {
        case SlotClass::TopK: return TopK{draw(rng, 1, 99)};
        case SlotClass::All: return All{};
        case SlotClass::MistakeMode:
            return rng() % 2 ? MistakeMode::Sample : MistakeMode::Count;
        case SlotClass::Metric: return static_cast<Metric>(rng() % 5);
        case SlotClass::Method: return static_cast<AttributionMethod>(rng() % 5);
        case SlotClass::Topic: return static_cast<TutorialTopic>(rng() % 9);
        case SlotClass::Length:
            return LengthSpec{static_cast<LengthLevel>(rng() % 3),
                              rng() % 2 ? LengthCmp::Gt : LengthCmp::Lt, draw(rng, 1, 500)};
        case SlotClass::Label: {
            const auto& words = synth_word_pool();
            return Label{words[rng() % words.size()]};
        }
        case SlotClass::Token: {
            const auto& words = synth_word_pool();
            return Token{words[rng() % words.size()]};
        }
        case SlotClass::Id: return Id{draw(rng, 0, 9999)};
    }
    return All{};
}

FilterClause sample_filter(std::mt19937_64& rng) {
    static const OperationKind kinds[] = {
        OperationKind::Filter,       OperationKind::PredFilter,
        OperationKind::LabelFilter,  OperationKind::LengthFilter,
        OperationKind::PreviousFilter, OperationKind::Includes,
    };
    const OperationSpec& spec = spec_for(kinds[rng() % 6]);
    FilterClause clause{spec.kind, {}};
    for (const SlotPosition& position : spec.positions) {
        clause.args.push_back(sample_slot(rng, position));
    }
    return clause;
}

}  // namespace

const std::vector<std::string>& synth_word_pool() {
    static const std::vector<std::string> words = {
        "positive", "negative", "neutral", "toxic",  "spam",
        "sports",   "politics", "offensive", "happy", "weather",
    };
    return words;
}

QueryAst sample_ast(std::mt19937_64& rng) {
    QueryAst ast;
    // Terminal is either a main operation or a filter heading a pure chain.
    if (rng() % 8 == 0) {
        FilterClause terminal = sample_filter(rng);
        ast.terminal = terminal.kind;
        ast.slots = std::move(terminal.args);
        std::size_t extra = rng() % 3;
        for (std::size_t i = 0; i < extra; ++i) {
            ast.filters.push_back(
                {sample_filter(rng), rng() % 2 ? Connective::And : Connective::Or});
        }
        return ast;
    }
    ast.terminal = static_cast<OperationKind>(rng() % kTerminalOperationCount);
    const OperationSpec& spec = spec_for(ast.terminal);
    for (const SlotPosition& position : spec.positions) {
        ast.slots.push_back(sample_slot(rng, position));
    }
    std::size_t chain = spec.requires_instance_filter ? 1 + rng() % 2 : rng() % 2;
    for (std::size_t i = 0; i < chain; ++i) {
        Connective conn =
            (i + 1 == chain) ? Connective::And : (rng() % 2 ? Connective::And : Connective::Or);
        ast.filters.push_back({sample_filter(rng), conn});
    }
    return ast;
}

std::vector<ScoredTerminal> RandomScorer::score_terminals(
    const std::string&, const std::string&,
    const std::vector<TerminalCandidate>& candidates) const {
    std::vector<ScoredTerminal> out(candidates.size());
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        out[i].score = uniform(rng_);
        switch (candidates[i].kind) {
            case TerminalCandidate::Kind::Number:
                out[i].literal = std::to_string(1 + rng_() % 9999);
                break;
            case TerminalCandidate::Kind::Id:
                out[i].literal = std::to_string(rng_() % 10000);
                break;
            case TerminalCandidate::Kind::Word: {
                const auto& words = synth_word_pool();
                out[i].literal = words[rng_() % words.size()];
                break;
            }
            default: break;
        }
    }
    return out;
}

std::vector<ScoredTerminal> AdversarialScorer::score_terminals(
    const std::string&, const std::string&,
    const std::vector<TerminalCandidate>& candidates) const {
    std::vector<ScoredTerminal> out(candidates.size());
    std::uniform_real_distribution<double> uniform(-1.0, 0.0);
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        out[i].score = uniform(rng_);
        switch (candidates[i].kind) {
            case TerminalCandidate::Kind::Number:
            case TerminalCandidate::Kind::Id:
                // Malformed on purpose; the decoder must reject it.
                out[i].literal = rng_() % 2 ? "not-a-number" : "-3";
                break;
            case TerminalCandidate::Kind::Word:
                out[i].literal = rng_() % 2 ? "and" : "12345";
                break;
            default: break;
        }
    }
    return out;
}

}  // namespace coxql
