#include "coxql/grammar.hpp"

#include <algorithm>
#include <charconv>
#include <limits>
#include <set>
#include <sstream>

#include "coxql/parse.hpp"

namespace coxql {

namespace {

constexpr std::size_t kInf = std::numeric_limits<std::size_t>::max() / 4;

Symbol nt(std::string name) { return Symbol{std::move(name)}; }
Symbol lit(std::string_view text) {
    return Symbol{TerminalSym{TerminalSym::Kind::Literal, std::string(text)}};
}
Symbol number() { return Symbol{TerminalSym{TerminalSym::Kind::Number, ""}}; }
Symbol id_number() { return Symbol{TerminalSym{TerminalSym::Kind::Id, ""}}; }
Symbol word() { return Symbol{TerminalSym{TerminalSym::Kind::Word, ""}}; }

const std::vector<std::string>& word_samples() {
    static const std::vector<std::string> words = {
        "positive", "negative", "neutral", "toxic", "spam",
        "sports",   "politics", "offensive", "happy", "model",
    };
    return words;
}

// Symbols for one schema position of an operation.
std::vector<Symbol> position_symbols(const SlotPosition& position) {
    if (position.allowed.size() == 2 && position.allowed[0] == SlotClass::All &&
        position.allowed[1] == SlotClass::TopK) {
        return {nt("attr_range")};
    }
    switch (position.allowed.front()) {
        case SlotClass::TopK: return {lit("topk"), number()};
        case SlotClass::All: return {lit("all")};
        case SlotClass::MistakeMode: return {nt("mistake_mode")};
        case SlotClass::Metric: return {nt("metric")};
        case SlotClass::Method: return {nt("attr_method")};
        case SlotClass::Topic: return {nt("tutorial_topic")};
        case SlotClass::Length: return {nt("length_level"), nt("length_cmp"), number()};
        case SlotClass::Label: return {word()};
        case SlotClass::Token: return {word()};
        case SlotClass::Id: return {lit("id"), id_number()};
    }
    return {};
}

Production clause_production(const OperationSpec& spec) {
    Production p{lit(spec.token)};
    for (const SlotPosition& position : spec.positions) {
        for (Symbol& s : position_symbols(position)) p.push_back(std::move(s));
    }
    return p;
}

std::string render_symbol(const Symbol& sym) {
    if (const auto* term = std::get_if<TerminalSym>(&sym)) {
        switch (term->kind) {
            case TerminalSym::Kind::Literal: return term->text;
            case TerminalSym::Kind::Number: return "NUMBER";
            case TerminalSym::Kind::Id: return "ID";
            case TerminalSym::Kind::Word: return "WORD";
        }
    }
    return "<" + std::get<std::string>(sym) + ">";
}

Symbol parse_symbol(const std::string& tok) {
    if (tok.size() >= 2 && tok.front() == '<' && tok.back() == '>') {
        return nt(tok.substr(1, tok.size() - 2));
    }
    if (tok == "NUMBER") return number();
    if (tok == "ID") return id_number();
    if (tok == "WORD") return word();
    return lit(tok);
}

}  // namespace

bool terminal_matches(const TerminalSym& sym, std::string_view token) {
    switch (sym.kind) {
        case TerminalSym::Kind::Literal: return sym.text == token;
        case TerminalSym::Kind::Number: {
            if (!is_number_token(token)) return false;
            std::int64_t v = 0;
            std::from_chars(token.data(), token.data() + token.size(), v);
            return v >= 1;
        }
        case TerminalSym::Kind::Id: return is_number_token(token);
        case TerminalSym::Kind::Word: return is_word_token(token);
    }
    return false;
}

void Grammar::add_rule(std::string name, std::vector<Production> alternatives) {
    rules_.emplace_back(std::move(name), std::move(alternatives));
}

const std::vector<Production>* Grammar::productions(std::string_view name) const {
    for (const auto& [rule_name, alts] : rules_) {
        if (rule_name == name) return &alts;
    }
    return nullptr;
}

void Grammar::finalize() {
    // Shortest terminal yield per rule, standard fixpoint.
    rule_min_len_.assign(rules_.size(), kInf);
    bool changed = true;
    while (changed) {
        changed = false;
        for (std::size_t r = 0; r < rules_.size(); ++r) {
            std::size_t best = rule_min_len_[r];
            for (const Production& prod : rules_[r].second) {
                std::size_t total = 0;
                for (const Symbol& sym : prod) {
                    if (std::holds_alternative<TerminalSym>(sym)) {
                        total += 1;
                    } else {
                        const std::string& name = std::get<std::string>(sym);
                        std::size_t i = 0;
                        for (; i < rules_.size(); ++i) {
                            if (rules_[i].first == name) break;
                        }
                        total += i < rules_.size() ? rule_min_len_[i] : kInf;
                    }
                    if (total >= kInf) break;
                }
                best = std::min(best, total);
            }
            if (best < rule_min_len_[r]) {
                rule_min_len_[r] = best;
                changed = true;
            }
        }
    }
}

Grammar Grammar::build(const OperationRegistry& registry) {
    Grammar g;
    g.start_ = "query";

    std::vector<Production> free_alts;
    std::vector<Production> bound_alts;
    std::vector<Production> filter_alts;
    for (const OperationSpec& spec : registry.all()) {
        if (is_connective(spec.kind)) continue;
        if (is_filter_operation(spec.kind)) {
            filter_alts.push_back(clause_production(spec));
        } else if (spec.requires_instance_filter) {
            bound_alts.push_back(clause_production(spec));
        } else {
            free_alts.push_back(clause_production(spec));
        }
    }

    g.add_rule("query", {
                            {nt("free_clause")},
                            {nt("filter_chain"), lit("and"), nt("free_clause")},
                            {nt("filter_chain"), lit("and"), nt("bound_clause")},
                            {nt("filter_chain")},
                        });
    g.add_rule("filter_chain", {
                                   {nt("filter_clause")},
                                   {nt("filter_clause"), lit("and"), nt("filter_chain")},
                                   {nt("filter_clause"), lit("or"), nt("filter_chain")},
                               });
    g.add_rule("filter_clause", std::move(filter_alts));
    g.add_rule("free_clause", std::move(free_alts));
    g.add_rule("bound_clause", std::move(bound_alts));
    g.add_rule("attr_range", {{lit("all")}, {lit("topk"), number()}});

    auto enum_rule = [&](std::string name, std::vector<std::string_view> tokens) {
        std::vector<Production> alts;
        for (std::string_view t : tokens) alts.push_back({lit(t)});
        g.add_rule(std::move(name), std::move(alts));
    };
    enum_rule("attr_method", {"default", "attention", "lime", "integrated_gradient",
                              "input_x_gradient"});
    enum_rule("metric", {"accuracy", "precision", "recall", "f1", "roc"});
    enum_rule("mistake_mode", {"sample", "count"});
    enum_rule("tutorial_topic", {"qaattribute", "qarationalize", "qainfluence", "qacfe",
                                 "qaadversarial", "qaaugment", "qaeditlabel", "qalearn",
                                 "qaunlearn"});
    enum_rule("length_level", {"character", "token", "sentence"});
    enum_rule("length_cmp", {"gt", "lt"});

    g.finalize();
    return g;
}

std::string Grammar::dump() const {
    std::ostringstream os;
    for (const auto& [name, alts] : rules_) {
        os << "<" << name << "> :=";
        for (std::size_t a = 0; a < alts.size(); ++a) {
            os << (a == 0 ? " " : " | ");
            for (std::size_t s = 0; s < alts[a].size(); ++s) {
                if (s) os << ' ';
                os << render_symbol(alts[a][s]);
            }
        }
        os << '\n';
    }
    return os.str();
}

Grammar Grammar::from_dump(std::string_view text) {
    Grammar g;
    std::istringstream is{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto sep = line.find(" := ");
        if (sep == std::string::npos) {
            throw GrammarFormatError("line " + std::to_string(line_no) + ": missing ':='");
        }
        std::string lhs = line.substr(0, sep);
        if (lhs.size() < 3 || lhs.front() != '<' || lhs.back() != '>') {
            throw GrammarFormatError("line " + std::to_string(line_no) +
                                     ": rule name must be <name>");
        }
        std::string name = lhs.substr(1, lhs.size() - 2);
        std::vector<Production> alts;
        std::istringstream rhs{line.substr(sep + 4)};
        Production current;
        std::string tok;
        while (rhs >> tok) {
            if (tok == "|") {
                if (current.empty()) {
                    throw GrammarFormatError("line " + std::to_string(line_no) +
                                             ": empty alternative");
                }
                alts.push_back(std::move(current));
                current.clear();
            } else {
                current.push_back(parse_symbol(tok));
            }
        }
        if (current.empty()) {
            throw GrammarFormatError("line " + std::to_string(line_no) + ": empty alternative");
        }
        alts.push_back(std::move(current));
        if (g.rules_.empty()) g.start_ = name;
        g.add_rule(std::move(name), std::move(alts));
    }
    if (g.rules_.empty()) throw GrammarFormatError("no rules");
    g.finalize();
    return g;
}

std::vector<std::vector<Symbol>> Grammar::closure(
    const std::vector<std::vector<Symbol>>& configs) const {
    std::set<std::vector<Symbol>> seen;
    std::vector<std::vector<Symbol>> done;
    std::vector<std::vector<Symbol>> work = configs;
    while (!work.empty()) {
        std::vector<Symbol> stack = std::move(work.back());
        work.pop_back();
        if (!seen.insert(stack).second) continue;
        if (stack.empty() || std::holds_alternative<TerminalSym>(stack.back())) {
            done.push_back(std::move(stack));
            continue;
        }
        const std::string& name = std::get<std::string>(stack.back());
        const std::vector<Production>* alts = productions(name);
        if (!alts) continue;  // unknown non-terminal derives nothing
        for (const Production& prod : *alts) {
            std::vector<Symbol> next(stack.begin(), stack.end() - 1);
            for (auto it = prod.rbegin(); it != prod.rend(); ++it) next.push_back(*it);
            work.push_back(std::move(next));
        }
    }
    return done;
}

GrammarState Grammar::start_state() const {
    GrammarState state;
    state.grammar_ = this;
    state.configs_ = closure({{nt(start_)}});
    return state;
}

std::vector<TerminalSym> Grammar::allowed_next(const GrammarState& state) const {
    std::set<TerminalSym> out;
    for (const auto& stack : state.configs_) {
        if (!stack.empty()) out.insert(std::get<TerminalSym>(stack.back()));
    }
    return {out.begin(), out.end()};
}

bool Grammar::step(GrammarState& state, std::string_view token) const {
    std::vector<std::vector<Symbol>> next;
    for (const auto& stack : state.configs_) {
        if (stack.empty()) continue;
        if (!terminal_matches(std::get<TerminalSym>(stack.back()), token)) continue;
        next.emplace_back(stack.begin(), stack.end() - 1);
    }
    if (next.empty()) return false;
    state.configs_ = closure(next);
    state.consumed_.emplace_back(token);
    return true;
}

bool Grammar::is_complete(const GrammarState& state) const {
    return std::any_of(state.configs_.begin(), state.configs_.end(),
                       [](const auto& stack) { return stack.empty(); });
}

std::size_t Grammar::min_steps_to_complete(const GrammarState& state) const {
    std::size_t best = kInf;
    for (const auto& stack : state.configs_) {
        std::size_t total = 0;
        for (const Symbol& sym : stack) {
            if (std::holds_alternative<TerminalSym>(sym)) {
                total += 1;
            } else {
                const std::string& name = std::get<std::string>(sym);
                std::size_t i = 0;
                for (; i < rules_.size(); ++i) {
                    if (rules_[i].first == name) break;
                }
                total += i < rules_.size() ? rule_min_len_[i] : kInf;
            }
            if (total >= kInf) break;
        }
        best = std::min(best, total);
    }
    return best;
}

bool Grammar::accepts(std::string_view text) const {
    GrammarState state = start_state();
    for (const std::string& tok : tokenize_query(text)) {
        if (!step(state, tok)) return false;
    }
    return is_complete(state);
}

std::string Grammar::sample(std::mt19937_64& rng) const {
    std::vector<std::string> out;
    std::vector<Symbol> stack{nt(start_)};
    std::size_t depth = 0;
    while (!stack.empty()) {
        Symbol sym = std::move(stack.back());
        stack.pop_back();
        if (const auto* term = std::get_if<TerminalSym>(&sym)) {
            switch (term->kind) {
                case TerminalSym::Kind::Literal: out.push_back(term->text); break;
                case TerminalSym::Kind::Number:
                    out.push_back(std::to_string(1 + rng() % 9999));
                    break;
                case TerminalSym::Kind::Id:
                    out.push_back(std::to_string(rng() % 10000));
                    break;
                case TerminalSym::Kind::Word: {
                    const auto& words = word_samples();
                    out.push_back(words[rng() % words.size()]);
                    break;
                }
            }
            continue;
        }
        const std::string& name = std::get<std::string>(sym);
        const std::vector<Production>* alts = productions(name);
        if (!alts || alts->empty()) continue;
        const Production* chosen = nullptr;
        if (++depth > 48) {
            // Deep in a filter chain: take the shortest completion.
            std::size_t best = kInf;
            for (const Production& prod : *alts) {
                std::size_t total = 0;
                for (const Symbol& s : prod) {
                    if (std::holds_alternative<TerminalSym>(s)) {
                        total += 1;
                    } else {
                        for (std::size_t i = 0; i < rules_.size(); ++i) {
                            if (rules_[i].first == std::get<std::string>(s)) {
                                total += rule_min_len_[i];
                                break;
                            }
                        }
                    }
                }
                if (total < best) {
                    best = total;
                    chosen = &prod;
                }
            }
        } else {
            chosen = &(*alts)[rng() % alts->size()];
        }
        for (auto it = chosen->rbegin(); it != chosen->rend(); ++it) stack.push_back(*it);
    }
    std::string joined;
    for (const std::string& tok : out) {
        if (!joined.empty()) joined += ' ';
        joined += tok;
    }
    return joined;
}

std::string constrained_decode(const TerminalScorer& scorer, const Grammar& grammar,
                               const std::string& prompt, std::size_t max_terminals) {
    GrammarState state = grammar.start_state();
    std::string partial;
    for (std::size_t produced = 0; produced <= max_terminals; ++produced) {
        std::size_t remaining = max_terminals - produced;
        std::vector<TerminalCandidate> candidates;
        std::vector<TerminalSym> syms;
        for (const TerminalSym& sym : grammar.allowed_next(state)) {
            // Keep only continuations that still fit the terminal budget.
            GrammarState probe = state;
            std::string sample_tok;
            switch (sym.kind) {
                case TerminalSym::Kind::Literal: sample_tok = sym.text; break;
                case TerminalSym::Kind::Number: sample_tok = "1"; break;
                case TerminalSym::Kind::Id: sample_tok = "0"; break;
                case TerminalSym::Kind::Word: sample_tok = "w"; break;
            }
            if (!grammar.step(probe, sample_tok)) continue;
            if (remaining == 0 || grammar.min_steps_to_complete(probe) > remaining - 1) continue;
            TerminalCandidate cand;
            cand.kind = static_cast<TerminalCandidate::Kind>(sym.kind);
            cand.text = sym.text;
            candidates.push_back(std::move(cand));
            syms.push_back(sym);
        }
        bool complete = grammar.is_complete(state);
        if (complete) candidates.push_back({TerminalCandidate::Kind::End, ""});
        if (candidates.empty()) {
            throw DecodeError(DecodeError::Kind::StepLimitExceeded,
                              "no viable continuation within terminal budget");
        }

        std::vector<ScoredTerminal> scores =
            scorer.score_terminals(prompt, partial, candidates);
        if (scores.size() != candidates.size()) {
            throw DecodeError(DecodeError::Kind::ScorerMismatch,
                              "scorer returned wrong candidate count");
        }

        std::size_t best = candidates.size();
        double best_score = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            std::string token;
            if (candidates[i].kind == TerminalCandidate::Kind::Literal) {
                token = candidates[i].text;
            } else if (candidates[i].kind != TerminalCandidate::Kind::End) {
                token = scores[i].literal;
                if (!terminal_matches(syms[i], token)) continue;  // malformed proposal
            }
            if (scores[i].score > best_score) {
                best_score = scores[i].score;
                best = i;
            }
        }
        if (best == candidates.size()) {
            if (complete) return partial;  // nothing valid proposed but output is a sentence
            // Validity is forced: take the best-scoring class candidate and
            // substitute a minimal well-formed literal for its class.
            for (std::size_t i = 0; i < candidates.size(); ++i) {
                if (candidates[i].kind == TerminalCandidate::Kind::End) continue;
                if (best == candidates.size() || scores[i].score > best_score) {
                    best_score = scores[i].score;
                    best = i;
                }
            }
            if (best == candidates.size()) {
                throw DecodeError(DecodeError::Kind::NoViableTerminal,
                                  "no continuation candidate available");
            }
            switch (candidates[best].kind) {
                case TerminalCandidate::Kind::Number: scores[best].literal = "1"; break;
                case TerminalCandidate::Kind::Id: scores[best].literal = "0"; break;
                case TerminalCandidate::Kind::Word: scores[best].literal = "x"; break;
                default: break;
            }
        }
        if (candidates[best].kind == TerminalCandidate::Kind::End) return partial;

        std::string token = candidates[best].kind == TerminalCandidate::Kind::Literal
                                ? candidates[best].text
                                : scores[best].literal;
        grammar.step(state, token);
        if (!partial.empty()) partial += ' ';
        partial += token;
    }
    throw DecodeError(DecodeError::Kind::StepLimitExceeded, "terminal budget exhausted");
}

}  // namespace coxql
