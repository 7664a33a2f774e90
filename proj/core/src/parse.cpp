#include "coxql/parse.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <sstream>

namespace coxql {

namespace {

std::int64_t to_number(std::string_view tok) {
    std::int64_t value = 0;
    std::from_chars(tok.data(), tok.data() + tok.size(), value);
    return value;
}

struct SlotMatch {
    enum class Status { NoMatch, Matched, Failed };
    Status status = Status::NoMatch;
    SlotValue value{All{}};
    std::size_t next = 0;
    ParseError error;
};

SlotMatch fail(ParseError err) {
    SlotMatch m;
    m.status = SlotMatch::Status::Failed;
    m.error = std::move(err);
    return m;
}

SlotMatch matched(SlotValue value, std::size_t next) {
    SlotMatch m;
    m.status = SlotMatch::Status::Matched;
    m.value = std::move(value);
    m.next = next;
    return m;
}

// Multi-word attribution methods are accepted space-separated and joined.
std::optional<std::pair<AttributionMethod, std::size_t>> match_method(
    const std::vector<std::string>& toks, std::size_t i) {
    if (i + 2 < toks.size() && toks[i] == "input" && toks[i + 1] == "x" &&
        toks[i + 2] == "gradient") {
        return {{AttributionMethod::InputXGradient, i + 3}};
    }
    if (i + 1 < toks.size() && toks[i] == "integrated" && toks[i + 1] == "gradient") {
        return {{AttributionMethod::IntegratedGradient, i + 2}};
    }
    if (i + 1 < toks.size() && toks[i] == "input" && toks[i + 1] == "gradient") {
        return {{AttributionMethod::InputXGradient, i + 2}};
    }
    if (auto m = method_from_token(toks[i])) return {{*m, i + 1}};
    return std::nullopt;
}

// Tries to read one slot of class `cls` at toks[i]. A keyword that commits the
// class (topk, id, a length level) turns a malformed tail into a hard error.
SlotMatch match_slot(SlotClass cls, const OperationSpec& spec,
                     const std::vector<std::string>& toks, std::size_t i,
                     std::size_t base_index) {
    const std::string& tok = toks[i];
    switch (cls) {
        case SlotClass::TopK: {
            if (tok != "topk") return {};
            if (i + 1 >= toks.size() || !is_number_token(toks[i + 1])) {
                return fail({ParseErrorKind::MissingNumber, spec.token, "topk", base_index + i});
            }
            std::int64_t n = to_number(toks[i + 1]);
            if (n < 1) {
                return fail({ParseErrorKind::NumberOutOfRange, spec.token, toks[i + 1],
                             base_index + i + 1});
            }
            return matched(TopK{n}, i + 2);
        }
        case SlotClass::All:
            if (tok == "all") return matched(All{}, i + 1);
            return {};
        case SlotClass::MistakeMode:
            if (auto m = mistake_mode_from_token(tok)) return matched(*m, i + 1);
            return {};
        case SlotClass::Metric:
            if (auto m = metric_from_token(tok)) return matched(*m, i + 1);
            return {};
        case SlotClass::Method:
            if (auto m = match_method(toks, i)) return matched(m->first, m->second);
            return {};
        case SlotClass::Topic:
            if (auto t = topic_from_token(tok)) return matched(*t, i + 1);
            return {};
        case SlotClass::Length: {
            auto level = length_level_from_token(tok);
            if (!level) return {};
            if (i + 1 >= toks.size() || !length_cmp_from_token(toks[i + 1])) {
                return fail({ParseErrorKind::IllegalSlot, spec.token,
                             i + 1 < toks.size() ? toks[i + 1] : tok, base_index + i + 1});
            }
            if (i + 2 >= toks.size() || !is_number_token(toks[i + 2])) {
                return fail({ParseErrorKind::MissingNumber, spec.token, toks[i + 1],
                             base_index + i + 1});
            }
            std::int64_t len = to_number(toks[i + 2]);
            if (len < 1) {
                return fail({ParseErrorKind::NumberOutOfRange, spec.token, toks[i + 2],
                             base_index + i + 2});
            }
            return matched(LengthSpec{*level, *length_cmp_from_token(toks[i + 1]), len}, i + 3);
        }
        case SlotClass::Label:
            if (is_word_token(tok)) return matched(Label{tok}, i + 1);
            return {};
        case SlotClass::Token:
            if (is_word_token(tok)) return matched(Token{tok}, i + 1);
            return {};
        case SlotClass::Id: {
            if (tok != "id") return {};
            if (i + 1 >= toks.size() || !is_number_token(toks[i + 1])) {
                return fail({ParseErrorKind::MissingNumber, spec.token, "id", base_index + i});
            }
            return matched(Id{to_number(toks[i + 1])}, i + 2);
        }
    }
    return {};
}

struct ClauseParse {
    std::optional<ParseError> error;
    OperationKind kind = OperationKind::CountData;
    std::vector<SlotValue> slots;
};

ClauseParse parse_clause(const std::vector<std::string>& toks, std::size_t begin,
                         std::size_t end, std::size_t base_index, bool fill_defaults) {
    ClauseParse out;
    auto kind = operation_from_token(toks[begin]);
    if (!kind || is_connective(*kind)) {
        out.error = ParseError{ParseErrorKind::UnknownOperation, "", toks[begin], base_index + begin};
        return out;
    }
    out.kind = *kind;
    const OperationSpec& spec = spec_for(*kind);

    // The local token window for this clause.
    std::vector<std::string> window(toks.begin() + begin + 1, toks.begin() + end);
    std::size_t i = 0;
    for (const SlotPosition& position : spec.positions) {
        bool consumed = false;
        if (i < window.size()) {
            for (SlotClass cls : position.allowed) {
                SlotMatch m = match_slot(cls, spec, window, i, base_index + begin + 1);
                if (m.status == SlotMatch::Status::Failed) {
                    out.error = m.error;
                    return out;
                }
                if (m.status == SlotMatch::Status::Matched) {
                    out.slots.push_back(m.value);
                    i = m.next;
                    consumed = true;
                    break;
                }
            }
        }
        if (consumed) continue;
        if (fill_defaults && position.preset_default) {
            out.slots.push_back(*position.preset_default);
            continue;
        }
        if (i < window.size()) {
            out.error = ParseError{ParseErrorKind::IllegalSlot, spec.token, window[i],
                                   base_index + begin + 1 + i};
        } else {
            out.error = ParseError{ParseErrorKind::MissingSlot, spec.token, position.name,
                                   base_index + end};
        }
        return out;
    }
    if (i < window.size()) {
        std::string rest;
        for (std::size_t j = i; j < window.size(); ++j) {
            if (!rest.empty()) rest += ' ';
            rest += window[j];
        }
        out.error = ParseError{ParseErrorKind::TrailingTokens, spec.token, rest,
                               base_index + begin + 1 + i};
    }
    return out;
}

void walk_terminal_slots(const OperationSpec& spec, const std::vector<SlotValue>& slots,
                         ValidationReport& report) {
    std::size_t j = 0;
    std::vector<Violation> local;
    for (const SlotPosition& position : spec.positions) {
        if (j < slots.size() &&
            std::find(position.allowed.begin(), position.allowed.end(),
                      slot_class(slots[j])) != position.allowed.end()) {
            ++j;
            continue;
        }
        local.push_back({ViolationKind::MissingSlot, spec.kind,
                         spec.token + "." + position.name});
    }
    if (j < slots.size()) {
        if (local.empty()) {
            local.push_back({ViolationKind::SlotArity, spec.kind,
                             spec.token + " takes at most " +
                                 std::to_string(spec.positions.size()) + " slot(s)"});
        } else {
            local.push_back({ViolationKind::IllegalSlot, spec.kind,
                             std::string(slot_class_name(slot_class(slots[j]))) +
                                 " not legal here"});
        }
    }
    // Same class multiset in the wrong order collapses to one order violation.
    if (!local.empty() && slots.size() == spec.positions.size()) {
        std::vector<bool> used(slots.size(), false);
        bool permuted = true;
        for (const SlotPosition& position : spec.positions) {
            bool found = false;
            for (std::size_t s = 0; s < slots.size(); ++s) {
                if (used[s]) continue;
                if (std::find(position.allowed.begin(), position.allowed.end(),
                              slot_class(slots[s])) != position.allowed.end()) {
                    used[s] = true;
                    found = true;
                    break;
                }
            }
            if (!found) {
                permuted = false;
                break;
            }
        }
        if (permuted) {
            report.violations.push_back(
                {ViolationKind::SlotOrder, spec.kind, spec.token + " slots out of order"});
            return;
        }
    }
    for (auto& v : local) report.violations.push_back(std::move(v));
}

bool is_canonical_word(const std::string& text) {
    if (!is_word_token(text)) return false;
    return std::none_of(text.begin(), text.end(), [](unsigned char c) {
        return std::isupper(c) || std::isspace(c);
    });
}

void check_bounds(OperationKind op, const std::vector<SlotValue>& slots,
                  ValidationReport& report) {
    for (const SlotValue& slot : slots) {
        if (const auto* k = std::get_if<TopK>(&slot); k && k->n < 1) {
            report.violations.push_back({ViolationKind::NumberBounds, op, "topk must be >= 1"});
        } else if (const auto* id = std::get_if<Id>(&slot); id && id->value < 0) {
            report.violations.push_back({ViolationKind::NumberBounds, op, "id must be >= 0"});
        } else if (const auto* ls = std::get_if<LengthSpec>(&slot); ls && ls->len < 1) {
            report.violations.push_back({ViolationKind::NumberBounds, op, "len must be >= 1"});
        } else if (const auto* lb = std::get_if<Label>(&slot); lb && !is_canonical_word(lb->text)) {
            report.violations.push_back({ViolationKind::IllegalSlot, op,
                                         "label must be a single lower-case word"});
        } else if (const auto* tk = std::get_if<Token>(&slot); tk && !is_canonical_word(tk->text)) {
            report.violations.push_back({ViolationKind::IllegalSlot, op,
                                         "token must be a single lower-case word"});
        }
    }
}

}  // namespace

std::string_view parse_error_kind_name(ParseErrorKind kind) {
    switch (kind) {
        case ParseErrorKind::EmptyQuery: return "empty-query";
        case ParseErrorKind::UnknownOperation: return "unknown-operation";
        case ParseErrorKind::IllegalSlot: return "illegal-slot";
        case ParseErrorKind::MissingSlot: return "missing-slot";
        case ParseErrorKind::MissingNumber: return "missing-number";
        case ParseErrorKind::NumberOutOfRange: return "number-out-of-range";
        case ParseErrorKind::MissingInstanceFilter: return "missing-instance-filter";
        case ParseErrorKind::TrailingTokens: return "trailing-tokens";
        case ParseErrorKind::IllegalConnective: return "illegal-connective";
        case ParseErrorKind::MisplacedOperation: return "misplaced-operation";
    }
    return "?";
}

std::string ParseError::message() const {
    std::ostringstream os;
    os << parse_error_kind_name(kind);
    if (!operation.empty()) os << " [" << operation << "]";
    if (!offending.empty()) os << " at '" << offending << "' (token " << token_index << ")";
    return os.str();
}

std::string_view violation_kind_name(ViolationKind kind) {
    switch (kind) {
        case ViolationKind::IllegalSlot: return "illegal-slot";
        case ViolationKind::MissingSlot: return "missing-slot";
        case ViolationKind::SlotArity: return "slot-arity";
        case ViolationKind::SlotOrder: return "slot-order";
        case ViolationKind::NumberBounds: return "number-bounds";
        case ViolationKind::MissingInstanceFilter: return "missing-instance-filter";
        case ViolationKind::IllegalConnective: return "illegal-connective";
        case ViolationKind::MisplacedOperation: return "misplaced-operation";
    }
    return "?";
}

bool ValidationReport::has(ViolationKind kind) const {
    return std::any_of(violations.begin(), violations.end(),
                       [kind](const Violation& v) { return v.kind == kind; });
}

std::string ValidationReport::summary() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < violations.size(); ++i) {
        if (i) os << "; ";
        os << violation_kind_name(violations[i].kind) << " [" << violations[i].detail << "]";
    }
    return os.str();
}

std::vector<std::string> tokenize_query(std::string_view text) {
    std::vector<std::string> toks;
    std::string cur;
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!cur.empty()) toks.push_back(std::move(cur)), cur.clear();
        } else {
            cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        }
    }
    if (!cur.empty()) toks.push_back(std::move(cur));
    return toks;
}

ParseResult parse_query(std::string_view text) {
    ParseResult result;
    std::vector<std::string> toks = tokenize_query(text);
    if (toks.empty()) {
        result.error = ParseError{ParseErrorKind::EmptyQuery, "", "", 0};
        return result;
    }

    // Clause boundaries fall on the and/or connectives.
    struct RawClause {
        std::size_t begin, end;
        std::optional<Connective> conn_after;
    };
    std::vector<RawClause> clauses;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= toks.size(); ++i) {
        bool is_sep = i < toks.size() && (toks[i] == "and" || toks[i] == "or");
        if (i == toks.size() || is_sep) {
            if (start == i) {
                result.error = ParseError{ParseErrorKind::IllegalConnective, "",
                                          i < toks.size() ? toks[i] : "", i};
                return result;
            }
            RawClause rc{start, i, std::nullopt};
            if (is_sep) rc.conn_after = toks[i] == "and" ? Connective::And : Connective::Or;
            clauses.push_back(rc);
            start = i + 1;
        }
    }
    if (clauses.back().conn_after) {  // trailing connective
        result.error = ParseError{ParseErrorKind::IllegalConnective, "",
                                  std::string(token_for(*clauses.back().conn_after)),
                                  toks.size() - 1};
        return result;
    }

    QueryAst ast;
    for (std::size_t c = 0; c + 1 < clauses.size(); ++c) {
        ClauseParse cp = parse_clause(toks, clauses[c].begin, clauses[c].end, 0, false);
        if (cp.error) {
            result.error = cp.error;
            return result;
        }
        if (!is_filter_operation(cp.kind)) {
            result.error = ParseError{ParseErrorKind::MisplacedOperation,
                                      std::string(token_for(cp.kind)), toks[clauses[c].begin],
                                      clauses[c].begin};
            return result;
        }
        ast.filters.push_back({FilterClause{cp.kind, std::move(cp.slots)},
                               *clauses[c].conn_after});
    }

    const RawClause& last = clauses.back();
    ClauseParse terminal = parse_clause(toks, last.begin, last.end, 0, true);
    if (terminal.error) {
        result.error = terminal.error;
        return result;
    }
    ast.terminal = terminal.kind;
    ast.slots = std::move(terminal.slots);

    if (is_terminal_operation(ast.terminal) && !ast.filters.empty() &&
        ast.filters.back().conn == Connective::Or) {
        result.error = ParseError{ParseErrorKind::IllegalConnective,
                                  std::string(token_for(ast.terminal)), "or", last.begin - 1};
        return result;
    }
    if (spec_for(ast.terminal).requires_instance_filter && ast.filters.empty()) {
        result.error = ParseError{ParseErrorKind::MissingInstanceFilter,
                                  std::string(token_for(ast.terminal)), toks[last.begin],
                                  last.begin};
        return result;
    }
    result.ast = std::move(ast);
    return result;
}

ValidationReport validate(const QueryAst& ast) {
    ValidationReport report;
    if (is_connective(ast.terminal)) {
        report.violations.push_back({ViolationKind::MisplacedOperation, ast.terminal,
                                     "connective cannot head a clause"});
        return report;
    }
    for (std::size_t i = 0; i < ast.filters.size(); ++i) {
        const FilterClause& clause = ast.filters[i].clause;
        if (!is_filter_operation(clause.kind)) {
            report.violations.push_back({ViolationKind::MisplacedOperation, clause.kind,
                                         "only filters may precede the terminal"});
            continue;
        }
        walk_terminal_slots(spec_for(clause.kind), clause.args, report);
        check_bounds(clause.kind, clause.args, report);
    }
    if (!ast.filters.empty() && is_terminal_operation(ast.terminal) &&
        ast.filters.back().conn == Connective::Or) {
        report.violations.push_back({ViolationKind::IllegalConnective, ast.terminal,
                                     "'or' cannot join a filter to a terminal operation"});
    }
    const OperationSpec& spec = spec_for(ast.terminal);
    walk_terminal_slots(spec, ast.slots, report);
    check_bounds(ast.terminal, ast.slots, report);
    if (spec.requires_instance_filter && ast.filters.empty()) {
        report.violations.push_back({ViolationKind::MissingInstanceFilter, ast.terminal,
                                     spec.token + " requires an instance filter"});
    }
    return report;
}

DefaultFillResult default_fill(const QueryAst& ast) {
    DefaultFillResult result;
    if (is_connective(ast.terminal)) {
        result.missing = std::string(token_for(ast.terminal));
        return result;
    }
    const OperationSpec& spec = spec_for(ast.terminal);
    QueryAst filled = ast;
    std::vector<SlotValue> slots;
    std::size_t j = 0;
    for (const SlotPosition& position : spec.positions) {
        if (j < ast.slots.size() &&
            std::find(position.allowed.begin(), position.allowed.end(),
                      slot_class(ast.slots[j])) != position.allowed.end()) {
            slots.push_back(ast.slots[j]);
            ++j;
            continue;
        }
        if (position.preset_default) {
            slots.push_back(*position.preset_default);
            continue;
        }
        result.missing = spec.token + "." + position.name;
        return result;
    }
    for (; j < ast.slots.size(); ++j) slots.push_back(ast.slots[j]);
    filled.slots = std::move(slots);
    result.ast = std::move(filled);
    return result;
}

std::string canonicalize(const QueryAst& ast) {
    ValidationReport report = validate(ast);
    if (!report.ok()) throw InvalidAstError("invalid ast: " + report.summary());
    std::string out;
    auto append = [&out](std::string_view part) {
        if (!out.empty()) out += ' ';
        out += part;
    };
    for (const FilterLink& link : ast.filters) {
        append(token_for(link.clause.kind));
        for (const SlotValue& arg : link.clause.args) append(render_slot(arg));
        append(token_for(link.conn));
    }
    append(token_for(ast.terminal));
    for (const SlotValue& slot : ast.slots) append(render_slot(slot));
    return out;
}

std::optional<std::string> normalize_query(std::string_view text) {
    ParseResult parsed = parse_query(text);
    if (!parsed.ok()) return std::nullopt;
    return canonicalize(*parsed.ast);
}

std::string normalize_surface(std::string_view text) {
    std::vector<std::string> toks = tokenize_query(text);
    std::vector<std::string> out;
    for (std::size_t i = 0; i < toks.size(); ++i) {
        if (i + 2 < toks.size() && toks[i] == "input" && toks[i + 1] == "x" &&
            toks[i + 2] == "gradient") {
            out.emplace_back("input_x_gradient");
            i += 2;
            continue;
        }
        if (i + 1 < toks.size() && toks[i] == "integrated" && toks[i + 1] == "gradient") {
            out.emplace_back("integrated_gradient");
            ++i;
            continue;
        }
        if (i + 1 < toks.size() && toks[i] == "input" && toks[i + 1] == "gradient") {
            out.emplace_back("input_x_gradient");
            ++i;
            continue;
        }
        if (toks[i] == "similar") {
            out.emplace_back("similarity");
        } else if (toks[i] == "tutorial") {
            out.emplace_back("qatutorial");
        } else if (toks[i] == "attribute") {
            out.emplace_back("nlpattribute");
        } else if (toks[i] == "qada") {
            out.emplace_back("qaaugment");
        } else if (toks[i] == "inputxgradient") {
            out.emplace_back("input_x_gradient");
        } else if (toks[i] == "integratedgradient") {
            out.emplace_back("integrated_gradient");
        } else {
            out.push_back(toks[i]);
        }
    }
    std::string joined;
    for (const std::string& tok : out) {
        if (!joined.empty()) joined += ' ';
        joined += tok;
    }
    return joined;
}

std::string_view token_for(Connective c) {
    return c == Connective::And ? "and" : "or";
}

}  // namespace coxql
