#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "coxql/ast.hpp"

namespace coxql {

enum class ParseErrorKind : std::uint8_t {
    EmptyQuery,
    UnknownOperation,
    IllegalSlot,
    MissingSlot,
    MissingNumber,
    NumberOutOfRange,
    MissingInstanceFilter,
    TrailingTokens,
    IllegalConnective,
    MisplacedOperation,
};

std::string_view parse_error_kind_name(ParseErrorKind kind);

struct ParseError {
    ParseErrorKind kind = ParseErrorKind::EmptyQuery;
    std::string operation;  // token of the operation involved, if any
    std::string offending;  // offending token span, space-joined
    std::size_t token_index = 0;
    std::string message() const;
};

struct ParseResult {
    std::optional<QueryAst> ast;
    std::optional<ParseError> error;
    bool ok() const { return ast.has_value(); }
    explicit operator bool() const { return ok(); }
};

enum class ViolationKind : std::uint8_t {
    IllegalSlot,
    MissingSlot,
    SlotArity,
    SlotOrder,
    NumberBounds,
    MissingInstanceFilter,
    IllegalConnective,
    MisplacedOperation,
};

std::string_view violation_kind_name(ViolationKind kind);

struct Violation {
    ViolationKind kind;
    OperationKind op;
    std::string detail;
};

/// Violations are data, not failures; an empty report means the AST is
/// exactly a sentence of the canonical query language.
struct ValidationReport {
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
    bool has(ViolationKind kind) const;
    std::string summary() const;
};

struct DefaultFillResult {
    std::optional<QueryAst> ast;
    std::string missing;  // "<op>.<position>" when a mandatory slot has no default
    bool ok() const { return ast.has_value(); }
};

/// Raised by canonicalize() when handed an AST that fails validation.
class InvalidAstError : public std::runtime_error {
public:
    explicit InvalidAstError(const std::string& what) : std::runtime_error(what) {}
};

/// Lower-cases and splits on whitespace.
std::vector<std::string> tokenize_query(std::string_view text);

/// Strict parse of a query string into a validated, default-filled AST.
/// Accepts alias spellings and the shortened attribution form
/// ("nlpattribute default"), normalizing both.
ParseResult parse_query(std::string_view text);

/// Renders the canonical single-space, lower-case string with defaults
/// explicit. Throws InvalidAstError when validate(ast) is non-empty.
std::string canonicalize(const QueryAst& ast);

ValidationReport validate(const QueryAst& ast);

/// Fills every unset slot position with its schema default. Idempotent;
/// never alters slots already set.
DefaultFillResult default_fill(const QueryAst& ast);

/// canonicalize(parse_query(text)), or nullopt when text does not parse.
std::optional<std::string> normalize_query(std::string_view text);

/// Surface normalization only: lower-case, collapse whitespace, resolve alias
/// tokens and join multi-word method names. No grammar repair: omitted
/// defaults stay omitted. This is the exact-match comparison form.
std::string normalize_surface(std::string_view text);

}  // namespace coxql
