#pragma once

#include <string>
#include <vector>

#include "coxql/ops.hpp"
#include "coxql/slots.hpp"

namespace coxql {

enum class Connective : std::uint8_t { And, Or };

std::string_view token_for(Connective c);

/// One filter stage, e.g. `filter id 3` or `labelfilter positive`.
struct FilterClause {
    OperationKind kind = OperationKind::Filter;
    std::vector<SlotValue> args;
    bool operator==(const FilterClause&) const = default;
};

/// A filter clause plus the connective joining it to the next element of the
/// query (another filter, or the terminal clause).
struct FilterLink {
    FilterClause clause;
    Connective conn = Connective::And;
    bool operator==(const FilterLink&) const = default;
};

/// Structured form of one query: an optional filter chain and a single
/// terminal clause. A query that is nothing but filters parses with its last
/// filter clause as the terminal.
struct QueryAst {
    std::vector<FilterLink> filters;
    OperationKind terminal = OperationKind::CountData;
    std::vector<SlotValue> slots;
    bool operator==(const QueryAst&) const = default;
};

}  // namespace coxql
