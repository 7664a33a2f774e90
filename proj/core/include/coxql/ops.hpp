#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "coxql/slots.hpp"

namespace coxql {

/// Every operation the query language knows about: 23 terminal operations
/// plus 8 filter/logic operations. `And`/`Or` are connectives and never head
/// a clause of their own.
enum class OperationKind : std::uint8_t {
    Predict,
    Likelihood,
    Mistake,
    Score,
    NlpAttribute,
    Rationalize,
    Influence,
    Cfe,
    Adversarial,
    Augment,
    Show,
    CountData,
    Label,
    Keywords,
    Similarity,
    EditLabel,
    Learn,
    Unlearn,
    Function,
    QaTutorial,
    Data,
    Model,
    Domain,
    Filter,
    PredFilter,
    LabelFilter,
    LengthFilter,
    PreviousFilter,
    Includes,
    And,
    Or,
};

inline constexpr std::size_t kOperationCount = 31;
inline constexpr std::size_t kTerminalOperationCount = 23;

enum class Category : std::uint8_t {
    LocalPrediction,
    GlobalPrediction,
    LocalExplanation,
    Perturbation,
    Data,
    Modification,
    Meta,
    FilterLogic,
};

inline constexpr std::size_t kCategoryCount = 8;

/// One argument position in an operation schema.
struct SlotPosition {
    std::string name;
    std::vector<SlotClass> allowed;
    std::optional<SlotValue> preset_default;  // empty: value is mandatory
};

struct OperationSpec {
    OperationKind kind;
    std::string token;
    Category category;
    std::vector<SlotPosition> positions;
    bool requires_instance_filter = false;
};

/// Read-only registry of all operation schemas. Built once, safe to share.
class OperationRegistry {
public:
    static const OperationRegistry& instance();

    std::span<const OperationSpec> all() const { return specs_; }
    const OperationSpec& spec(OperationKind kind) const;

    /// Token lookup, alias-aware (similar -> similarity, tutorial ->
    /// qatutorial, attribute -> nlpattribute).
    std::optional<OperationKind> from_token(std::string_view tok) const;

    OperationRegistry(const OperationRegistry&) = delete;
    OperationRegistry& operator=(const OperationRegistry&) = delete;

private:
    OperationRegistry();
    std::vector<OperationSpec> specs_;
};

std::string_view token_for(OperationKind kind);
Category category_of(OperationKind kind);
std::string_view category_name(Category c);
std::optional<Category> category_from_name(std::string_view name);

/// Terminal operations are the 23 non-filter, non-logic ones.
bool is_terminal_operation(OperationKind kind);
/// The six clause-forming filters (excludes the and/or connectives).
bool is_filter_operation(OperationKind kind);
bool is_connective(OperationKind kind);

const OperationSpec& spec_for(OperationKind kind);
std::optional<OperationKind> operation_from_token(std::string_view tok);

}  // namespace coxql
