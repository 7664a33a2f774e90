#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

namespace coxql {

// Slot values are the arguments carried by query clauses. Every value has a
// single canonical token rendering; several accept alias spellings on input.

struct TopK {
    std::int64_t n = 1;  // >= 1
    bool operator==(const TopK&) const = default;
};

struct All {
    bool operator==(const All&) const = default;
};

enum class MistakeMode : std::uint8_t { Sample, Count };

enum class Metric : std::uint8_t { Accuracy, Precision, Recall, F1, Roc };

enum class AttributionMethod : std::uint8_t {
    Default,
    Attention,
    Lime,
    IntegratedGradient,
    InputXGradient,
};

enum class TutorialTopic : std::uint8_t {
    QaAttribute,
    QaRationalize,
    QaInfluence,
    QaCfe,
    QaAdversarial,
    QaAugment,
    QaEditLabel,
    QaLearn,
    QaUnlearn,
};

enum class LengthLevel : std::uint8_t { Character, Token, Sentence };
enum class LengthCmp : std::uint8_t { Gt, Lt };

struct LengthSpec {
    LengthLevel level = LengthLevel::Token;
    LengthCmp cmp = LengthCmp::Gt;
    std::int64_t len = 1;  // >= 1
    bool operator==(const LengthSpec&) const = default;
};

struct Label {
    std::string text;
    bool operator==(const Label&) const = default;
};

struct Token {
    std::string text;
    bool operator==(const Token&) const = default;
};

struct Id {
    std::int64_t value = 0;  // >= 0
    bool operator==(const Id&) const = default;
};

using SlotValue = std::variant<TopK, All, MistakeMode, Metric, AttributionMethod,
                               TutorialTopic, LengthSpec, Label, Token, Id>;

/// Coarse class of a slot value; operation schemas list legal classes per
/// position.
enum class SlotClass : std::uint8_t {
    TopK,
    All,
    MistakeMode,
    Metric,
    Method,
    Topic,
    Length,
    Label,
    Token,
    Id,
};

SlotClass slot_class(const SlotValue& value);
std::string_view slot_class_name(SlotClass c);

/// Canonical token form, e.g. TopK{3} -> "topk 3", LengthSpec -> "token gt 20".
std::string render_slot(const SlotValue& value);

std::string_view token_for(MistakeMode m);
std::string_view token_for(Metric m);
std::string_view token_for(AttributionMethod m);
std::string_view token_for(TutorialTopic t);
std::string_view token_for(LengthLevel l);
std::string_view token_for(LengthCmp c);

std::optional<MistakeMode> mistake_mode_from_token(std::string_view tok);
std::optional<Metric> metric_from_token(std::string_view tok);
// Accepts canonical underscored names plus the joined alias "inputxgradient".
std::optional<AttributionMethod> method_from_token(std::string_view tok);
// Accepts "qada" as an alias of "qaaugment".
std::optional<TutorialTopic> topic_from_token(std::string_view tok);
std::optional<LengthLevel> length_level_from_token(std::string_view tok);
std::optional<LengthCmp> length_cmp_from_token(std::string_view tok);

/// True for tokens usable as free-word arguments (labels, includes tokens):
/// not a connective, not numeric.
bool is_word_token(std::string_view tok);

/// True when every character is a decimal digit.
bool is_number_token(std::string_view tok);

}  // namespace coxql
