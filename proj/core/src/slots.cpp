#include "coxql/slots.hpp"

#include <array>
#include <cctype>

namespace coxql {

namespace {

template <typename Enum, std::size_t N>
std::optional<Enum> lookup(const std::array<std::pair<std::string_view, Enum>, N>& table,
                           std::string_view tok) {
    for (const auto& [text, value] : table) {
        if (text == tok) return value;
    }
    return std::nullopt;
}

}  // namespace

SlotClass slot_class(const SlotValue& value) {
    return static_cast<SlotClass>(value.index());
}

std::string_view slot_class_name(SlotClass c) {
    switch (c) {
        case SlotClass::TopK: return "topk";
        case SlotClass::All: return "all";
        case SlotClass::MistakeMode: return "mistake-mode";
        case SlotClass::Metric: return "metric";
        case SlotClass::Method: return "method";
        case SlotClass::Topic: return "topic";
        case SlotClass::Length: return "length";
        case SlotClass::Label: return "label";
        case SlotClass::Token: return "token";
        case SlotClass::Id: return "id";
    }
    return "?";
}

std::string render_slot(const SlotValue& value) {
    struct Renderer {
        std::string operator()(const TopK& v) const { return "topk " + std::to_string(v.n); }
        std::string operator()(const All&) const { return "all"; }
        std::string operator()(MistakeMode m) const { return std::string(token_for(m)); }
        std::string operator()(Metric m) const { return std::string(token_for(m)); }
        std::string operator()(AttributionMethod m) const { return std::string(token_for(m)); }
        std::string operator()(TutorialTopic t) const { return std::string(token_for(t)); }
        std::string operator()(const LengthSpec& s) const {
            std::string out(token_for(s.level));
            out += ' ';
            out += token_for(s.cmp);
            out += ' ';
            out += std::to_string(s.len);
            return out;
        }
        std::string operator()(const Label& l) const { return l.text; }
        std::string operator()(const Token& t) const { return t.text; }
        std::string operator()(const Id& id) const { return "id " + std::to_string(id.value); }
    };
    return std::visit(Renderer{}, value);
}

std::string_view token_for(MistakeMode m) {
    return m == MistakeMode::Sample ? "sample" : "count";
}

std::string_view token_for(Metric m) {
    switch (m) {
        case Metric::Accuracy: return "accuracy";
        case Metric::Precision: return "precision";
        case Metric::Recall: return "recall";
        case Metric::F1: return "f1";
        case Metric::Roc: return "roc";
    }
    return "?";
}

std::string_view token_for(AttributionMethod m) {
    switch (m) {
        case AttributionMethod::Default: return "default";
        case AttributionMethod::Attention: return "attention";
        case AttributionMethod::Lime: return "lime";
        case AttributionMethod::IntegratedGradient: return "integrated_gradient";
        case AttributionMethod::InputXGradient: return "input_x_gradient";
    }
    return "?";
}

std::string_view token_for(TutorialTopic t) {
    switch (t) {
        case TutorialTopic::QaAttribute: return "qaattribute";
        case TutorialTopic::QaRationalize: return "qarationalize";
        case TutorialTopic::QaInfluence: return "qainfluence";
        case TutorialTopic::QaCfe: return "qacfe";
        case TutorialTopic::QaAdversarial: return "qaadversarial";
        case TutorialTopic::QaAugment: return "qaaugment";
        case TutorialTopic::QaEditLabel: return "qaeditlabel";
        case TutorialTopic::QaLearn: return "qalearn";
        case TutorialTopic::QaUnlearn: return "qaunlearn";
    }
    return "?";
}

std::string_view token_for(LengthLevel l) {
    switch (l) {
        case LengthLevel::Character: return "character";
        case LengthLevel::Token: return "token";
        case LengthLevel::Sentence: return "sentence";
    }
    return "?";
}

std::string_view token_for(LengthCmp c) {
    return c == LengthCmp::Gt ? "gt" : "lt";
}

std::optional<MistakeMode> mistake_mode_from_token(std::string_view tok) {
    static constexpr std::array<std::pair<std::string_view, MistakeMode>, 2> table{{
        {"sample", MistakeMode::Sample},
        {"count", MistakeMode::Count},
    }};
    return lookup(table, tok);
}

std::optional<Metric> metric_from_token(std::string_view tok) {
    static constexpr std::array<std::pair<std::string_view, Metric>, 5> table{{
        {"accuracy", Metric::Accuracy},
        {"precision", Metric::Precision},
        {"recall", Metric::Recall},
        {"f1", Metric::F1},
        {"roc", Metric::Roc},
    }};
    return lookup(table, tok);
}

std::optional<AttributionMethod> method_from_token(std::string_view tok) {
    static constexpr std::array<std::pair<std::string_view, AttributionMethod>, 7> table{{
        {"default", AttributionMethod::Default},
        {"attention", AttributionMethod::Attention},
        {"lime", AttributionMethod::Lime},
        {"integrated_gradient", AttributionMethod::IntegratedGradient},
        {"integratedgradient", AttributionMethod::IntegratedGradient},
        {"input_x_gradient", AttributionMethod::InputXGradient},
        {"inputxgradient", AttributionMethod::InputXGradient},
    }};
    return lookup(table, tok);
}

std::optional<TutorialTopic> topic_from_token(std::string_view tok) {
    static constexpr std::array<std::pair<std::string_view, TutorialTopic>, 10> table{{
        {"qaattribute", TutorialTopic::QaAttribute},
        {"qarationalize", TutorialTopic::QaRationalize},
        {"qainfluence", TutorialTopic::QaInfluence},
        {"qacfe", TutorialTopic::QaCfe},
        {"qaadversarial", TutorialTopic::QaAdversarial},
        {"qaaugment", TutorialTopic::QaAugment},
        {"qada", TutorialTopic::QaAugment},
        {"qaeditlabel", TutorialTopic::QaEditLabel},
        {"qalearn", TutorialTopic::QaLearn},
        {"qaunlearn", TutorialTopic::QaUnlearn},
    }};
    return lookup(table, tok);
}

std::optional<LengthLevel> length_level_from_token(std::string_view tok) {
    static constexpr std::array<std::pair<std::string_view, LengthLevel>, 3> table{{
        {"character", LengthLevel::Character},
        {"token", LengthLevel::Token},
        {"sentence", LengthLevel::Sentence},
    }};
    return lookup(table, tok);
}

std::optional<LengthCmp> length_cmp_from_token(std::string_view tok) {
    static constexpr std::array<std::pair<std::string_view, LengthCmp>, 2> table{{
        {"gt", LengthCmp::Gt},
        {"lt", LengthCmp::Lt},
    }};
    return lookup(table, tok);
}

bool is_number_token(std::string_view tok) {
    if (tok.empty()) return false;
    for (char c : tok) {
        if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    }
    return true;
}

bool is_word_token(std::string_view tok) {
    if (tok.empty() || is_number_token(tok)) return false;
    return tok != "and" && tok != "or";
}

}  // namespace coxql
