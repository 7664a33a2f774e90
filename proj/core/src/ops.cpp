#include "coxql/ops.hpp"

#include <stdexcept>
#include <unordered_map>

namespace coxql {

namespace {

SlotPosition pos(std::string name, std::vector<SlotClass> allowed,
                 std::optional<SlotValue> preset = std::nullopt) {
    return SlotPosition{std::move(name), std::move(allowed), std::move(preset)};
}

}  // namespace

OperationRegistry::OperationRegistry() {
    specs_ = {
        {OperationKind::Predict, "predict", Category::LocalPrediction, {}, true},
        {OperationKind::Likelihood, "likelihood", Category::LocalPrediction, {}, true},
        {OperationKind::Mistake, "mistake", Category::GlobalPrediction,
         {pos("mode", {SlotClass::MistakeMode})}, false},
        {OperationKind::Score, "score", Category::GlobalPrediction,
         {pos("metric", {SlotClass::Metric}, SlotValue{Metric::Accuracy})}, false},
        {OperationKind::NlpAttribute, "nlpattribute", Category::LocalExplanation,
         {pos("range", {SlotClass::All, SlotClass::TopK}, SlotValue{All{}}),
          pos("method", {SlotClass::Method}, SlotValue{AttributionMethod::Default})},
         true},
        {OperationKind::Rationalize, "rationalize", Category::LocalExplanation, {}, true},
        {OperationKind::Influence, "influence", Category::LocalExplanation,
         {pos("topk", {SlotClass::TopK}, SlotValue{TopK{1}})}, true},
        {OperationKind::Cfe, "cfe", Category::Perturbation, {}, true},
        {OperationKind::Adversarial, "adversarial", Category::Perturbation, {}, true},
        {OperationKind::Augment, "augment", Category::Perturbation, {}, true},
        {OperationKind::Show, "show", Category::Data, {}, true},
        {OperationKind::CountData, "countdata", Category::Data, {}, false},
        {OperationKind::Label, "label", Category::Data, {}, false},
        {OperationKind::Keywords, "keywords", Category::Data,
         {pos("topk", {SlotClass::TopK}, SlotValue{TopK{1}})}, false},
        {OperationKind::Similarity, "similarity", Category::Data,
         {pos("topk", {SlotClass::TopK}, SlotValue{TopK{1}})}, true},
        {OperationKind::EditLabel, "editlabel", Category::Modification, {}, true},
        {OperationKind::Learn, "learn", Category::Modification, {}, true},
        {OperationKind::Unlearn, "unlearn", Category::Modification, {}, true},
        {OperationKind::Function, "function", Category::Meta, {}, false},
        {OperationKind::QaTutorial, "qatutorial", Category::Meta,
         {pos("topic", {SlotClass::Topic})}, false},
        {OperationKind::Data, "data", Category::Meta, {}, false},
        {OperationKind::Model, "model", Category::Meta, {}, false},
        {OperationKind::Domain, "domain", Category::Meta, {}, false},
        {OperationKind::Filter, "filter", Category::FilterLogic,
         {pos("id", {SlotClass::Id})}, false},
        {OperationKind::PredFilter, "predfilter", Category::FilterLogic,
         {pos("label", {SlotClass::Label})}, false},
        {OperationKind::LabelFilter, "labelfilter", Category::FilterLogic,
         {pos("label", {SlotClass::Label})}, false},
        {OperationKind::LengthFilter, "lengthfilter", Category::FilterLogic,
         {pos("length", {SlotClass::Length})}, false},
        {OperationKind::PreviousFilter, "previousfilter", Category::FilterLogic, {}, false},
        {OperationKind::Includes, "includes", Category::FilterLogic,
         {pos("token", {SlotClass::Token})}, false},
        {OperationKind::And, "and", Category::FilterLogic, {}, false},
        {OperationKind::Or, "or", Category::FilterLogic, {}, false},
    };
}

const OperationRegistry& OperationRegistry::instance() {
    static const OperationRegistry registry;
    return registry;
}

const OperationSpec& OperationRegistry::spec(OperationKind kind) const {
    return specs_[static_cast<std::size_t>(kind)];
}

std::optional<OperationKind> OperationRegistry::from_token(std::string_view tok) const {
    static const std::unordered_map<std::string_view, OperationKind> index = [] {
        std::unordered_map<std::string_view, OperationKind> m;
        for (const auto& s : OperationRegistry::instance().all()) m.emplace(s.token, s.kind);
        // Accepted alias spellings, normalized on parse.
        m.emplace("similar", OperationKind::Similarity);
        m.emplace("tutorial", OperationKind::QaTutorial);
        m.emplace("attribute", OperationKind::NlpAttribute);
        return m;
    }();
    auto it = index.find(tok);
    if (it == index.end()) return std::nullopt;
    return it->second;
}

std::string_view token_for(OperationKind kind) {
    return OperationRegistry::instance().spec(kind).token;
}

Category category_of(OperationKind kind) {
    return OperationRegistry::instance().spec(kind).category;
}

std::string_view category_name(Category c) {
    switch (c) {
        case Category::LocalPrediction: return "LocalPrediction";
        case Category::GlobalPrediction: return "GlobalPrediction";
        case Category::LocalExplanation: return "LocalExplanation";
        case Category::Perturbation: return "Perturbation";
        case Category::Data: return "Data";
        case Category::Modification: return "Modification";
        case Category::Meta: return "Meta";
        case Category::FilterLogic: return "FilterLogic";
    }
    return "?";
}

std::optional<Category> category_from_name(std::string_view name) {
    for (std::size_t i = 0; i < kCategoryCount; ++i) {
        auto c = static_cast<Category>(i);
        if (category_name(c) == name) return c;
    }
    return std::nullopt;
}

bool is_terminal_operation(OperationKind kind) {
    return static_cast<std::size_t>(kind) < kTerminalOperationCount;
}

bool is_filter_operation(OperationKind kind) {
    switch (kind) {
        case OperationKind::Filter:
        case OperationKind::PredFilter:
        case OperationKind::LabelFilter:
        case OperationKind::LengthFilter:
        case OperationKind::PreviousFilter:
        case OperationKind::Includes:
            return true;
        default:
            return false;
    }
}

bool is_connective(OperationKind kind) {
    return kind == OperationKind::And || kind == OperationKind::Or;
}

const OperationSpec& spec_for(OperationKind kind) {
    return OperationRegistry::instance().spec(kind);
}

std::optional<OperationKind> operation_from_token(std::string_view tok) {
    return OperationRegistry::instance().from_token(tok);
}

}  // namespace coxql
